"""Measure-balanced recursive box splitting with convergence diagnostics.

Each step halves a box by a hyperplane through a lattice breakpoint.  The
direction is the axis of the longest physical edge (ties to the smallest
axis index).  The position must satisfy two constraints: the child mass
ratio lies strictly inside (c, 1-c), and the straight segment between the
two child average points stays inside the enlarged admissible band
{1 <= gauge <= Q1}, checked by dense sampling.  Among feasible positions
the one with ratio closest to 1/2 wins, ties to the smaller index.

Iterating M times produces a complete binary tree of 2**M leaves that
partition the root.  The leaf-piecewise average functions converge to the
weight as the leaf diameters shrink; the chain report tracks the
mass-weighted candidate sums whose monotone decrease is the quantitative
content of segment concavity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .characteristics import pair_gauge
from .errors import InfeasibleSplitError, PreconditionError, ZeroMeasureBoxError
from .exponents import ClassKind, PParam, _as_pparam
from .grids import BoxIdx, GridMeasure, PrefixTables, WeightGrid

DEFAULT_RATIO_C = 0.2
DEFAULT_SEGMENT_SAMPLES = 257


class AvgPoint(NamedTuple):
    """Average pair of a box: x1 = <w>, x2 = <w**p1> (Muckenhoupt) or <w**p>."""

    x1: float
    x2: float


@dataclass(frozen=True)
class SplitConfig:
    """Parameters of a splitting run.

    Q bounds the characteristic of the weight on the root, Q1 > Q is the
    enlarged band that the child segments must not leave, c the mass ratio
    window and levels the tree depth.
    """

    kind: ClassKind
    p: PParam
    Q: float
    Q1: float
    c: float = DEFAULT_RATIO_C
    levels: int = 8
    segment_samples: int = DEFAULT_SEGMENT_SAMPLES

    def __post_init__(self):
        object.__setattr__(self, "p", _as_pparam(self.p))
        if not (self.Q1 > self.Q > 1.0):
            raise PreconditionError(f"need Q1 > Q > 1, got Q={self.Q}, Q1={self.Q1}")
        if not (0.0 < self.c <= 0.5):
            raise PreconditionError(f"ratio constant c must lie in (0, 1/2], got {self.c}")
        if self.levels < 0:
            raise PreconditionError("levels must be nonnegative")
        if self.segment_samples < 2:
            raise PreconditionError("segment_samples must be at least 2")

    @property
    def moment_exponent(self) -> float:
        return self.p.p1 if self.kind is ClassKind.MUCKENHOUPT_A else self.p.p


@dataclass
class SplitNode:
    """One box of the split tree with its average point and split record."""

    box: BoxIdx
    level: int
    path: str
    mass: float
    point: AvgPoint
    diameter: float
    axis: int | None = None
    split_index: int | None = None
    split_coord: float | None = None
    ratio: float | None = None
    segment_psi_max: float | None = None
    children: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class SplitTree:
    """Complete binary split tree of the configured depth."""

    config: SplitConfig
    measure: GridMeasure
    weight: WeightGrid
    root: SplitNode
    levels: list[list[SplitNode]]
    tables: PrefixTables = field(repr=False, default=None)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def leaves(self, level: int | None = None) -> list[SplitNode]:
        return self.levels[self.depth if level is None else level]

    def max_diameter(self, level: int) -> float:
        return max(n.diameter for n in self.levels[level])

    def nodes(self):
        for level in self.levels:
            yield from level


def choose_direction(measure: GridMeasure, box: BoxIdx) -> int:
    """Axis of the longest physical edge; ties break to the smallest index."""
    box.check_shape(measure.shape)
    lengths = [measure.edge_length(ax, a, b) for ax, (a, b) in enumerate(box.ranges)]
    return int(np.argmax(lengths))


def segment_max(
    x_a: AvgPoint, x_b: AvgPoint, kind: ClassKind, p, samples: int = DEFAULT_SEGMENT_SAMPLES
) -> float:
    """Max of the gauge over the sampled segment [x_a, x_b], endpoints included."""
    if min(x_a.x1, x_a.x2, x_b.x1, x_b.x2) <= 0.0:
        raise PreconditionError("average points must have positive coordinates")
    lam = np.linspace(0.0, 1.0, samples)
    x1 = lam * x_a.x1 + (1.0 - lam) * x_b.x1
    x2 = lam * x_a.x2 + (1.0 - lam) * x_b.x2
    return float(np.max(pair_gauge(kind, p, x1, x2)))


@dataclass(frozen=True)
class SplitChoice:
    """Accepted split position with its diagnostics."""

    axis: int
    index: int
    coord: float
    ratio: float
    segment_psi_max: float
    left_point: AvgPoint
    right_point: AvgPoint


def _box_point(tables: PrefixTables, box: BoxIdx, s2: float) -> tuple[float, AvgPoint]:
    m = tables.mass_sum(box)
    if m <= 0.0:
        raise ZeroMeasureBoxError(box)
    x1 = tables.moment_sum(1.0, box) / m
    x2 = tables.moment_sum(s2, box) / m
    return m, AvgPoint(x1, x2)


def _split_box(box: BoxIdx, axis: int, index: int) -> tuple[BoxIdx, BoxIdx]:
    a, b = box.ranges[axis]
    left = list(box.ranges)
    right = list(box.ranges)
    left[axis] = (a, index)
    right[axis] = (index, b)
    return BoxIdx(tuple(left)), BoxIdx(tuple(right))


def choose_position(
    measure: GridMeasure,
    weight: WeightGrid,
    box: BoxIdx,
    axis: int,
    config: SplitConfig,
    tables: PrefixTables | None = None,
):
    """Select the split breakpoint along the axis.

    Feasible positions have child mass ratio in (c, 1-c) and segment maximum
    at most Q1; candidates are tried in order of |ratio - 1/2| (ties to the
    smaller index) so the first segment-feasible hit is the winner.  With no
    feasible position an InfeasibleSplitError reports the ratio closest to
    1/2 over all positions and the smallest segment maximum seen inside the
    ratio window.
    """
    s2 = config.moment_exponent
    if tables is None:
        tables = PrefixTables(measure, weight, (1.0, s2))
    a, b = box.ranges[axis]
    if b - a < 2:
        raise InfeasibleSplitError(
            f"box {box} has a single cell along axis {axis}; no interior breakpoint",
            box=box,
        )
    total = tables.mass_sum(box)
    if total <= 0.0:
        raise ZeroMeasureBoxError(box)

    positions = []
    for k in range(a + 1, b):
        left, _ = _split_box(box, axis, k)
        ratio = tables.mass_sum(left) / total
        positions.append((k, ratio))
    best_any = min(positions, key=lambda kr: (abs(kr[1] - 0.5), kr[0]))

    window = [kr for kr in positions if config.c < kr[1] < 1.0 - config.c]
    window.sort(key=lambda kr: (abs(kr[1] - 0.5), kr[0]))
    best_psi = None
    for k, ratio in window:
        left, right = _split_box(box, axis, k)
        _, x_left = _box_point(tables, left, s2)
        _, x_right = _box_point(tables, right, s2)
        smax = segment_max(x_left, x_right, config.kind, config.p, config.segment_samples)
        if smax <= config.Q1:
            return SplitChoice(
                axis=axis,
                index=k,
                coord=float(measure.breakpoints[axis][k]),
                ratio=ratio,
                segment_psi_max=smax,
                left_point=x_left,
                right_point=x_right,
            )
        if best_psi is None or smax < best_psi:
            best_psi = smax
    raise InfeasibleSplitError(
        f"no feasible split of {box} along axis {axis}: best ratio "
        f"{best_any[1]:.6g} with window ({config.c}, {1 - config.c}), "
        f"best segment max {best_psi}",
        box=box,
        best_ratio=best_any[1],
        best_segment_max=best_psi,
    )


def build_tree(
    measure: GridMeasure,
    weight: WeightGrid,
    config: SplitConfig,
    root_box: BoxIdx | None = None,
    tables: PrefixTables | None = None,
) -> SplitTree:
    """Recursive split tree of depth config.levels over the root box.

    The caller is responsible for having checked that the weight's
    characteristic on the root is at most config.Q; the construction itself
    only enforces the ratio window and the segment containment.  An
    infeasible node aborts the build and reports its path.
    """
    s2 = config.moment_exponent
    if tables is None:
        tables = PrefixTables(measure, weight, (1.0, s2))
    if root_box is None:
        root_box = BoxIdx.full(measure.shape)

    levels: list[list[SplitNode]] = [[] for _ in range(config.levels + 1)]

    def grow(box: BoxIdx, level: int, path: str) -> SplitNode:
        mass, point = _box_point(tables, box, s2)
        node = SplitNode(
            box=box,
            level=level,
            path=path,
            mass=mass,
            point=point,
            diameter=measure.box_diameter(box),
        )
        levels[level].append(node)
        if level < config.levels:
            axis = choose_direction(measure, box)
            try:
                choice = choose_position(measure, weight, box, axis, config, tables)
            except InfeasibleSplitError as exc:
                exc.path = path
                raise
            node.axis = choice.axis
            node.split_index = choice.index
            node.split_coord = choice.coord
            node.ratio = choice.ratio
            node.segment_psi_max = choice.segment_psi_max
            left_box, right_box = _split_box(box, choice.axis, choice.index)
            node.children = (
                grow(left_box, level + 1, path + "0"),
                grow(right_box, level + 1, path + "1"),
            )
        return node

    root = grow(root_box, 0, "")
    return SplitTree(
        config=config,
        measure=measure,
        weight=weight,
        root=root,
        levels=levels,
        tables=tables,
    )


@dataclass(frozen=True)
class ChainReport:
    """Per-level candidate sums S_M and the terminal average of w**r.

    S_M is the mass-weighted sum of candidate values at the level-M average
    points.  For a segment-concave candidate each split can only decrease
    the sum, so S_0 >= S_M for every M; at full cell depth the leaf points
    sit on the boundary curve and S_depth matches the average of w**r up to
    the leftover discretization residual.
    """

    r: float
    s_values: tuple[float, ...]
    terminal_avg_wr: float

    @property
    def depth(self) -> int:
        return len(self.s_values) - 1


def chain_report(tree: SplitTree, r: float, candidate) -> ChainReport:
    """Evaluate the candidate chain over the tree levels.

    candidate is either a BellmanCandidate or a plain callable (x1, x2) ->
    value.  Evaluation failures are annotated with the offending point.
    """
    evaluate: Callable[[float, float], float]
    evaluate = candidate.evaluate if hasattr(candidate, "evaluate") else candidate
    total = tree.root.mass
    s_values = []
    for level_nodes in tree.levels:
        terms = []
        for node in level_nodes:
            try:
                val = float(evaluate(node.point.x1, node.point.x2))
            except Exception as exc:
                raise PreconditionError(
                    f"candidate evaluation failed at point {tuple(node.point)}: {exc}"
                ) from exc
            terms.append(node.mass / total * val)
        s_values.append(math.fsum(terms))
    terminal = tree.tables.moment_sum(r, tree.root.box) / total
    return ChainReport(r=r, s_values=tuple(s_values), terminal_avg_wr=terminal)


def trace_rows(tree: SplitTree):
    """Row dicts for the CSV trace: one row per node in breadth-first order."""
    rows = []
    for node in tree.nodes():
        rows.append(
            {
                "level": node.level,
                "box": str(node.box),
                "axis": "" if node.axis is None else node.axis,
                "breakpoint": "" if node.split_coord is None else repr(node.split_coord),
                "ratio": "" if node.ratio is None else repr(node.ratio),
                "x1": repr(node.point.x1),
                "x2": repr(node.point.x2),
                "segment_max": (
                    "" if node.segment_psi_max is None else repr(node.segment_psi_max)
                ),
                "diameter": repr(node.diameter),
            }
        )
    return rows

TRACE_COLUMNS = (
    "level",
    "box",
    "axis",
    "breakpoint",
    "ratio",
    "x1",
    "x2",
    "segment_max",
    "diameter",
)
