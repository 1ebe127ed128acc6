"""Grid-discretized measures and weights with exact box sums.

A measure is a nonnegative mass per cell of a tensor-product lattice (1 to 3
axes, strictly increasing breakpoints per axis).  Placing all mass strictly
inside cells makes every coordinate hyperplane through a breakpoint null, so
box splitting at breakpoints never cuts through an atom.  Weights are
strictly positive cell-constant values on the same lattice; continuum
weights enter only through exact cell averaging at generation time.

Box sums of mass, w*mass and w**s*mass are answered from compensated
(double-double) prefix tables, so each query returns the correctly rounded
double of the exact sum over the requested cells.
"""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from ._summation import dd_box_sum, dd_prefix_tables
from .errors import PreconditionError, ZeroMeasureBoxError

MAX_DIM = 3


@dataclass(frozen=True)
class BoxIdx:
    """Axis-parallel box as per-axis half-open cell index ranges [a, b)."""

    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "ranges", tuple((int(a), int(b)) for a, b in self.ranges)
        )
        for a, b in self.ranges:
            if a < 0 or b <= a:
                raise PreconditionError(f"empty or negative index range in {self.ranges}")

    @classmethod
    def full(cls, shape) -> "BoxIdx":
        return cls(tuple((0, int(m)) for m in shape))

    @property
    def ndim(self) -> int:
        return len(self.ranges)

    @property
    def cell_count(self) -> int:
        n = 1
        for a, b in self.ranges:
            n *= b - a
        return n

    def as_slices(self) -> tuple[slice, ...]:
        return tuple(slice(a, b) for a, b in self.ranges)

    def check_shape(self, shape) -> None:
        if len(self.ranges) != len(shape):
            raise PreconditionError(
                f"box has {len(self.ranges)} axes, grid has {len(shape)}"
            )
        for ax, ((a, b), m) in enumerate(zip(self.ranges, shape)):
            if b > m:
                raise PreconditionError(
                    f"box range [{a}, {b}) exceeds {m} cells on axis {ax}"
                )

    def __str__(self) -> str:
        return ";".join(f"{a}:{b}" for a, b in self.ranges)


@dataclass(frozen=True)
class GridMeasure:
    """Cell-mass discretization of a measure on a tensor grid."""

    breakpoints: tuple[np.ndarray, ...]
    mass: np.ndarray

    def __post_init__(self):
        bps = tuple(np.asarray(b, dtype=np.float64) for b in self.breakpoints)
        mass = np.asarray(self.mass, dtype=np.float64)
        if not 1 <= len(bps) <= MAX_DIM:
            raise PreconditionError(
                f"dimension must be between 1 and {MAX_DIM}, got {len(bps)}"
            )
        if mass.ndim != len(bps):
            raise PreconditionError(
                f"mass array has {mass.ndim} axes, expected {len(bps)}"
            )
        for ax, b in enumerate(bps):
            if b.ndim != 1 or b.size != mass.shape[ax] + 1:
                raise PreconditionError(
                    f"axis {ax}: need {mass.shape[ax] + 1} breakpoints, got {b.size}"
                )
            if not np.all(np.isfinite(b)):
                raise PreconditionError(f"axis {ax}: non-finite breakpoint")
            if not np.all(np.diff(b) > 0):
                j = int(np.flatnonzero(np.diff(b) <= 0)[0])
                raise PreconditionError(
                    f"axis {ax}: breakpoints not strictly increasing at index {j}"
                )
        if not np.all(np.isfinite(mass)):
            idx = np.unravel_index(int(np.argmin(np.isfinite(mass))), mass.shape)
            raise PreconditionError(f"non-finite mass at cell {tuple(int(i) for i in idx)}")
        if np.any(mass < 0):
            idx = np.unravel_index(int(np.argmax(mass < 0)), mass.shape)
            raise PreconditionError(f"negative mass at cell {tuple(int(i) for i in idx)}")
        if not mass.sum() > 0:
            raise PreconditionError("total mass must be positive")
        for b in bps:
            b.setflags(write=False)
        mass.setflags(write=False)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "mass", mass)

    @property
    def ndim(self) -> int:
        return self.mass.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mass.shape

    @property
    def total_mass(self) -> float:
        return float(self.mass.sum())

    def edge_length(self, axis: int, a: int, b: int) -> float:
        bp = self.breakpoints[axis]
        return float(bp[b] - bp[a])

    def box_diameter(self, box: BoxIdx) -> float:
        return math.sqrt(
            sum(
                self.edge_length(ax, a, b) ** 2
                for ax, (a, b) in enumerate(box.ranges)
            )
        )


@dataclass(frozen=True)
class WeightGrid:
    """Strictly positive cell values aligned with a GridMeasure's lattice.

    ``power_alpha`` tags grids produced by power_weight_grid so refinement
    can regenerate exact cell averages instead of copying values.
    """

    values: np.ndarray
    power_alpha: float | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(values)):
            idx = np.unravel_index(int(np.argmin(np.isfinite(values))), values.shape)
            raise PreconditionError(f"non-finite weight value at cell {tuple(int(i) for i in idx)}")
        if np.any(values <= 0):
            idx = np.unravel_index(int(np.argmax(values <= 0)), values.shape)
            raise PreconditionError(f"non-positive weight at cell {tuple(int(i) for i in idx)}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape


def validate(measure: GridMeasure, weight: WeightGrid):
    """Re-check all pair invariants; returns the pair on success."""
    GridMeasure(measure.breakpoints, measure.mass)
    WeightGrid(weight.values, weight.power_alpha)
    if weight.values.shape != measure.shape:
        raise PreconditionError(
            f"weight shape {weight.values.shape} does not match "
            f"measure shape {measure.shape}"
        )
    return measure, weight


def uniform_measure(shape, lo=0.0, hi=1.0, total=1.0) -> GridMeasure:
    """Uniform cell masses on a uniform lattice over [lo, hi] per axis."""
    if isinstance(shape, int):
        shape = (shape,)
    bps = tuple(np.linspace(lo, hi, m + 1) for m in shape)
    cells = int(np.prod(shape))
    mass = np.full(shape, total / cells)
    return GridMeasure(bps, mass)


def power_weight_grid(alpha: float, cells: int) -> tuple[GridMeasure, WeightGrid]:
    """Power weight x**alpha on [0, 1] with uniform Lebesgue cell masses.

    Each cell holds the exact average of x**alpha over the cell, so the
    values are (x_{j+1}**(a+1) - x_j**(a+1)) / ((a+1) * width); they are
    strictly positive and monotone in j (increasing iff alpha > 0).
    """
    if not alpha > -1.0:
        raise PreconditionError(
            f"alpha must exceed -1 (x**alpha not integrable at 0), got {alpha}"
        )
    if cells < 1:
        raise PreconditionError(f"cell count must be >= 1, got {cells}")
    x = np.arange(cells + 1, dtype=np.float64) / cells
    if alpha == 0.0:
        vals = np.ones(cells)
    else:
        anti = np.power(x, alpha + 1.0)
        vals = (anti[1:] - anti[:-1]) / ((alpha + 1.0) / cells)
    measure = GridMeasure((x,), np.full(cells, 1.0 / cells))
    return measure, WeightGrid(vals, power_alpha=alpha)


def refine(measure: GridMeasure, weight: WeightGrid, k: int):
    """Split every cell into k equal parts per axis.

    Masses divide evenly, values copy (piecewise-constant semantics).
    Power-law generated weights are regenerated exactly instead.
    """
    if int(k) != k or k < 2:
        raise PreconditionError(f"refinement factor must be an integer >= 2, got {k}")
    k = int(k)
    if weight.power_alpha is not None and measure.ndim == 1:
        return power_weight_grid(weight.power_alpha, measure.shape[0] * k)
    new_bps = []
    for bp in measure.breakpoints:
        widths = np.diff(bp)
        sub = bp[:-1, None] + widths[:, None] * (np.arange(k) / k)[None, :]
        new_bps.append(np.append(sub.reshape(-1), bp[-1]))
    mass = measure.mass
    vals = weight.values
    for ax in range(measure.ndim):
        mass = np.repeat(mass, k, axis=ax)
        vals = np.repeat(vals, k, axis=ax)
    mass = mass / float(k**measure.ndim)
    return GridMeasure(tuple(new_bps), mass), WeightGrid(vals)


def moment_cells(mass: np.ndarray, values: np.ndarray, s: float) -> np.ndarray:
    """Per-cell masses of the measure w**s dmu.

    Cells of zero mass contribute zero regardless of the weight value.  If
    mass * value**s overflows while the product is representable, the cell
    is recomputed in log space; a remaining +inf marks a true overflow that
    characteristic scans report as an infinite supremum.
    """
    if s == 0.0:
        return mass.copy()
    if s == 1.0:
        return mass * values
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        cells = mass * np.power(values, s)
        bad = ~np.isfinite(cells) & (mass > 0)
        if bad.any():
            cells[bad] = np.exp(np.log(mass[bad]) + s * np.log(values[bad]))
        if (mass == 0.0).any():
            cells = np.where(mass == 0.0, 0.0, cells)
    return cells


class PrefixTables:
    """Cached double-double cumulative tables for box-sum queries.

    One table per requested moment exponent plus the plain mass table.
    Tables are immutable once built; ensure() extends the cache to new
    exponents.  The raw per-cell moment arrays are exposed for independent
    summation oracles.
    """

    def __init__(self, measure: GridMeasure, weight: WeightGrid, exponents=()):
        validate(measure, weight)
        self.measure = measure
        self.weight = weight
        self._cells: dict[float, np.ndarray] = {}
        self._tables: dict[float, tuple[np.ndarray, np.ndarray]] = {}
        self._mass_table = dd_prefix_tables(measure.mass)
        for s in exponents:
            self.ensure(float(s))

    def ensure(self, s: float) -> None:
        s = float(s)
        if s in self._tables:
            return
        cells = moment_cells(self.measure.mass, self.weight.values, s)
        self._cells[s] = cells
        finite = np.isfinite(cells)
        self._tables[s] = dd_prefix_tables(np.where(finite, cells, 0.0))

    def cells(self, s: float) -> np.ndarray:
        self.ensure(s)
        return self._cells[float(s)]

    def first_nonfinite_cell(self, s: float):
        """Index of the first overflowed moment cell in row-major order, or None."""
        cells = self.cells(s)
        bad = ~np.isfinite(cells)
        if not bad.any():
            return None
        return tuple(int(i) for i in np.unravel_index(int(np.argmax(bad)), bad.shape))

    def table(self, s: float) -> tuple[np.ndarray, np.ndarray]:
        self.ensure(s)
        return self._tables[float(s)]

    @property
    def mass_table(self) -> tuple[np.ndarray, np.ndarray]:
        return self._mass_table

    def mass_sum(self, box: BoxIdx) -> float:
        box.check_shape(self.measure.shape)
        return dd_box_sum(*self._mass_table, box.ranges)

    def moment_sum(self, s: float, box: BoxIdx) -> float:
        box.check_shape(self.measure.shape)
        hi, lo = self.table(s)
        return dd_box_sum(hi, lo, box.ranges)


def box_average(measure, weight, box: BoxIdx, s: float, tables: PrefixTables | None = None) -> float:
    """Average of w**s over the box against the measure: a prefix-table query."""
    if tables is None:
        tables = PrefixTables(measure, weight)
    m = tables.mass_sum(box)
    if m <= 0.0:
        raise ZeroMeasureBoxError(box)
    return tables.moment_sum(s, box) / m


# ----------------------------------------------------------------------
# File formats.  The grid format is a token stream: '#' starts a comment
# that runs to end of line, floats may be plain decimal or C99 hex
# (0x1.8p-1) literals.  See README for the layout.
# ----------------------------------------------------------------------


def _parse_float(tok: str) -> float:
    if tok.lower().startswith(("0x", "-0x", "+0x")):
        return float.fromhex(tok)
    return float(tok)


def _tokenize(text: str):
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        yield from body.split()


def write_grid(path, measure: GridMeasure, weight: WeightGrid) -> None:
    """Write a measure/weight pair in the text grid format (atomic)."""
    lines = ["# boxweights grid format v1", "grid 1", f"dim {measure.ndim}"]
    for ax, bp in enumerate(measure.breakpoints):
        lines.append(f"breakpoints {ax} {bp.size}")
        lines.extend(_wrap_floats(bp))
    flat_mass = measure.mass.reshape(-1)
    lines.append(f"mass {flat_mass.size}")
    lines.extend(_wrap_floats(flat_mass))
    flat_vals = weight.values.reshape(-1)
    lines.append(f"values {flat_vals.size}")
    lines.extend(_wrap_floats(flat_vals))
    if weight.power_alpha is not None:
        lines.append(f"generator power {weight.power_alpha!r}")
    _atomic_write(path, "\n".join(lines) + "\n")


def _wrap_floats(arr, per_line: int = 8):
    arr = np.asarray(arr).reshape(-1)
    out = []
    for i in range(0, arr.size, per_line):
        out.append(" ".join(repr(float(v)) for v in arr[i : i + per_line]))
    return out


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_grid(path) -> tuple[GridMeasure, WeightGrid]:
    """Read a measure/weight pair written by write_grid."""
    with open(path, "r") as handle:
        toks = list(_tokenize(handle.read()))
    pos = 0

    def take(n=1):
        nonlocal pos
        if pos + n > len(toks):
            raise PreconditionError(f"truncated grid file {path}")
        out = toks[pos : pos + n]
        pos += n
        return out

    def expect(keyword):
        got = take()[0]
        if got != keyword:
            raise PreconditionError(f"expected '{keyword}' in {path}, found '{got}'")

    expect("grid")
    version = take()[0]
    if version != "1":
        raise PreconditionError(f"unsupported grid format version {version}")
    expect("dim")
    ndim = int(take()[0])
    bps = []
    for ax in range(ndim):
        expect("breakpoints")
        got_ax = int(take()[0])
        if got_ax != ax:
            raise PreconditionError(f"breakpoints out of order in {path}")
        count = int(take()[0])
        bps.append(np.array([_parse_float(t) for t in take(count)]))
    shape = tuple(b.size - 1 for b in bps)
    expect("mass")
    count = int(take()[0])
    mass = np.array([_parse_float(t) for t in take(count)]).reshape(shape)
    expect("values")
    count = int(take()[0])
    values = np.array([_parse_float(t) for t in take(count)]).reshape(shape)
    power_alpha = None
    if pos < len(toks):
        expect("generator")
        gen_kind = take()[0]
        if gen_kind != "power":
            raise PreconditionError(f"unknown generator '{gen_kind}' in {path}")
        power_alpha = _parse_float(take()[0])
    measure = GridMeasure(tuple(bps), mass)
    weight = WeightGrid(values, power_alpha=power_alpha)
    return validate(measure, weight)


def export_cells_csv(path, measure: GridMeasure, weight: WeightGrid, header_lines=()) -> None:
    """CSV dump of the cell table: indices, bounds, mass and value per cell."""
    rows = []
    for idx in np.ndindex(measure.shape):
        row = []
        for ax, i in enumerate(idx):
            bp = measure.breakpoints[ax]
            row.extend([i, repr(float(bp[i])), repr(float(bp[i + 1]))])
        row.append(repr(float(measure.mass[idx])))
        row.append(repr(float(weight.values[idx])))
        rows.append(row)
    cols = []
    for ax in range(measure.ndim):
        cols.extend([f"i{ax}", f"lo{ax}", f"hi{ax}"])
    cols.extend(["mass", "value"])
    buf = []
    for line in header_lines:
        buf.append(f"# {line}")
    buf.append(",".join(cols))
    for row in rows:
        buf.append(",".join(str(v) for v in row))
    _atomic_write(path, "\n".join(buf) + "\n")
