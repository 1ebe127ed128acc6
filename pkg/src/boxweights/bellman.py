"""Admissible average-pair regions and Bellman-candidate verification.

The average pair (x1, x2) = (<w>_R, <w**s>_R) of any positive-measure box
lies in the band {1 <= gauge(x1, x2) <= Q} once the weight's characteristic
is at most Q; the lower boundary gauge == 1 is the curve x2 = x1**p1
(Muckenhoupt, s = p1) or x2 = x1**p (Reverse Holder, s = p), attained by
constants.  For the Reverse Holder class the gauge is x2**(1/p) / x1: with
x2 the average of w**p Jensen forces x2**(1/p) >= x1, so the band sits above
the power curve just as in the Muckenhoupt case.

A candidate function B on the band is useful when it is concave along every
straight segment contained in the band (the band is not convex, so this is
weaker than concavity), matches x1**r on the lower boundary and is bounded
by a multiple of x1**r.  The verifier samples random in-band segments and
checks midpoint and quarter-point concavity, measures the boundary error on
a lattice, and reports the empirical growth constant sup B / x1**r.
Candidates are externally supplied tables (bilinear interpolation on a
lattice uniform in log coordinates) or trivial built-ins.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .characteristics import characteristic, pair_gauge
from .errors import CandidateDomainError, PreconditionError
from .exponents import ClassKind, PParam, _as_pparam, r_is_admissible
from .grids import GridMeasure, WeightGrid, refine
from .splitting import AvgPoint, segment_max

DEFAULT_VERIFY_SEGMENTS = 200
DEFAULT_VERIFY_TOL = 1e-9
DEFAULT_X1_RANGE = (0.1, 10.0)
DEFAULT_BOUNDARY_POINTS = 129
DEFAULT_STABILITY_RTOL = 0.01
DEFAULT_CONTRACTION_THRESHOLD = 0.85


class Membership(enum.Enum):
    INSIDE = "inside"
    BELOW = "below"
    ABOVE = "above"


@dataclass(frozen=True)
class AveragePairRegion:
    """Band of admissible average pairs for characteristic bound Q."""

    kind: ClassKind
    p: PParam
    Q: float

    def __post_init__(self):
        object.__setattr__(self, "p", _as_pparam(self.p))
        if not self.Q > 1.0:
            raise PreconditionError(f"Q must exceed 1, got {self.Q}")

    def gauge(self, x1, x2):
        return pair_gauge(self.kind, self.p, x1, x2)

    def lower_boundary_x2(self, x1):
        """x2 on the gauge == 1 curve for the given x1."""
        if self.kind is ClassKind.MUCKENHOUPT_A:
            return x1 ** self.p.p1
        return x1 ** self.p.p

    def x2_at_gauge(self, x1, g):
        """x2 with gauge(x1, x2) == g; used to sample the band."""
        if self.kind is ClassKind.MUCKENHOUPT_A:
            return (g / x1) ** (1.0 / (self.p.p - 1.0))
        return (g * x1) ** self.p.p


def membership(region: AveragePairRegion, x1: float, x2: float) -> Membership:
    """Classify a point against the band with 1e-12 boundary slack."""
    if not (x1 > 0.0 and x2 > 0.0):
        raise PreconditionError(f"coordinates must be positive, got ({x1}, {x2})")
    g = region.gauge(x1, x2)
    if g < 1.0 - 1e-12:
        return Membership.BELOW
    if g > region.Q * (1.0 + 1e-12):
        return Membership.ABOVE
    return Membership.INSIDE


# ----------------------------------------------------------------------
# Candidates.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class CandidateTable:
    """Values on a lattice uniform in (log x1, log x2), bilinear interpolation."""

    xi: np.ndarray
    eta: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=np.float64)
        eta = np.asarray(self.eta, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if xi.ndim != 1 or eta.ndim != 1 or values.shape != (xi.size, eta.size):
            raise PreconditionError("candidate table shape mismatch")
        if xi.size < 2 or eta.size < 2:
            raise PreconditionError("candidate table needs at least 2 nodes per axis")
        if not (np.all(np.diff(xi) > 0) and np.all(np.diff(eta) > 0)):
            raise PreconditionError("candidate lattice must be strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise PreconditionError("candidate values must be finite and nonnegative")
        for arr in (xi, eta, values):
            arr.setflags(write=False)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "values", values)

    def __call__(self, x1, x2):
        xi = np.log(x1)
        eta = np.log(x2)
        if np.any(xi < self.xi[0]) or np.any(xi > self.xi[-1]) or np.any(
            eta < self.eta[0]
        ) or np.any(eta > self.eta[-1]):
            bad = (float(np.atleast_1d(x1).reshape(-1)[0]), float(np.atleast_1d(x2).reshape(-1)[0]))
            raise CandidateDomainError(bad, f"point outside tabulated lattice: {bad}")
        i = np.clip(np.searchsorted(self.xi, xi, side="right") - 1, 0, self.xi.size - 2)
        j = np.clip(np.searchsorted(self.eta, eta, side="right") - 1, 0, self.eta.size - 2)
        t = (xi - self.xi[i]) / (self.xi[i + 1] - self.xi[i])
        u = (eta - self.eta[j]) / (self.eta[j + 1] - self.eta[j])
        v00 = self.values[i, j]
        v10 = self.values[i + 1, j]
        v01 = self.values[i, j + 1]
        v11 = self.values[i + 1, j + 1]
        return (
            v00 * (1 - t) * (1 - u)
            + v10 * t * (1 - u)
            + v01 * (1 - t) * u
            + v11 * t * u
        )


@dataclass(frozen=True)
class BellmanCandidate:
    """Candidate function with its metadata and evaluation backend."""

    kind: ClassKind
    p: PParam
    r: float
    Q: float
    source: str
    _impl: object = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "p", _as_pparam(self.p))

    def evaluate(self, x1, x2):
        return self._impl(x1, x2)

    @property
    def table(self) -> CandidateTable | None:
        return self._impl if isinstance(self._impl, CandidateTable) else None

    @classmethod
    def linear(cls, kind: ClassKind, p, Q: float) -> "BellmanCandidate":
        """B(x1, x2) = x1: affine, boundary-exact for r = 1, growth constant 1."""
        return cls(kind=kind, p=p, r=1.0, Q=Q, source="builtin:linear", _impl=lambda x1, x2: x1)

    @classmethod
    def power(cls, kind: ClassKind, p, r: float, Q: float) -> "BellmanCandidate":
        """B(x1, x2) = x1**r: boundary-exact but convex along x2-constant lines
        for r outside [0, 1]; the standard negative control."""
        return cls(
            kind=kind,
            p=p,
            r=r,
            Q=Q,
            source=f"builtin:power:{r!r}",
            _impl=lambda x1, x2: x1**r,
        )

    @classmethod
    def from_table(
        cls, kind: ClassKind, p, r: float, Q: float, table: CandidateTable, source="table"
    ) -> "BellmanCandidate":
        return cls(kind=kind, p=p, r=r, Q=Q, source=source, _impl=table)


def builtin_candidate(spec: str, kind: ClassKind, p, Q: float) -> BellmanCandidate:
    """Parse 'builtin:linear' or 'builtin:power:<r>'."""
    parts = spec.split(":")
    if parts[0] != "builtin":
        raise PreconditionError(f"not a builtin candidate spec: {spec}")
    if parts[1] == "linear":
        return BellmanCandidate.linear(kind, p, Q)
    if parts[1] == "power":
        if len(parts) != 3:
            raise PreconditionError("builtin:power needs an exponent, e.g. builtin:power:1.3")
        return BellmanCandidate.power(kind, p, float(parts[2]), Q)
    raise PreconditionError(f"unknown builtin candidate '{spec}'")


def tabulate_candidate(
    fn,
    kind: ClassKind,
    p,
    r: float,
    Q: float,
    x1_range: tuple[float, float],
    n1: int,
    n2: int,
    pad: float = 0.05,
    source: str = "table",
) -> BellmanCandidate:
    """Sample fn on a log-log lattice covering the band over x1_range.

    fn must be defined on the padded bounding rectangle of the band (a
    smooth extension beyond the band suffices); it is evaluated vectorized
    on the node meshgrid.
    """
    p = _as_pparam(p)
    region = AveragePairRegion(kind, p, Q)
    xi0, xi1 = math.log(x1_range[0]) - pad, math.log(x1_range[1]) + pad
    corners = []
    for xi in (xi0, xi1):
        for g in (1.0, Q):
            corners.append(math.log(region.x2_at_gauge(math.exp(xi), g)))
    eta0, eta1 = min(corners) - pad, max(corners) + pad
    xi = np.linspace(xi0, xi1, n1)
    eta = np.linspace(eta0, eta1, n2)
    x1g, x2g = np.meshgrid(np.exp(xi), np.exp(eta), indexing="ij")
    values = np.asarray(fn(x1g, x2g), dtype=np.float64)
    table = CandidateTable(xi=xi, eta=eta, values=values)
    return BellmanCandidate.from_table(kind, p, r, Q, table, source=source)


# ----------------------------------------------------------------------
# Candidate file format (token stream, same float conventions as grids).
# ----------------------------------------------------------------------


def write_candidate(path, cand: BellmanCandidate) -> None:
    from .grids import _atomic_write, _wrap_floats

    table = cand.table
    if table is None:
        raise PreconditionError("only tabulated candidates can be written to a file")
    lines = [
        "# boxweights bellman candidate v1",
        "candidate 1",
        f"class {cand.kind.value}",
        f"p {cand.p.p!r}",
        f"r {cand.r!r}",
        f"Q {cand.Q!r}",
        f"x1grid {table.xi.size} {float(table.xi[0])!r} {float(table.xi[-1])!r}",
        f"x2grid {table.eta.size} {float(table.eta[0])!r} {float(table.eta[-1])!r}",
        f"values {table.values.size}",
    ]
    lines.extend(_wrap_floats(table.values))
    _atomic_write(path, "\n".join(lines) + "\n")


def read_candidate(path) -> BellmanCandidate:
    from .grids import _parse_float, _tokenize

    with open(path, "r") as handle:
        toks = list(_tokenize(handle.read()))
    pos = 0

    def take(n=1):
        nonlocal pos
        if pos + n > len(toks):
            raise PreconditionError(f"truncated candidate file {path}")
        out = toks[pos : pos + n]
        pos += n
        return out

    def expect(keyword):
        got = take()[0]
        if got != keyword:
            raise PreconditionError(f"expected '{keyword}' in {path}, found '{got}'")

    expect("candidate")
    if take()[0] != "1":
        raise PreconditionError(f"unsupported candidate format version in {path}")
    expect("class")
    kind = ClassKind(take()[0])
    expect("p")
    p = PParam(_parse_float(take()[0]))
    expect("r")
    r = _parse_float(take()[0])
    expect("Q")
    Q = _parse_float(take()[0])
    expect("x1grid")
    n1 = int(take()[0])
    xi0, xi1 = (_parse_float(t) for t in take(2))
    expect("x2grid")
    n2 = int(take()[0])
    eta0, eta1 = (_parse_float(t) for t in take(2))
    expect("values")
    count = int(take()[0])
    if count != n1 * n2:
        raise PreconditionError(f"candidate value count mismatch in {path}")
    values = np.array([_parse_float(t) for t in take(count)]).reshape(n1, n2)
    table = CandidateTable(
        xi=np.linspace(xi0, xi1, n1), eta=np.linspace(eta0, eta1, n2), values=values
    )
    return BellmanCandidate.from_table(kind, p, r, Q, table, source=f"table:{path}")


# ----------------------------------------------------------------------
# Verification.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConcavityViolation:
    x_a: tuple[float, float]
    x_b: tuple[float, float]
    lam: float
    deficit: float


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of a candidate verification run.

    verdict is True iff no concavity violation beyond tolerance was found,
    the growth constant is finite and every queried point was inside the
    candidate's domain.  The boundary error is reported but does not gate
    the verdict; tests assert it separately where relevant.
    """

    kind: ClassKind
    p: float
    r: float
    Q: float
    segments_tested: int
    violations: tuple[ConcavityViolation, ...]
    boundary_max_error: float
    boundary_argmax_x1: float
    c_hat: float
    c_hat_point: tuple[float, float]
    rel_tol: float
    seed: int
    verdict: bool
    failure_point: tuple[float, float] | None = None


def verify_candidate(
    region: AveragePairRegion,
    candidate,
    r: float,
    segments: int = DEFAULT_VERIFY_SEGMENTS,
    seed: int = 0,
    rel_tol: float = DEFAULT_VERIFY_TOL,
    x1_range: tuple[float, float] = DEFAULT_X1_RANGE,
    boundary_points: int = DEFAULT_BOUNDARY_POINTS,
    segment_samples: int = 257,
) -> VerificationReport:
    """Check segment concavity, boundary values and growth of a candidate.

    Random segments are drawn with both endpoints in the band (x1 uniform in
    log over x1_range, gauge uniform in [1, Q]) and kept only if the sampled
    gauge maximum along the segment stays at most Q; the gauge >= 1 side is
    automatic because the region above the boundary power curve is convex.
    Midpoint and quarter-point concavity deficits beyond rel_tol * scale are
    violations.  Deterministic for a fixed seed.
    """
    p = region.p
    if not r_is_admissible(region.kind, p, region.Q, r):
        raise PreconditionError(
            f"r={r} lies outside the admissible exponent windows for "
            f"{region.kind.value} with p={p.p}, Q={region.Q}"
        )
    evaluate = candidate.evaluate if hasattr(candidate, "evaluate") else candidate
    rng = np.random.default_rng(seed)
    log_lo, log_hi = math.log(x1_range[0]), math.log(x1_range[1])

    def draw_point() -> AvgPoint:
        x1 = math.exp(rng.uniform(log_lo, log_hi))
        g = rng.uniform(1.0, region.Q)
        return AvgPoint(x1, float(region.x2_at_gauge(x1, g)))

    pairs = []
    attempts = 0
    while len(pairs) < segments:
        attempts += 1
        if attempts > 1000 * segments:
            raise PreconditionError(
                "segment rejection sampling stalled; check Q and x1_range"
            )
        a, b = draw_point(), draw_point()
        if segment_max(a, b, region.kind, p, segment_samples) <= region.Q:
            pairs.append((a, b))

    violations = []
    c_hat = -math.inf
    c_hat_point = (math.nan, math.nan)
    failure_point = None

    def track_growth(x1, x2, value):
        nonlocal c_hat, c_hat_point
        ratio = value / x1**r
        if ratio > c_hat:
            c_hat = ratio
            c_hat_point = (x1, x2)

    try:
        for a, b in pairs:
            va = float(evaluate(a.x1, a.x2))
            vb = float(evaluate(b.x1, b.x2))
            track_growth(a.x1, a.x2, va)
            track_growth(b.x1, b.x2, vb)
            for lam in (0.25, 0.5, 0.75):
                mx1 = lam * a.x1 + (1.0 - lam) * b.x1
                mx2 = lam * a.x2 + (1.0 - lam) * b.x2
                vm = float(evaluate(mx1, mx2))
                track_growth(mx1, mx2, vm)
                deficit = lam * va + (1.0 - lam) * vb - vm
                scale = max(1.0, abs(va), abs(vb), abs(vm))
                if deficit > rel_tol * scale:
                    violations.append(
                        ConcavityViolation(
                            x_a=tuple(a), x_b=tuple(b), lam=lam, deficit=deficit
                        )
                    )
        boundary_err = 0.0
        boundary_arg = math.nan
        for x1 in np.exp(np.linspace(log_lo, log_hi, boundary_points)):
            x1 = float(x1)
            x2 = float(region.lower_boundary_x2(x1))
            val = float(evaluate(x1, x2))
            track_growth(x1, x2, val)
            err = abs(val - x1**r)
            if err > boundary_err:
                boundary_err = err
                boundary_arg = x1
    except CandidateDomainError as exc:
        failure_point = exc.point
        return VerificationReport(
            kind=region.kind,
            p=p.p,
            r=r,
            Q=region.Q,
            segments_tested=len(pairs),
            violations=tuple(violations),
            boundary_max_error=math.inf,
            boundary_argmax_x1=math.nan,
            c_hat=math.inf,
            c_hat_point=(math.nan, math.nan),
            rel_tol=rel_tol,
            seed=seed,
            verdict=False,
            failure_point=failure_point,
        )

    verdict = not violations and math.isfinite(c_hat)
    return VerificationReport(
        kind=region.kind,
        p=p.p,
        r=r,
        Q=region.Q,
        segments_tested=len(pairs),
        violations=tuple(violations),
        boundary_max_error=boundary_err,
        boundary_argmax_x1=boundary_arg,
        c_hat=c_hat,
        c_hat_point=c_hat_point,
        rel_tol=rel_tol,
        seed=seed,
        verdict=verdict,
    )


# ----------------------------------------------------------------------
# End-to-end membership trend probe.
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TrendReport:
    """Refinement trend of a q-class characteristic.

    verdict is 'stabilizing' when the increment sequence contracts (or the
    final relative gap is already below stability_rtol), 'divergent-trend'
    when the values increase strictly without contraction, 'inconclusive'
    otherwise.  The raw values and gaps are included so callers can apply
    stricter criteria of their own.
    """

    kind: ClassKind
    p: float
    Q: float
    probe_kind: ClassKind
    q: float
    cell_counts: tuple[int, ...]
    values: tuple[float, ...]
    rel_gaps: tuple[float, ...]
    increment_ratios: tuple[float, ...]
    last_gap: float
    contraction: float | None
    stabilized_within: bool
    verdict: str
    stability_rtol: float


def theorem_conclusion_check(
    measure: GridMeasure,
    weight: WeightGrid,
    kind: ClassKind,
    p,
    q: float,
    Q: float,
    probe_kind: ClassKind | None = None,
    refine_factor: int = 4,
    levels: int = 3,
    stability_rtol: float = DEFAULT_STABILITY_RTOL,
    contraction_threshold: float = DEFAULT_CONTRACTION_THRESHOLD,
) -> TrendReport:
    """Probe q-class membership across grid refinements.

    Checks first that the weight's (kind, p) characteristic on the base grid
    is at most Q, then tracks the probe-class q-characteristic over
    successive refinements (power-law grids are regenerated exactly).
    """
    p = _as_pparam(p)
    probe = probe_kind if probe_kind is not None else kind
    base = characteristic(measure, weight, kind, p.p)
    if not base.value <= Q * (1.0 + 1e-9):
        raise PreconditionError(
            f"base characteristic {base.value} exceeds the hypothesis bound Q={Q}"
        )
    values = []
    counts = []
    cur_m, cur_w = measure, weight
    for level in range(levels + 1):
        rep = characteristic(cur_m, cur_w, probe, q)
        values.append(rep.value)
        counts.append(int(np.prod(cur_m.shape)))
        if level < levels:
            cur_m, cur_w = refine(cur_m, cur_w, refine_factor)
    diffs = [b - a for a, b in zip(values, values[1:])]
    rel_gaps = [abs(d) / abs(v) for d, v in zip(diffs, values)]
    ratios = [
        d2 / d1 for d1, d2 in zip(diffs, diffs[1:]) if d1 != 0.0
    ]
    last_gap = rel_gaps[-1] if rel_gaps else 0.0
    contraction = ratios[-1] if ratios else None
    increasing = all(d > 0 for d in diffs)
    stabilized = last_gap <= stability_rtol
    if stabilized:
        verdict = "stabilizing"
    elif increasing and contraction is not None and contraction >= contraction_threshold:
        verdict = "divergent-trend"
    elif contraction is not None and contraction < contraction_threshold:
        verdict = "stabilizing"
    else:
        verdict = "inconclusive"
    return TrendReport(
        kind=kind,
        p=p.p,
        Q=Q,
        probe_kind=probe,
        q=q,
        cell_counts=tuple(counts),
        values=tuple(values),
        rel_gaps=tuple(rel_gaps),
        increment_ratios=tuple(ratios),
        last_gap=last_gap,
        contraction=contraction,
        stabilized_within=stabilized,
        verdict=verdict,
        stability_rtol=stability_rtol,
    )
