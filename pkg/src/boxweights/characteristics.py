"""Box characteristics: suprema of average functionals over all axis-parallel boxes.

For a weight w and measure mu on a cell lattice, the Muckenhoupt
characteristic at exponent q is

    sup over boxes R of  <w>_R * <w**q1>_R ** (q - 1),   q1 = -1/(q - 1),

and the Reverse Holder characteristic is

    sup over boxes R of  <w**q>_R ** (1/q) / <w>_R,

where <f>_R is the mu-average over R.  The supremum is computed by
exhaustive enumeration of all index ranges; every box value comes from
prefix-table queries, so the scan is exact over the finite box family and
bit-for-bit reproducible by the naive per-box summation oracle below.

Ties in the argmax break to the lexicographically smallest index tuple
(a1, b1, a2, b2, ...); enumeration visits boxes in that order and only a
strictly larger value replaces the incumbent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._summation import dd_sub, dd_sub_rounded
from .errors import PreconditionError
from .exponents import ClassKind, _as_pparam
from .grids import BoxIdx, GridMeasure, PrefixTables, WeightGrid, validate


@dataclass(frozen=True)
class CharacteristicReport:
    """Result of a characteristic scan.

    value is the supremum over positive-measure boxes (>= 1 always, +inf if
    a moment cell overflowed); argmax_box attains it; boxes_scanned counts
    the positive-measure boxes examined (0 for the overflow short-circuit).
    """

    kind: ClassKind
    exponent: float
    value: float
    argmax_box: BoxIdx | None
    boxes_scanned: int


def pair_gauge(kind: ClassKind, p, x1, x2):
    """Characteristic expression at an average pair (x1, x2).

    Muckenhoupt: x1 * x2**(p-1) with x2 the average of w**p1.
    Reverse Holder: x2**(1/p) / x1 with x2 the average of w**p.
    Equals 1 exactly on the curve x2 = x1**p1 (resp. x2 = x1**p) and is >= 1
    at every positive-measure box point by Jensen's inequality.
    """
    p = _as_pparam(p)
    if kind is ClassKind.MUCKENHOUPT_A:
        return x1 * x2 ** (p.p - 1.0)
    return x2 ** (1.0 / p.p) / x1


def second_moment_exponent(kind: ClassKind, q: float) -> float:
    """Weight power entering the second average of the class functional."""
    if kind is ClassKind.MUCKENHOUPT_A:
        if not q > 1.0:
            raise PreconditionError(f"Muckenhoupt exponent must exceed 1, got {q}")
        return -1.0 / (q - 1.0)
    if not q >= 1.0:
        raise PreconditionError(f"Reverse Holder exponent must be >= 1, got {q}")
    return q


def characteristic(
    measure: GridMeasure,
    weight: WeightGrid,
    kind: ClassKind,
    q: float,
    tables: PrefixTables | None = None,
) -> CharacteristicReport:
    """Exact supremum of the class-(kind, q) functional over all boxes."""
    validate(measure, weight)
    s2 = second_moment_exponent(kind, q)
    if tables is None:
        tables = PrefixTables(measure, weight, (1.0, s2))
    else:
        tables.ensure(1.0)
        tables.ensure(s2)

    bad = tables.first_nonfinite_cell(s2)
    if bad is not None:
        return CharacteristicReport(
            kind=kind,
            exponent=q,
            value=math.inf,
            argmax_box=BoxIdx(tuple((i, i + 1) for i in bad)),
            boxes_scanned=0,
        )

    scan = {1: _scan_1d, 2: _scan_2d, 3: _scan_3d}[measure.ndim]
    value, box, count = scan(tables, kind, q, s2)
    return CharacteristicReport(
        kind=kind, exponent=q, value=value, argmax_box=box, boxes_scanned=count
    )


def ap_characteristic(measure, weight, p, tables=None) -> CharacteristicReport:
    p = _as_pparam(p)
    return characteristic(measure, weight, ClassKind.MUCKENHOUPT_A, p.p, tables)


def rh_characteristic(measure, weight, p, tables=None) -> CharacteristicReport:
    p = _as_pparam(p)
    return characteristic(measure, weight, ClassKind.REVERSE_HOLDER, p.p, tables)


@dataclass(frozen=True)
class ScanEntry:
    """One row of a q-scan; exactly one of report/error is set."""

    q: float
    report: CharacteristicReport | None
    error: str | None

    @property
    def value(self) -> float | None:
        return None if self.report is None else self.report.value


def q_scan(measure, weight, kind: ClassKind, q_list, tables=None) -> list[ScanEntry]:
    """Characteristic per q; invalid entries carry an error and the scan continues."""
    if tables is None:
        tables = PrefixTables(measure, weight, (1.0,))
    entries = []
    for q in q_list:
        try:
            report = characteristic(measure, weight, kind, float(q), tables)
            entries.append(ScanEntry(q=float(q), report=report, error=None))
        except PreconditionError as exc:
            entries.append(ScanEntry(q=float(q), report=None, error=str(exc)))
    return entries


# ----------------------------------------------------------------------
# Scan engines.  Per-box values use only IEEE +-*/ and a single libm pow
# so the vectorized path and the scalar oracle produce identical doubles
# from identical box sums.
# ----------------------------------------------------------------------


def _vec_values(kind, q, m, sw, ss):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if kind is ClassKind.MUCKENHOUPT_A:
            vals = (sw / m) * np.power(ss / m, q - 1.0)
        else:
            vals = np.power(ss / m, 1.0 / q) / (sw / m)
        return np.where(m > 0.0, vals, -np.inf)


def _scalar_value(kind, q, m, sw, ss):
    # np.power rather than ** so scalar and vectorized evaluation use the
    # same exponentiation primitive (libm pow and numpy's kernel can differ
    # in the last ulp, which would break exact dual-route agreement).
    if kind is ClassKind.MUCKENHOUPT_A:
        return float((sw / m) * np.power(np.float64(ss / m), q - 1.0))
    return float(np.power(np.float64(ss / m), 1.0 / q) / (sw / m))


def _scan_1d(tables, kind, q, s2):
    mh, ml = tables.mass_table
    wh, wl = tables.table(1.0)
    sh, sl = tables.table(s2)
    n = mh.size - 1
    best = -math.inf
    best_box = None
    count = 0
    for a in range(n):
        m = dd_sub_rounded(mh[a + 1 :], ml[a + 1 :], mh[a], ml[a])
        sw = dd_sub_rounded(wh[a + 1 :], wl[a + 1 :], wh[a], wl[a])
        ss = dd_sub_rounded(sh[a + 1 :], sl[a + 1 :], sh[a], sl[a])
        vals = _vec_values(kind, q, m, sw, ss)
        count += int(np.count_nonzero(m > 0.0))
        i = int(np.argmax(vals))
        v = float(vals[i])
        if v > best:
            best = v
            best_box = BoxIdx(((a, a + 1 + i),))
    return best, best_box, count


def _scan_2d(tables, kind, q, s2):
    mh, ml = tables.mass_table
    wh, wl = tables.table(1.0)
    sh, sl = tables.table(s2)
    n1 = mh.shape[0] - 1
    best = -math.inf
    best_box = None
    count = 0
    for a1 in range(n1):
        for b1 in range(a1 + 1, n1 + 1):
            # Column prefix sums restricted to rows [a1, b1), kept in dd.
            tm = dd_sub(mh[b1], ml[b1], mh[a1], ml[a1])
            tw = dd_sub(wh[b1], wl[b1], wh[a1], wl[a1])
            ts = dd_sub(sh[b1], sl[b1], sh[a1], sl[a1])
            n2 = tm[0].size - 1
            for a2 in range(n2):
                m = dd_sub_rounded(tm[0][a2 + 1 :], tm[1][a2 + 1 :], tm[0][a2], tm[1][a2])
                sw = dd_sub_rounded(tw[0][a2 + 1 :], tw[1][a2 + 1 :], tw[0][a2], tw[1][a2])
                ss = dd_sub_rounded(ts[0][a2 + 1 :], ts[1][a2 + 1 :], ts[0][a2], ts[1][a2])
                vals = _vec_values(kind, q, m, sw, ss)
                count += int(np.count_nonzero(m > 0.0))
                i = int(np.argmax(vals))
                v = float(vals[i])
                if v > best:
                    best = v
                    best_box = BoxIdx(((a1, b1), (a2, a2 + 1 + i)))
    return best, best_box, count


def _scan_3d(tables, kind, q, s2):
    mh, ml = tables.mass_table
    wh, wl = tables.table(1.0)
    sh, sl = tables.table(s2)
    n1 = mh.shape[0] - 1
    best = -math.inf
    best_box = None
    count = 0
    for a1 in range(n1):
        for b1 in range(a1 + 1, n1 + 1):
            sm = dd_sub(mh[b1], ml[b1], mh[a1], ml[a1])
            sw2 = dd_sub(wh[b1], wl[b1], wh[a1], wl[a1])
            ss2 = dd_sub(sh[b1], sl[b1], sh[a1], sl[a1])
            n2 = sm[0].shape[0] - 1
            for a2 in range(n2):
                for b2 in range(a2 + 1, n2 + 1):
                    lm = dd_sub(sm[0][b2], sm[1][b2], sm[0][a2], sm[1][a2])
                    lw = dd_sub(sw2[0][b2], sw2[1][b2], sw2[0][a2], sw2[1][a2])
                    ls = dd_sub(ss2[0][b2], ss2[1][b2], ss2[0][a2], ss2[1][a2])
                    n3 = lm[0].size - 1
                    for a3 in range(n3):
                        m = dd_sub_rounded(lm[0][a3 + 1 :], lm[1][a3 + 1 :], lm[0][a3], lm[1][a3])
                        sw = dd_sub_rounded(lw[0][a3 + 1 :], lw[1][a3 + 1 :], lw[0][a3], lw[1][a3])
                        ss = dd_sub_rounded(ls[0][a3 + 1 :], ls[1][a3 + 1 :], ls[0][a3], ls[1][a3])
                        vals = _vec_values(kind, q, m, sw, ss)
                        count += int(np.count_nonzero(m > 0.0))
                        i = int(np.argmax(vals))
                        v = float(vals[i])
                        if v > best:
                            best = v
                            best_box = BoxIdx(((a1, b1), (a2, b2), (a3, a3 + 1 + i)))
    return best, best_box, count


# ----------------------------------------------------------------------
# Independent oracle: plain nested-loop enumeration with per-box math.fsum.
# Shares only the per-cell moment arrays and the scalar value formula with
# the production path; summation and enumeration are independent.
# ----------------------------------------------------------------------


def naive_characteristic(measure, weight, kind: ClassKind, q: float):
    """Brute-force supremum: direct fsum per box, lexicographic enumeration.

    Returns (value, argmax_box, boxes_scanned); must agree exactly with
    characteristic() because both routes produce correctly rounded box sums.
    """
    validate(measure, weight)
    s2 = second_moment_exponent(kind, q)
    from .grids import moment_cells

    mass = measure.mass
    wcells = moment_cells(mass, weight.values, 1.0)
    scells = moment_cells(mass, weight.values, s2)
    shape = measure.shape

    best = -math.inf
    best_box = None
    count = 0

    def boxes(prefix, axis):
        if axis == len(shape):
            yield tuple(prefix)
            return
        for a in range(shape[axis]):
            for b in range(a + 1, shape[axis] + 1):
                prefix.append((a, b))
                yield from boxes(prefix, axis + 1)
                prefix.pop()

    for ranges in boxes([], 0):
        slc = tuple(slice(a, b) for a, b in ranges)
        m = math.fsum(mass[slc].reshape(-1).tolist())
        if m == 0.0:
            continue
        sw = math.fsum(wcells[slc].reshape(-1).tolist())
        ss = math.fsum(scells[slc].reshape(-1).tolist())
        v = _scalar_value(kind, q, m, sw, ss)
        count += 1
        if v > best:
            best = v
            best_box = BoxIdx(ranges)
    return best, best_box, count
