#!/usr/bin/env python3
"""Refinement study of the sharp exponent windows for power-weight extremizers.

For a class bound Q the extremal power weights x**alpha saturate the
self-improvement windows: at the critical exponent the q-characteristic of
the discretized weight grows without bound along grid refinements, while
strictly inside the window it converges to the analytic value from below.
This script tabulates both columns over a refinement ladder for the
Muckenhoupt hypothesis (Q = 4/3, alpha = 1/2, critical Muckenhoupt exponent
1.5) and the Reverse Holder hypothesis (Q = 2/sqrt(3), alpha = -1/3,
critical Reverse Holder exponent 3), printing the relative gaps and the
increment contraction ratios that separate the two regimes.

Usage:
  python3 scripts/run_sharpness_study.py                 # N = 2**8 .. 2**14
  python3 scripts/run_sharpness_study.py --max-log2 12   # stop earlier
  python3 scripts/run_sharpness_study.py --csv out.csv
"""

from __future__ import annotations

import argparse
import math
import time

from boxweights import (
    Branch,
    ClassKind,
    PParam,
    characteristic,
    extremal_alpha,
    power_weight_grid,
    sharp_range,
)

STUDIES = (
    ("muckenhoupt", ClassKind.MUCKENHOUPT_A, 4.0 / 3.0, Branch.MINUS, 0.1),
    ("reverse-holder", ClassKind.REVERSE_HOLDER, 2.0 / math.sqrt(3.0), Branch.PLUS, -0.5),
)


def run_study(name, kind, Q, side, inside_offset, log2_ns, rows):
    p = PParam(2.0)
    window = sharp_range(kind, p, Q)
    alpha = extremal_alpha(kind, p, Q, side)
    if side is Branch.MINUS:
        probe, critical = ClassKind.MUCKENHOUPT_A, window.a_lower
    else:
        probe, critical = ClassKind.REVERSE_HOLDER, window.rh_upper
    inside = critical + inside_offset
    print(f"\n== {name}: Q={Q:.10g}, alpha={alpha:.10g}, "
          f"critical q={critical:.10g}, inside q={inside:.10g} ==")
    crit_vals, in_vals = [], []
    for k in log2_ns:
        n = 2**k
        measure, weight = power_weight_grid(alpha, n)
        t0 = time.time()
        c = characteristic(measure, weight, probe, critical).value
        i = characteristic(measure, weight, probe, inside).value
        crit_vals.append(c)
        in_vals.append(i)
        print(f"  N=2^{k:<3d} critical={c:.9f}  inside={i:.9f}  ({time.time()-t0:.1f}s)")
        rows.append((name, n, critical, c, inside, i))
    for label, vals in (("critical", crit_vals), ("inside", in_vals)):
        gaps = [(b - a) / a for a, b in zip(vals, vals[1:])]
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        ratios = [d2 / d1 for d1, d2 in zip(diffs, diffs[1:]) if d1 != 0]
        print(f"  {label}: rel gaps {['%.4f' % g for g in gaps]}, "
              f"increment ratios {['%.3f' % r for r in ratios]}")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--min-log2", type=int, default=8)
    ap.add_argument("--max-log2", type=int, default=14)
    ap.add_argument("--csv", default=None)
    args = ap.parse_args(argv)
    log2_ns = range(args.min_log2, args.max_log2 + 1, 2)
    rows = []
    for study in STUDIES:
        run_study(*study, log2_ns, rows)
    if args.csv:
        from boxweights.grids import _atomic_write

        lines = ["study,cells,critical_q,critical_value,inside_q,inside_value"]
        for name, n, cq, cv, iq, iv in rows:
            lines.append(f"{name},{n},{cq!r},{cv!r},{iq!r},{iv!r}")
        _atomic_write(args.csv, "\n".join(lines) + "\n")
        print(f"\nwrote {args.csv}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
