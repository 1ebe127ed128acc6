"""Command-line front end.

Subcommands: exponents, characteristic, sharpness, split, bellman-verify,
conclusion-check, make-grid, export-csv.  All tabular output is CSV with a
leading comment block carrying the tool version and the full parameter set,
so identical invocations produce byte-identical files.  Files are written
atomically (temp file + rename).

Exit codes: 0 success, 2 precondition violation, 3 numeric failure,
4 infeasible split.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .bellman import (
    AveragePairRegion,
    builtin_candidate,
    read_candidate,
    theorem_conclusion_check,
    verify_candidate,
)
from .characteristics import characteristic
from .errors import (
    BoxweightsError,
    InfeasibleSplitError,
    NumericFailureError,
    PreconditionError,
)
from .exponents import Branch, ClassKind, PParam, extremal_alpha, sharp_range
from .grids import (
    export_cells_csv,
    power_weight_grid,
    read_grid,
    uniform_measure,
    write_grid,
    WeightGrid,
    _atomic_write,
)
from .splitting import (
    SplitConfig,
    TRACE_COLUMNS,
    build_tree,
    chain_report,
    trace_rows,
)

#: Central defaults shared by the CLI and documented in the README.
DEFAULTS = {
    "ratio_c": 0.2,
    "q1_factor": 1.05,
    "segment_samples": 257,
    "seed": 0,
    "verify_segments": 200,
    "verify_rel_tol": 1e-9,
    "x1_range": (0.1, 10.0),
    "refine_factor": 4,
    "refine_levels": 3,
    "stability_rtol": 0.01,
    "sharpness_cells": (256, 1024, 4096, 16384),
    "a_side_inside_offset": 0.1,
    "rh_side_inside_offset": -0.5,
}


def _kind(text: str) -> ClassKind:
    return ClassKind(text)


def _header_lines(params: dict) -> list[str]:
    lines = [f"# boxweights {__version__}"]
    for key in sorted(params):
        lines.append(f"# param {key}={params[key]}")
    return lines


def _write_csv(path, params: dict, columns, rows) -> None:
    buf = _header_lines(params)
    buf.append(",".join(columns))
    for row in rows:
        buf.append(",".join(str(row[c]) for c in columns))
    _atomic_write(path, "\n".join(buf) + "\n")


def _fmt(x: float) -> str:
    return repr(float(x))


# ----------------------------------------------------------------------
# Subcommand implementations.
# ----------------------------------------------------------------------


def cmd_exponents(args) -> int:
    rng = sharp_range(_kind(args.klass), PParam(args.p), args.Q)
    print(
        f"class={args.klass} p={_fmt(args.p)} Q={_fmt(args.Q)} "
        f"s_minus={_fmt(rng.s_minus)} s_plus={_fmt(rng.s_plus)} "
        f"a_lower={_fmt(rng.a_lower)} rh_upper={_fmt(rng.rh_upper)}"
    )
    if args.csv:
        params = {"command": "exponents", "class": args.klass, "p": args.p, "Q": args.Q}
        _write_csv(
            args.csv,
            params,
            ("class", "p", "Q", "s_minus", "s_plus", "a_lower", "rh_upper"),
            [
                {
                    "class": args.klass,
                    "p": _fmt(args.p),
                    "Q": _fmt(args.Q),
                    "s_minus": _fmt(rng.s_minus),
                    "s_plus": _fmt(rng.s_plus),
                    "a_lower": _fmt(rng.a_lower),
                    "rh_upper": _fmt(rng.rh_upper),
                }
            ],
        )
    return 0


def cmd_characteristic(args) -> int:
    measure, weight = read_grid(args.grid)
    report = characteristic(measure, weight, _kind(args.klass), args.p)
    print(
        f"class={args.klass} q={_fmt(args.p)} value={_fmt(report.value)} "
        f"argmax={report.argmax_box} boxes_scanned={report.boxes_scanned}"
    )
    if args.csv:
        params = {
            "command": "characteristic",
            "class": args.klass,
            "p": args.p,
            "grid": args.grid,
        }
        _write_csv(
            args.csv,
            params,
            ("class", "q", "value", "argmax", "boxes_scanned"),
            [
                {
                    "class": args.klass,
                    "q": _fmt(args.p),
                    "value": _fmt(report.value),
                    "argmax": str(report.argmax_box),
                    "boxes_scanned": report.boxes_scanned,
                }
            ],
        )
    return 0


def cmd_sharpness(args) -> int:
    kind = _kind(args.klass)
    side = Branch(args.side)
    p = PParam(args.p)
    rng = sharp_range(kind, p, args.Q)
    alpha = extremal_alpha(kind, p, args.Q, side)
    if side is Branch.MINUS:
        probe = ClassKind.MUCKENHOUPT_A
        critical_q = args.critical_q if args.critical_q else rng.a_lower
        inside_q = args.inside_q if args.inside_q else critical_q + DEFAULTS["a_side_inside_offset"]
    else:
        probe = ClassKind.REVERSE_HOLDER
        critical_q = args.critical_q if args.critical_q else rng.rh_upper
        inside_q = args.inside_q if args.inside_q else critical_q + DEFAULTS["rh_side_inside_offset"]
    cells = [int(c) for c in args.cells.split(",")]
    rows = []
    for n in cells:
        measure, weight = power_weight_grid(alpha, n)
        critical = characteristic(measure, weight, probe, critical_q)
        inside = characteristic(measure, weight, probe, inside_q)
        rows.append(
            {
                "cells": n,
                "critical_q": _fmt(critical_q),
                "critical_value": _fmt(critical.value),
                "inside_q": _fmt(inside_q),
                "inside_value": _fmt(inside.value),
            }
        )
        print(
            f"N={n} [{probe.value}] q={critical_q:g}: {critical.value:.9f}   "
            f"q={inside_q:g}: {inside.value:.9f}"
        )
    params = {
        "command": "sharpness",
        "class": args.klass,
        "p": args.p,
        "Q": args.Q,
        "side": args.side,
        "alpha": alpha,
        "probe_class": probe.value,
        "cells": args.cells,
        "critical_q": critical_q,
        "inside_q": inside_q,
    }
    if args.out:
        _write_csv(
            args.out,
            params,
            ("cells", "critical_q", "critical_value", "inside_q", "inside_value"),
            rows,
        )
    return 0


def cmd_split(args) -> int:
    measure, weight = read_grid(args.grid)
    kind = _kind(args.klass)
    p = PParam(args.p)
    base = characteristic(measure, weight, kind, args.p)
    Q = args.Q if args.Q else base.value
    if base.value > Q * (1.0 + 1e-9):
        raise PreconditionError(
            f"grid characteristic {base.value} exceeds the requested bound Q={Q}"
        )
    Q1 = args.Q1 if args.Q1 else Q * DEFAULTS["q1_factor"]
    config = SplitConfig(
        kind=kind,
        p=p,
        Q=Q,
        Q1=Q1,
        c=args.c,
        levels=args.levels,
        segment_samples=args.samples,
    )
    tree = build_tree(measure, weight, config)
    for level in range(tree.depth + 1):
        nodes = tree.levels[level]
        ratios = [n.ratio for n in nodes if n.ratio is not None]
        print(
            f"level {level}: nodes={len(nodes)} "
            f"max_diameter={tree.max_diameter(level):.6g}"
            + (
                f" ratio_range=[{min(ratios):.4f}, {max(ratios):.4f}]"
                if ratios
                else ""
            )
        )
    params = {
        "command": "split",
        "class": args.klass,
        "p": args.p,
        "Q": Q,
        "Q1": Q1,
        "c": args.c,
        "levels": args.levels,
        "segment_samples": args.samples,
        "grid": args.grid,
    }
    if args.trace:
        _write_csv(args.trace, params, TRACE_COLUMNS, trace_rows(tree))
    return 0


def cmd_bellman_verify(args) -> int:
    kind = _kind(args.klass)
    p = PParam(args.p)
    if args.candidate.startswith("builtin:"):
        cand = builtin_candidate(args.candidate, kind, p, args.Q)
    else:
        cand = read_candidate(args.candidate)
    r = args.r if args.r is not None else cand.r
    region = AveragePairRegion(kind, p, args.Q)
    x1_lo, x1_hi = (float(t) for t in args.x1_range.split(","))
    report = verify_candidate(
        region,
        cand,
        r,
        segments=args.segments,
        seed=args.seed,
        rel_tol=args.tol,
        x1_range=(x1_lo, x1_hi),
    )
    verdict = "pass" if report.verdict else "fail"
    print(
        f"verdict={verdict} segments={report.segments_tested} "
        f"violations={len(report.violations)} "
        f"boundary_max_error={report.boundary_max_error:.3g} c_hat={report.c_hat:.9g}"
    )
    for v in report.violations[:10]:
        print(
            f"  violation at lam={v.lam}: deficit={v.deficit:.3g} "
            f"between {v.x_a} and {v.x_b}"
        )
    if report.failure_point is not None:
        print(f"  candidate undefined at {report.failure_point}")
    if args.report:
        params = {
            "command": "bellman-verify",
            "class": args.klass,
            "p": args.p,
            "Q": args.Q,
            "r": r,
            "candidate": args.candidate,
            "segments": args.segments,
            "seed": args.seed,
            "tol": args.tol,
            "x1_range": args.x1_range,
        }
        rows = [
            {
                "record": "summary",
                "lam": "",
                "deficit": "",
                "x_a": "",
                "x_b": "",
                "verdict": verdict,
                "violations": len(report.violations),
                "boundary_max_error": _fmt(report.boundary_max_error),
                "c_hat": _fmt(report.c_hat),
            }
        ]
        for v in report.violations:
            rows.append(
                {
                    "record": "violation",
                    "lam": _fmt(v.lam),
                    "deficit": _fmt(v.deficit),
                    "x_a": f"{v.x_a[0]!r}|{v.x_a[1]!r}",
                    "x_b": f"{v.x_b[0]!r}|{v.x_b[1]!r}",
                    "verdict": "",
                    "violations": "",
                    "boundary_max_error": "",
                    "c_hat": "",
                }
            )
        _write_csv(
            args.report,
            params,
            (
                "record",
                "lam",
                "deficit",
                "x_a",
                "x_b",
                "verdict",
                "violations",
                "boundary_max_error",
                "c_hat",
            ),
            rows,
        )
    return 0


def cmd_conclusion_check(args) -> int:
    if args.grid:
        measure, weight = read_grid(args.grid)
    elif args.alpha is not None:
        measure, weight = power_weight_grid(args.alpha, args.cells)
    else:
        raise PreconditionError("provide either --grid or --alpha/--cells")
    kind = _kind(args.klass)
    probe = _kind(args.probe_class) if args.probe_class else None
    report = theorem_conclusion_check(
        measure,
        weight,
        kind,
        PParam(args.p),
        args.q,
        args.Q,
        probe_kind=probe,
        refine_factor=args.refine_factor,
        levels=args.levels,
        stability_rtol=args.stability_rtol,
    )
    print(
        f"verdict={report.verdict} q={args.q:g} probe={report.probe_kind.value} "
        f"values={['%.9g' % v for v in report.values]} last_gap={report.last_gap:.4g}"
        + (f" contraction={report.contraction:.4g}" if report.contraction else "")
    )
    if args.out:
        params = {
            "command": "conclusion-check",
            "class": args.klass,
            "p": args.p,
            "Q": args.Q,
            "q": args.q,
            "probe_class": report.probe_kind.value,
            "refine_factor": args.refine_factor,
            "levels": args.levels,
            "stability_rtol": args.stability_rtol,
            "grid": args.grid or f"power:{args.alpha}:{args.cells}",
        }
        rows = [
            {"cells": c, "value": _fmt(v)}
            for c, v in zip(report.cell_counts, report.values)
        ]
        rows.append({"cells": "verdict", "value": report.verdict})
        _write_csv(args.out, params, ("cells", "value"), rows)
    return 0


def cmd_make_grid(args) -> int:
    if args.generator == "power":
        measure, weight = power_weight_grid(args.alpha, args.cells)
    elif args.generator == "constant":
        measure = uniform_measure(args.cells)
        weight = WeightGrid(np.full(measure.shape, args.value))
    else:
        raise PreconditionError(f"unknown generator {args.generator}")
    write_grid(args.out, measure, weight)
    print(f"wrote {args.out} ({args.generator}, {args.cells} cells)")
    return 0


def cmd_export_csv(args) -> int:
    measure, weight = read_grid(args.grid)
    export_cells_csv(
        args.out,
        measure,
        weight,
        header_lines=[f"boxweights {__version__}", f"param grid={args.grid}"],
    )
    print(f"wrote {args.out}")
    return 0


# ----------------------------------------------------------------------
# Parser.
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boxweights",
        description="Sharp exponents, box characteristics and splitting experiments "
        "for strong Muckenhoupt / Reverse Holder weights.",
    )
    parser.add_argument("--version", action="version", version=f"boxweights {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_class_p(sp):
        sp.add_argument("--class", dest="klass", choices=["ap", "rh"], required=True)
        sp.add_argument("--p", type=float, required=True)

    sp = sub.add_parser("exponents", help="sharp self-improvement exponent window")
    add_class_p(sp)
    sp.add_argument("--Q", type=float, required=True)
    sp.add_argument("--csv", default=None)
    sp.set_defaults(func=cmd_exponents)

    sp = sub.add_parser("characteristic", help="box characteristic of a grid weight")
    add_class_p(sp)
    sp.add_argument("--grid", required=True)
    sp.add_argument("--csv", default=None)
    sp.set_defaults(func=cmd_characteristic)

    sp = sub.add_parser("sharpness", help="refinement table for the extremal power weight")
    add_class_p(sp)
    sp.add_argument("--Q", type=float, required=True)
    sp.add_argument("--side", choices=["plus", "minus"], required=True)
    sp.add_argument(
        "--cells",
        default=",".join(str(c) for c in DEFAULTS["sharpness_cells"]),
        help="comma-separated cell counts",
    )
    sp.add_argument("--critical-q", type=float, default=None)
    sp.add_argument("--inside-q", type=float, default=None)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_sharpness)

    sp = sub.add_parser("split", help="build a measure-balanced split tree")
    add_class_p(sp)
    sp.add_argument("--grid", required=True)
    sp.add_argument("--Q", type=float, default=None, help="default: grid characteristic")
    sp.add_argument("--Q1", type=float, default=None, help="default: 1.05 * Q")
    sp.add_argument("--c", type=float, default=DEFAULTS["ratio_c"])
    sp.add_argument("--levels", type=int, required=True)
    sp.add_argument("--samples", type=int, default=DEFAULTS["segment_samples"])
    sp.add_argument("--trace", default=None)
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("bellman-verify", help="verify a candidate function")
    add_class_p(sp)
    sp.add_argument("--Q", type=float, required=True)
    sp.add_argument("--r", type=float, default=None, help="default: candidate metadata")
    sp.add_argument("--candidate", required=True, help="builtin:linear, builtin:power:<r> or a file path")
    sp.add_argument("--segments", type=int, default=DEFAULTS["verify_segments"])
    sp.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    sp.add_argument("--tol", type=float, default=DEFAULTS["verify_rel_tol"])
    sp.add_argument(
        "--x1-range",
        default=f"{DEFAULTS['x1_range'][0]},{DEFAULTS['x1_range'][1]}",
        help="comma-separated sampling range for x1",
    )
    sp.add_argument("--report", default=None)
    sp.set_defaults(func=cmd_bellman_verify)

    sp = sub.add_parser("conclusion-check", help="membership trend across refinements")
    add_class_p(sp)
    sp.add_argument("--Q", type=float, required=True)
    sp.add_argument("--q", type=float, required=True)
    sp.add_argument("--probe-class", choices=["ap", "rh"], default=None)
    sp.add_argument("--grid", default=None)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--cells", type=int, default=256)
    sp.add_argument("--refine-factor", type=int, default=DEFAULTS["refine_factor"])
    sp.add_argument("--levels", type=int, default=DEFAULTS["refine_levels"])
    sp.add_argument("--stability-rtol", type=float, default=DEFAULTS["stability_rtol"])
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_conclusion_check)

    sp = sub.add_parser("make-grid", help="write a generated grid file")
    sp.add_argument("--generator", choices=["power", "constant"], required=True)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--cells", type=int, required=True)
    sp.add_argument("--value", type=float, default=1.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_make_grid)

    sp = sub.add_parser("export-csv", help="CSV dump of a grid file's cell table")
    sp.add_argument("--grid", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_export_csv)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleSplitError as exc:
        print(f"infeasible split: {exc}", file=sys.stderr)
        return 4
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except BoxweightsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
