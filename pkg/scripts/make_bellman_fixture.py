#!/usr/bin/env python3
"""Generate tabulated candidate fixtures for the Bellman verifier.

Construction for the Muckenhoupt class at p = 2 (band gauge u = x1 * x2):
look for a candidate of the form B(x1, x2) = x1**r * phi(u) with phi
increasing, concave and phi(1) = 1, so the lower-boundary condition
B(x1, 1/x1) = x1**r holds exactly.  Writing a = r(r-1), k = (r+1)**2, the
Hessian of B is negative semidefinite exactly when

    phi'' <= 0,
    a*phi + 2*r*u*phi' + u**2*phi'' <= 0,
    D(u) = a*phi*phi'' - 2*u*phi'*phi'' - k*phi'**2 >= 0,

and negative semidefiniteness at every interior point is equivalent to
concavity along every segment inside the band (the band is open and
connected, so a segment argument is local).  Prescribing the determinant
margin D(u) = eps * phi'**2 > 0 turns the system into the explicit ODE

    phi'' = (k + eps) * phi'**2 / (a*phi - 2*u*phi'),

which keeps all three inequalities strict as long as the denominator stays
negative.  The script integrates it with RK4, scans the initial slope for a
run that survives to u = Q with margins, extends phi linearly (C1) beyond
[1, Q] so lattice nodes slightly outside the band are well defined, and
tabulates B on a log-log lattice.

Tabulation cost: bilinear interpolation carries O(h**2) curvature noise, so
the table can only be certified concave down to a tolerance of that order.
The self-check runs the package verifier at 10x segment density with the
lattice-commensurate tolerance printed in the report.

Usage:
  python3 scripts/make_bellman_fixture.py --r 1.2 --Q 2.0 --out fixture.txt
  python3 scripts/make_bellman_fixture.py --r 1.2 --Q 2.0 --n1 81 --n2 101 \
      --x1-lo 0.5 --x1-hi 2.0 --out coarse.txt
  python3 scripts/make_bellman_fixture.py --control x13 --out control.txt
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from boxweights import ClassKind, PParam
from boxweights.bellman import (
    AveragePairRegion,
    BellmanCandidate,
    tabulate_candidate,
    verify_candidate,
    write_candidate,
)

A_CLASS = ClassKind.MUCKENHOUPT_A


class ConstructionError(RuntimeError):
    pass


def integrate_phi(r, Q, slope0, eps, steps=16384):
    """RK4 integration of the margin ODE on [1, Q].

    Returns (u, phi, dphi) arrays or raises ConstructionError when the
    denominator margin, slope positivity or positivity of phi fails.
    """
    a = r * (r - 1.0)
    k = (r + 1.0) ** 2

    def rhs(u, y):
        phi, dphi = y
        den = a * phi - 2.0 * u * dphi
        if den >= -1e-3:
            raise ConstructionError(f"denominator margin lost at u={u:.6f}")
        return np.array([dphi, (k + eps) * dphi * dphi / den])

    h = (Q - 1.0) / steps
    u = np.linspace(1.0, Q, steps + 1)
    phi = np.empty(steps + 1)
    dphi = np.empty(steps + 1)
    y = np.array([1.0, slope0])
    phi[0], dphi[0] = y
    for i in range(steps):
        ui = u[i]
        k1 = rhs(ui, y)
        k2 = rhs(ui + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(ui + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(ui + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if y[1] <= 1e-3:
            raise ConstructionError(f"slope collapsed at u={u[i + 1]:.6f}")
        if y[0] <= 0.0:
            raise ConstructionError(f"phi nonpositive at u={u[i + 1]:.6f}")
        phi[i + 1], dphi[i + 1] = y
    return u, phi, dphi


def find_phi(r, Q, slopes=(0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0), epsilons=(0.4, 0.2, 0.1, 0.05)):
    """First (slope0, eps) whose integration reaches Q with margins intact."""
    last_err = None
    for eps in epsilons:
        for s0 in slopes:
            try:
                u, phi, dphi = integrate_phi(r, Q, s0, eps)
            except ConstructionError as exc:
                last_err = exc
                continue
            return u, phi, dphi, s0, eps
    raise ConstructionError(
        f"no admissible slope found for r={r}, Q={Q}: last failure: {last_err}"
    )


def majorant_function(r, Q, u_grid, phi, dphi):
    """Callable B(x1, x2) = x1**r * phi_ext(x1 * x2).

    phi is extended beyond [1, Q] by C1 exponential tails so that lattice
    nodes outside the band (the tabulation rectangle is larger than the
    diagonal band) still carry positive values.
    """
    slope_lo = float(dphi[0])
    slope_hi = float(dphi[-1])
    phi_hi = float(phi[-1])

    def phi_ext(u):
        u = np.asarray(u, dtype=np.float64)
        core = np.interp(np.clip(u, 1.0, Q), u_grid, phi)
        below = np.exp(slope_lo * (np.minimum(u, 1.0) - 1.0))
        above = phi_hi * np.exp((slope_hi / phi_hi) * (np.maximum(u, Q) - Q))
        return np.where(u < 1.0, below, np.where(u > Q, above, core))

    def fn(x1, x2):
        return np.asarray(x1) ** r * phi_ext(np.asarray(x1) * np.asarray(x2))

    return fn


def build_majorant_candidate(r, Q, x1_range, n1, n2) -> tuple[BellmanCandidate, dict]:
    u, phi, dphi, s0, eps = find_phi(r, Q)
    fn = majorant_function(r, Q, u, phi, dphi)
    cand = tabulate_candidate(
        fn,
        A_CLASS,
        PParam(2.0),
        r,
        Q,
        x1_range=x1_range,
        n1=n1,
        n2=n2,
        source=f"majorant:r={r}:Q={Q}",
    )
    info = {
        "slope0": s0,
        "eps": eps,
        "phi_max": float(phi[-1]),
        "c_hat_bound": float(phi.max()),
        "h_xi": (math.log(x1_range[1]) - math.log(x1_range[0])) / (n1 - 1),
    }
    return cand, info


def build_convex_control(r, Q, x1_range, n1, n2) -> BellmanCandidate:
    """Tabulation of x1**r with r > 1: convex along x2-constant segments."""
    return tabulate_candidate(
        lambda x1, x2: np.asarray(x1) ** r,
        A_CLASS,
        PParam(2.0),
        r,
        Q,
        x1_range=x1_range,
        n1=n1,
        n2=n2,
        source=f"control:power:{r}",
    )


def self_check(cand: BellmanCandidate, x1_range, tol, segments, seed=0):
    region = AveragePairRegion(cand.kind, cand.p, cand.Q)
    return verify_candidate(
        region,
        cand,
        cand.r,
        segments=segments,
        seed=seed,
        rel_tol=tol,
        x1_range=x1_range,
    )


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r", type=float, default=1.2)
    ap.add_argument("--Q", type=float, default=2.0)
    ap.add_argument("--x1-lo", type=float, default=0.5)
    ap.add_argument("--x1-hi", type=float, default=2.0)
    ap.add_argument("--n1", type=int, default=701)
    ap.add_argument("--n2", type=int, default=901)
    ap.add_argument("--control", choices=["x13"], default=None,
                    help="write the convex x1**1.3 negative control instead")
    ap.add_argument("--tol", type=float, default=None,
                    help="self-check tolerance; default 40 * h**2")
    ap.add_argument("--segments", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    x1_range = (args.x1_lo, args.x1_hi)
    if args.control == "x13":
        cand = build_convex_control(1.3, args.Q, x1_range, args.n1, args.n2)
        write_candidate(args.out, cand)
        report = self_check(cand, x1_range, 1e-9, max(200, args.segments // 10), args.seed)
        print(f"wrote control {args.out}: verdict={report.verdict} "
              f"(expected False), violations={len(report.violations)}")
        return 0 if not report.verdict else 1

    cand, info = build_majorant_candidate(args.r, args.Q, x1_range, args.n1, args.n2)
    write_candidate(args.out, cand)
    tol = args.tol if args.tol is not None else 40.0 * info["h_xi"] ** 2
    report = self_check(cand, x1_range, tol, args.segments, args.seed)
    print(
        f"wrote {args.out}: slope0={info['slope0']} eps={info['eps']} "
        f"phi_max={info['phi_max']:.6f} lattice_h={info['h_xi']:.2e} tol={tol:.2e}"
    )
    print(
        f"self-check: verdict={report.verdict} violations={len(report.violations)} "
        f"boundary_err={report.boundary_max_error:.2e} c_hat={report.c_hat:.6f}"
    )
    return 0 if report.verdict else 1


if __name__ == "__main__":
    sys.exit(main())
