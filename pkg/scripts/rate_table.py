#!/usr/bin/env python3
"""Fit log-log slopes of several solvers on one seeded instance; optionally keep the CSV traces."""

import argparse
import pathlib
import sys

from foms.errors import ArgumentError
from foms.harness.instances import PROBLEMS, InstanceSpec, generate_problem
from foms.harness.rates import fit_rate
from foms.harness.solvers import SOLVERS, run_solver


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default="simplex-qp", choices=PROBLEMS)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--m", type=int, default=50)
    ap.add_argument("--lambda", dest="lam", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--kmin", type=int, default=50)
    ap.add_argument("--solvers", default="bpgm,abpgm,gcg,scg,cg-inexact")
    ap.add_argument("--outdir", type=pathlib.Path)
    args = ap.parse_args()
    inst = generate_problem(InstanceSpec(args.problem, args.n, args.m, args.lam, args.seed))
    if args.outdir:
        args.outdir.mkdir(parents=True, exist_ok=True)
    print(f"{'solver':12s} {'slope':>8s} {'theory':>8s} {'final gap':>11s}")
    for name in args.solvers.split(","):
        if name not in SOLVERS:
            print(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}", file=sys.stderr)
            return 1
        res = run_solver(name, inst, args.steps)
        try:
            slope = fit_rate(res.trace, (args.kmin, args.steps)).slope
        except ArgumentError:
            slope = float("nan")
        print(f"{name:12s} {slope:8.3f} {res.theory_slope:8.3f} {res.trace.last.gap:11.3e}")
        if args.outdir:
            res.trace.to_csv(str(args.outdir / f"{name}.csv"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
