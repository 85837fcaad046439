"""Command-line entry point: solve, compare, rates, verify."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from ..errors import FomsError
from ..trace import SolverTrace
from .instances import PROBLEMS, InstanceSpec, generate_problem
from .rates import fit_rate
from .solvers import SOLVERS, run_solver
from .verify import BOUNDS, verify_bound

EXIT_OK, EXIT_USAGE, EXIT_VIOLATION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def read_config(path: str) -> dict:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--config")
    p.add_argument("--opt", action="append", default=[], metavar="KEY=VALUE", help="solver option")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="foms", description="First-order methods benchmark harness")
    sub = parser.add_subparsers(dest="command")
    s = sub.add_parser("solve", help="run one solver on one instance")
    _instance_args(s)
    s.add_argument("--solver")
    s.add_argument("--out")
    c = sub.add_parser("compare", help="run several solvers on one instance")
    _instance_args(c)
    c.add_argument("--solvers")
    c.add_argument("--out")
    r = sub.add_parser("rates", help="fit a stored trace")
    r.add_argument("trace")
    r.add_argument("--kmin", type=int, default=1)
    r.add_argument("--kmax", type=int)
    r.add_argument("--theory-slope", type=float, default=math.nan)
    v = sub.add_parser("verify", help="check one cited bound")
    v.add_argument("--bound")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    return parser


_DEFAULTS = {"problem": "lasso", "n": 50, "m": 0, "lam": 0.1, "seed": 0, "mu": 1.0, "radius": 1.0, "steps": 1000}
_TYPES = {"n": int, "m": int, "seed": int, "steps": int, "lam": float, "mu": float, "radius": float}


def _merged(args) -> dict:
    """Defaults, then config file, then explicit flags."""
    vals = dict(_DEFAULTS)
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        if "lambda" in cfg:
            cfg["lam"] = cfg.pop("lambda")
        for k, v in cfg.items():
            vals[k] = _TYPES[k](v) if k in _TYPES else v
    for k, v in vars(args).items():
        if v is not None and k not in ("command", "config", "opt"):
            vals[k] = v
    return vals


def _opts(args) -> dict:
    out = {}
    for item in args.opt:
        if "=" not in item:
            raise UsageError(f"--opt expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _spec(vals) -> InstanceSpec:
    if vals["problem"] not in PROBLEMS:
        raise UsageError(f"unknown problem {vals['problem']!r}; valid problems: {', '.join(PROBLEMS)}")
    return InstanceSpec(vals["problem"], vals["n"], vals["m"], vals["lam"], vals["seed"], vals["mu"], vals["radius"])


def _check_solver(name) -> None:
    if name not in SOLVERS:
        raise UsageError(f"unknown solver {name!r}; valid solvers: {', '.join(SOLVERS)}")


def _report(spec, res) -> dict:
    tr = res.trace
    out = {
        "spec": spec.to_dict(),
        "solver": tr.solver,
        "bound": res.bound_name,
        "violations": None,
        "slope": None,
        "psi_min": tr.meta.get("psi_min"),
        "final_objective": tr.last.objective,
        "final_gap": tr.last.gap,
    }
    steps = tr.last.k
    if steps >= 4:
        try:
            rep = fit_rate(tr, (max(1, steps // 10), steps), res.theory_slope, res.bound, floor=1e-13)
            out["slope"] = rep.slope
            out["violations"] = rep.bound_violations if res.bound is not None else None
        except FomsError:
            pass
    out.update({k: v for k, v in res.extra.items()})
    return out


def _emit(obj, out: Optional[str]) -> None:
    text = json.dumps(obj, indent=2, default=float)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_solve(args) -> int:
    vals = _merged(args)
    solver = vals.get("solver")
    if solver is None:
        raise UsageError(f"--solver is required; valid solvers: {', '.join(SOLVERS)}")
    _check_solver(solver)
    spec = _spec(vals)
    inst = generate_problem(spec)
    res = run_solver(solver, inst, vals["steps"], _opts(args))
    res.trace.meta["psi_min"] = inst.psi_min
    if vals.get("out"):
        res.trace.to_csv(vals["out"])
        print(json.dumps(_report(spec, res), default=float))
    else:
        sys.stdout.write(res.trace.to_csv_string())
    return EXIT_OK


def _threads() -> int:
    raw = os.environ.get("FOMS_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"FOMS_THREADS must be an integer, got {raw!r}")


def cmd_compare(args) -> int:
    vals = _merged(args)
    names = [s.strip() for s in (vals.get("solvers") or "").split(",") if s.strip()]
    if not names:
        raise UsageError(f"--solvers is required; valid solvers: {', '.join(SOLVERS)}")
    for name in names:
        _check_solver(name)
    spec = _spec(vals)
    opts = _opts(args)

    def one(name):
        inst = generate_problem(spec)
        res = run_solver(name, inst, vals["steps"], opts)
        res.trace.meta["psi_min"] = inst.psi_min
        return _report(spec, res)

    with ThreadPoolExecutor(max_workers=min(_threads(), len(names))) as pool:
        reports = list(pool.map(one, names))
    psi = {r["psi_min"] for r in reports}
    if len(psi) != 1:
        raise FomsError(f"solvers disagree on the reference optimum: {psi}")
    _emit({"spec": spec.to_dict(), "psi_min": psi.pop(), "runs": reports}, vals.get("out"))
    return EXIT_OK


def cmd_rates(args) -> int:
    tr = SolverTrace.from_csv(args.trace)
    kmax = args.kmax if args.kmax is not None else tr.last.k
    rep = fit_rate(tr, (args.kmin, kmax), args.theory_slope)
    _emit({"solver": tr.solver, "spec": tr.meta, **rep.to_dict()}, None)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.bound not in BOUNDS:
        raise UsageError(f"unknown bound {args.bound!r}; valid bounds: {', '.join(BOUNDS)}")
    res = verify_bound(args.bound, args.seed)
    _emit(res.to_dict(), args.out)
    return EXIT_OK if res.ok else EXIT_VIOLATION


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand; choose from solve, compare, rates, verify")
        handler = {"solve": cmd_solve, "compare": cmd_compare, "rates": cmd_rates, "verify": cmd_verify}
        return handler[args.command](args)
    except UsageError as exc:
        print(f"foms: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FomsError, OSError) as exc:
        print(f"foms: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


run_cli = main


if __name__ == "__main__":
    sys.exit(main())
