"""Solver dispatch for the command-line harness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..accelerated import (
    RestartConfig,
    UniversalConfig,
    abpgm_run,
    cg_inexact_abpgm_run,
    cg_inexact_bound,
    build_smoothed,
    choose_tau,
    restart_run,
    smoothing_bound,
    universal_run,
)
from ..conditional_gradient import (
    AtomState,
    CGStepRule,
    GeneralizedLinearOracle,
    LinearOracle,
    SCGParams,
    awcg_run,
    gcg_run,
    scg_run,
)
from ..dual_averaging import DASchedule, da_run
from ..errors import UnsupportedError
from ..geometry import bregman_divergence, euclidean
from ..problem import CompositeProblem, SmoothPart, zero
from ..prox_gradient import StepPolicy, bpgm_run, mirror_descent_run
from ..splitting import ADMMConfig, CPConfig, adpmm_run, cp_run
from ..trace import SolverTrace
from .instances import Instance


@dataclass
class RunResult:
    x: np.ndarray
    trace: SolverTrace
    bound_name: str = "none"
    bound: Optional[Callable[[int], float]] = None
    theory_slope: float = math.nan
    extra: dict = field(default_factory=dict)


def _L(inst: Instance) -> float:
    L = inst.problem.f.lipschitz_grad
    if L is None:
        raise UnsupportedError(f"{inst.spec.problem} has no smooth part for this solver")
    return L


def _bpgm(inst, steps, opts):
    p, L = inst.problem, _L(inst)
    D = bregman_divergence(euclidean(), p.x_star, p.x0)
    x, tr = bpgm_run(p, euclidean(), StepPolicy.constant_smooth(L), steps=steps)
    return RunResult(x, tr, "bpgm-rate", lambda k: L * D / k, -1.0)


def _abpgm(inst, steps, opts):
    p, L = inst.problem, _L(inst)
    D = bregman_divergence(euclidean(), p.x_star, p.x0)
    x, tr = abpgm_run(p, euclidean(), L, steps=steps)
    return RunResult(x, tr, "abpgm-rate", lambda k: 4 * L * D / (k + 1) ** 2, -2.0)


def _md(inst, steps, opts):
    p = inst.problem
    M = p.f.subgrad_bound or 1.0
    X = p.X
    gamma0 = math.sqrt(X.diameter_sq) / M if X.bounded else 1.0 / M
    x, tr = mirror_descent_run(p, euclidean(X), steps=steps, gamma0=gamma0)
    return RunResult(x, tr, "none", None, -0.5)


def _da(inst, steps, opts):
    p = inst.problem
    x, tr = da_run(p, euclidean(p.X), DASchedule.constant_beta_sqrt(1.0), steps)
    return RunResult(x, tr, "none", None, -0.5)


def _gcg(inst, steps, opts):
    p = inst.problem
    rule = CGStepRule(opts.get("rule", "standard"), L=p.f.lipschitz_grad)
    x, tr = gcg_run(p, GeneralizedLinearOracle(p.X, p.r), rule, steps=steps)
    L, om = _L(inst), p.X.diameter_sq
    s0 = p.objective(p.x0) - p.psi_min
    return RunResult(x, tr, "gcg-rate", lambda k: 2 * max(s0, L * om) / k, -1.0)


def _awcg(variant):
    def run(inst, steps, opts):
        p = inst.problem
        lo = LinearOracle(p.X)
        start = lo(p.f.gradient(p.x0))
        prob = CompositeProblem(p.f, p.r, p.X, start, p.reference_optimum, p.name)
        x, _, tr = awcg_run(prob, lo, AtomState.from_vertex(start), steps, variant)
        return RunResult(x, tr, "none", None, math.nan)

    return run


def _scg(inst, steps, opts):
    p = inst.problem
    params = SCGParams(_L(inst), p.X.diameter_sq)
    x, tr = scg_run(p, LinearOracle(p.X), params, steps=steps)
    return RunResult(x, tr, "scg-rate", params.bound, -2.0)


def _cg_inexact(inst, steps, opts):
    p = inst.problem
    L = _L(inst)
    D_X = 0.5 * p.X.diameter_sq
    x, tr = cg_inexact_abpgm_run(p, GeneralizedLinearOracle(p.X, p.r), D_X, steps=steps)
    return RunResult(x, tr, "cg-inexact-rate", lambda k: cg_inexact_bound(L, D_X, k), -1.0)


def _restart(inst, steps, opts):
    p = inst.problem
    mu = inst.meta.get("mu")
    if mu is None:
        raise UnsupportedError("restarts need a problem with a known error-bound constant")
    R0 = inst.meta["R0"]
    cfg = RestartConfig(mu=mu, R0=R0, Omega=1.0, L=_L(inst))
    eps = float(opts.get("eps", 1e-10))
    x, tr = restart_run(p, euclidean(), cfg, eps=eps)
    return RunResult(x, tr, "none", None, math.nan)


def _universal(inst, steps, opts):
    p = inst.problem
    eps = float(opts.get("eps", 1e-2))
    L0 = float(opts.get("L0", 1.0))
    x, tr = universal_run(p, euclidean(), UniversalConfig(eps, L0), steps=steps)
    return RunResult(x, tr, "none", None, math.nan)


def smoothed_composite(inst: Instance, steps: int):
    """Smoothed gradient with the nonsmooth objective, so trace gaps refer to the original problem."""
    if inst.smoothed is None:
        raise UnsupportedError("smoothing needs uniform-fit or l1-fit")
    p = inst.problem
    D_X = inst.meta["D_X"]
    sm = inst.smoothed.with_tau(choose_tau(inst.smoothed.norm_A, steps, D_X, inst.smoothed.D_W))
    f = SmoothPart(value=p.f.value, gradient=lambda x: build_smoothed(sm, x)[1], lipschitz_grad=sm.L_tau)
    return CompositeProblem(f, p.r, p.X, p.x0, p.reference_optimum, p.name), sm


def _smoothing(inst, steps, opts):
    prob, sm = smoothed_composite(inst, steps)
    x, tr = abpgm_run(prob, euclidean(), sm.L_tau, steps=steps)
    tr.meta["tau"] = sm.tau
    final = smoothing_bound(sm.norm_A, inst.meta["D_X"], sm.D_W, sm.L_f, steps)
    return RunResult(x, tr, "smoothing-rate", None, -1.0, {"final_bound": final})


def _adpmm(inst, steps, opts):
    sp = inst.split
    if sp is None:
        raise UnsupportedError("splitting needs a problem with a g(Ax) view")
    c = float(opts.get("c", 1.0))
    tau = 0.9 / (c * sp.operator_norm**2)
    it, cert, tr = adpmm_run(sp, ADMMConfig.linearized(sp.A, c, tau), steps=steps)
    return RunResult(it.x[-1], tr, "none", None, -1.0, {"certificate": None if cert is None else cert.to_dict()})


def _cp(inst, steps, opts):
    sp = inst.split
    if sp is None:
        raise UnsupportedError("splitting needs a problem with a g(Ax) view")
    c = float(opts.get("c", 1.0))
    tau = 0.9 / (c * sp.operator_norm**2)
    it, tr = cp_run(sp, CPConfig(tau, c, 1.0), steps=steps)
    return RunResult(it.x[-1], tr, "none", None, -1.0)


SOLVERS: dict[str, Callable] = {
    "bpgm": _bpgm,
    "md": _md,
    "da": _da,
    "abpgm": _abpgm,
    "restart": _restart,
    "universal": _universal,
    "smoothing": _smoothing,
    "gcg": _gcg,
    "awcg": _awcg("away"),
    "pcg": _awcg("pairwise"),
    "scg": _scg,
    "cg-inexact": _cg_inexact,
    "adpmm": _adpmm,
    "cp": _cp,
}


def run_solver(name: str, inst: Instance, steps: int, opts: Optional[dict] = None) -> RunResult:
    res = SOLVERS[name](inst, steps, dict(opts or {}))
    res.trace.meta.update(
        {"seed": inst.spec.seed, "generator": inst.meta["generator"], "problem": inst.spec.problem}
    )
    res.trace.solver = name
    return res


__all__ = ["RunResult", "SOLVERS", "run_solver", "smoothed_composite"]
