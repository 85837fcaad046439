"""Named bound checks.  Each check returns a ``VerifyResult``; zero violations means the bound held."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..accelerated import (
    RestartConfig,
    UniversalConfig,
    abpgm_run,
    accel_sequence,
    cg_inexact_abpgm_run,
    cg_inexact_bound,
    restart_run,
    smoothing_bound,
    universal_call_budget,
    universal_run,
)
from ..conditional_gradient import (
    CGStepRule,
    GeneralizedLinearOracle,
    LinearOracle,
    SCGParams,
    gcg_run,
    scg_run,
)
from ..dual_averaging import DASchedule, da_bound, da_md_equivalence_check, da_run
from ..geometry import bregman_divergence, entropy_simplex, euclidean
from ..problem import CompositeProblem, SmoothPart, simplex, zero
from ..prox_gradient import StepPolicy, bpgm_run
from ..splitting import (
    ADMMConfig,
    ErgodicCertificate,
    adpmm_run,
    cp_adpmm_equivalence,
    effective_lipschitz_g,
    ergodic_averages,
)
from .instances import InstanceSpec, generate_problem
from .rates import count_violations, fit_rate
from .solvers import smoothed_composite


@dataclass
class VerifyResult:
    bound: str
    spec: dict
    solver: str
    violations: int
    slope: float = math.nan
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {
            "spec": self.spec,
            "solver": self.solver,
            "bound": self.bound,
            "violations": self.violations,
            "slope": None if math.isnan(self.slope) else self.slope,
            **self.details,
        }


def _slope(trace, window, floor=1e-13):
    try:
        return fit_rate(trace, window, floor=floor).slope
    except Exception:
        return math.nan


def check_bpgm(seed: int = 0, steps: int = 1000, n: int = 50, m: int = 25, lam: float = 0.1) -> VerifyResult:
    spec = InstanceSpec("lasso", n, m, lam, seed)
    inst = generate_problem(spec)
    p, L = inst.problem, inst.meta["L_f"]
    D = bregman_divergence(euclidean(), p.x_star, p.x0)
    _, tr = bpgm_run(p, euclidean(), StepPolicy.constant_smooth(L), steps=steps)
    v = count_violations(tr, lambda k: L * D / k, slack=1e-12)
    return VerifyResult("bpgm-rate", spec.to_dict(), "bpgm", v, _slope(tr, (10, steps)))


def check_abpgm(seed: int = 0, steps: int = 2000, n: int = 50, m: int = 25, lam: float = 0.1) -> VerifyResult:
    spec = InstanceSpec("lasso", n, m, lam, seed)
    inst = generate_problem(spec)
    p, L = inst.problem, inst.meta["L_f"]
    D = bregman_divergence(euclidean(), p.x_star, p.x0)
    _, tr = abpgm_run(p, euclidean(), L, steps=steps)
    v = count_violations(tr, lambda k: 4 * L * D / (k + 1) ** 2, slack=1e-12)
    A = accel_sequence(L, steps)
    ks = np.arange(A.size)
    growth = int(np.sum(A < (ks + 1) ** 2 / (4 * L) - 1e-10))
    growth -= int(A[0] < 0.25 / L - 1e-10)  # A_0 = 0 by construction
    return VerifyResult("abpgm-rate", spec.to_dict(), "abpgm", v + max(growth, 0),
                        _slope(tr, (10, steps)), {"A_growth_violations": max(growth, 0)})


def max_simplex_problem(n: int) -> CompositeProblem:
    f = SmoothPart.max_coordinate()
    X = simplex(n)
    x_star = np.full(n, 1.0 / n)
    return CompositeProblem(f, zero(), X, x_star.copy(), (x_star, 1.0 / n), "max-coordinate")


def check_da(seed: int = 0, horizons=(100, 1000), n: int = 20) -> VerifyResult:
    p = max_simplex_problem(n)
    h = entropy_simplex(n)
    v = 0
    gaps = {}
    N = max(horizons)
    _, tr = da_run(p, h, DASchedule.constant_beta_sqrt(1.0), N)
    for H in horizons:
        gap = float(tr.column("gap")[H])
        b = da_bound(1.0, h.diameter, 0.0, 1.0, 1.0, H)
        gaps[str(H)] = {"gap": gap, "bound": b}
        v += int(gap > b)
    return VerifyResult("da-rate", {"problem": "max-coordinate", "n": n, "seed": seed}, "da", v,
                        details={"horizons": gaps})


def check_da_md(seed: int = 0, steps: int = 100, n: int = 20) -> VerifyResult:
    rng = np.random.Generator(np.random.PCG64(seed))
    c = rng.standard_normal(n)
    X = simplex(n)
    p = CompositeProblem(SmoothPart.linear(c), zero(), X, np.full(n, 1.0 / n))
    dev = da_md_equivalence_check(p, entropy_simplex(n), steps)
    return VerifyResult("da-md-equiv", {"problem": "linear-simplex", "n": n, "seed": seed}, "da,md",
                        int(dev > 1e-10), details={"deviation": dev})


def check_cp_adpmm(seed: int = 0, steps: int = 200, n: int = 20, m: int = 10) -> VerifyResult:
    spec = InstanceSpec("lasso", n, m, 0.1, seed)
    sp = generate_problem(spec).split
    c = 1.0
    tau = 1.0 / (c * sp.operator_norm**2)
    dev = cp_adpmm_equivalence(sp, tau, c, steps=steps)
    return VerifyResult("cp-adpmm-equiv", spec.to_dict(), "cp,adpmm", int(dev > 1e-9), details={"deviation": dev})


def check_adpmm(seed: int = 0, steps: int = 1000, n: int = 20, m: int = 10) -> VerifyResult:
    spec = InstanceSpec("lasso", n, m, 0.1, seed)
    sp = generate_problem(spec).split
    c = 1.0
    tau = 0.9 / (c * sp.operator_norm**2)
    cfg = ADMMConfig.linearized(sp.A, c, tau)
    it, _, _ = adpmm_run(sp, cfg, steps=steps)
    avgs = [ergodic_averages(it, k) for k in range(1, steps + 1)]
    L_g = effective_lipschitz_g(sp, [a[0] for a in avgs])
    x_star = sp.reference_optimum[0]
    z_star = sp.A @ x_star
    v = 0
    worst = 0.0
    for k, (xb, zb, yb) in enumerate(avgs, start=1):
        cert = ErgodicCertificate(xbar=xb, zbar=zb, ybar=yb, N=k, c=c, A=sp.A, M1=cfg.M1, M2=cfg.M2,
                                  x0=it.x[0], z0=it.z[0], y0=it.y[0])
        gap = sp.objective(xb) - sp.psi_min
        b = cert.bound(x_star, z_star, L_g)
        worst = max(worst, gap / b)
        v += int(gap > b + 1e-12)
    return VerifyResult("adpmm-ergodic", spec.to_dict(), "adpmm", v, details={"L_g": L_g, "worst_ratio": worst})


def check_gcg(seed: int = 0, steps: int = 1000, n: int = 30, rule: str = "standard") -> VerifyResult:
    spec = InstanceSpec("simplex-qp", n, 0, 0.0, seed)
    inst = generate_problem(spec)
    p = inst.problem
    L, om = inst.meta["L_f"], inst.meta["omega_sq"]
    _, tr = gcg_run(p, GeneralizedLinearOracle(p.X, p.r), CGStepRule(rule, L=L), steps=steps)
    s0 = p.objective(p.x0) - p.psi_min
    C = 2 * max(s0, L * om)
    v = count_violations(tr, lambda k: C / k, slack=1e-12)
    return VerifyResult("gcg-rate", spec.to_dict(), f"gcg[{rule}]", v, _slope(tr, (10, steps)))


def check_scg(seed: int = 0, steps: int = 300, n: int = 30) -> VerifyResult:
    spec = InstanceSpec("simplex-qp", n, 0, 0.0, seed)
    inst = generate_problem(spec)
    p = inst.problem
    params = SCGParams(inst.meta["L_f"], inst.meta["omega_sq"])
    _, tr = scg_run(p, LinearOracle(p.X), params, steps=steps)
    v = count_violations(tr, params.bound, slack=1e-12)
    grads = tr.column("grad_calls")
    v += int(np.any(grads != tr.column("k")))
    lo = tr.column("lo_calls")
    caps = np.array([0] + [params.lo_cap(k) for k in range(1, steps + 1)])
    v += int(np.any(np.diff(lo) > caps[1:]))
    return VerifyResult("scg-rate", spec.to_dict(), "scg", v, _slope(tr, (10, steps)))


def check_cg_inexact(seed: int = 0, steps: int = 1000, n: int = 10) -> VerifyResult:
    spec = InstanceSpec("simplex-qp", n, 0, 0.0, seed)
    inst = generate_problem(spec)
    p = inst.problem
    L, D_X = inst.meta["L_f"], inst.meta["D_X"]
    _, tr = cg_inexact_abpgm_run(p, GeneralizedLinearOracle(p.X, p.r), D_X, steps=steps)
    v = count_violations(tr, lambda k: cg_inexact_bound(L, D_X, k), slack=1e-12)
    v += int(tr.last.prox_calls != 0)
    return VerifyResult("cg-inexact-rate", spec.to_dict(), "cg-inexact", v, _slope(tr, (10, steps)))


def check_restart(seed: int = 0, epochs: int = 8, n: int = 20) -> VerifyResult:
    spec = InstanceSpec("strongly-convex-qp", n, 0, 0.0, seed, mu=1.0)
    inst = generate_problem(spec)
    p = inst.problem
    cfg = RestartConfig(mu=inst.meta["mu"], R0=inst.meta["R0"], Omega=1.0, L=inst.meta["L_f"])
    eps = cfg.guarantee(epochs) * 0.999
    _, tr = restart_run(p, euclidean(), cfg, eps=eps)
    ends = [0] + list(tr.series.get("epoch_end", []))
    gaps = tr.column("gap")
    ks = tr.column("k")
    vals = [float(gaps[np.searchsorted(ks, e)]) for e in ends]
    ratios = [b / a if a > 0 else 0.0 for a, b in zip(vals, vals[1:])]
    v = sum(1 for r in ratios if r > 0.25) + int(tr.meta["violations"])
    return VerifyResult("restart-epochs", spec.to_dict(), "restart", v,
                        details={"ratios": ratios, "inner_N": cfg.inner_N})


def check_universal(seed: int = 0, n: int = 10, eps: float = 1e-2) -> VerifyResult:
    spec = InstanceSpec("nonsmooth-l1", n, 0, 0.0, seed)
    inst = generate_problem(spec)
    p = inst.problem
    D = bregman_divergence(euclidean(), p.x_star, p.x0)
    _, tr = universal_run(p, euclidean(), UniversalConfig(eps, 1.0), steps=20_000, dist_bound=D)
    v = int(tr.last.gap > eps)
    qspec = InstanceSpec("lasso", 20, 10, 0.0, seed)
    q = generate_problem(qspec).problem
    q = CompositeProblem(q.f, zero(), q.X, q.x0, q.reference_optimum)
    _, qt = universal_run(q, euclidean(), UniversalConfig(1e-6, 1.0), steps=200)
    N = qt.last.k
    calls = qt.last.grad_calls + qt.series["value_calls"][-1]
    budget = universal_call_budget(N, 1.0, qt.series["L"][-1]) + 4
    v += int(calls > budget)
    return VerifyResult("universal-eps", spec.to_dict(), "universal", v,
                        details={"final_gap": tr.last.gap, "outer": N, "calls": calls, "budget": budget})


def check_smoothing(seed: int = 0, horizons=(100, 1000), n: int = 10) -> VerifyResult:
    spec = InstanceSpec("uniform-fit", n, 0, 0.0, seed)
    inst = generate_problem(spec)
    v = 0
    out = {}
    for N in horizons:
        prob, sm = smoothed_composite(inst, N)
        _, tr = abpgm_run(prob, euclidean(), sm.L_tau, steps=N)
        gap = tr.last.gap
        b = smoothing_bound(sm.norm_A, inst.meta["D_X"], sm.D_W, sm.L_f, N)
        out[str(N)] = {"gap": gap, "bound": b}
        v += int(gap > b)
    return VerifyResult("smoothing-rate", spec.to_dict(), "smoothing", v, details={"horizons": out})


BOUNDS: dict[str, Callable[..., VerifyResult]] = {
    "bpgm-rate": check_bpgm,
    "abpgm-rate": check_abpgm,
    "da-rate": check_da,
    "da-md-equiv": check_da_md,
    "gcg-rate": check_gcg,
    "scg-rate": check_scg,
    "cg-inexact-rate": check_cg_inexact,
    "restart-epochs": check_restart,
    "universal-eps": check_universal,
    "smoothing-rate": check_smoothing,
    "adpmm-ergodic": check_adpmm,
    "cp-adpmm-equiv": check_cp_adpmm,
}


def verify_bound(name: str, seed: int = 0) -> VerifyResult:
    return BOUNDS[name](seed=seed)
