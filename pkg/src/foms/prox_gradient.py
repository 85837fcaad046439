"""Bregman proximal gradient, mirror descent and NoLips."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ArgumentError, ConfigurationError, InternalFault, OracleError
from .geometry import DistanceGenerator, ProxMapping, prox_map
from .problem import CompositeProblem, merit_gap
from .trace import OracleCounter, SolverTrace

DESCENT_TOL = 1e-9


@dataclass(frozen=True)
class StepPolicy:
    kind: str
    gamma: float = 0.0
    gamma0: float = 0.0

    @staticmethod
    def constant_smooth(L: float, alpha: float = 1.0, fraction: float = 1.0) -> "StepPolicy":
        """gamma = fraction * alpha / L with fraction in (0, 1]."""
        if L is None or L <= 0:
            raise ConfigurationError("constant-smooth step needs a positive L_f")
        if not 0 < fraction <= 1:
            raise ConfigurationError("fraction must lie in (0, 1]")
        return StepPolicy("constant-smooth", gamma=fraction * alpha / L)

    @staticmethod
    def nolips(L_rel: float, nu: float) -> "StepPolicy":
        """gamma = (1 + nu) / (2 L_rel)."""
        if L_rel is None or L_rel <= 0:
            raise ConfigurationError("NoLips step needs a positive relative smoothness constant")
        if not 0 <= nu <= 1:
            raise ConfigurationError("symmetry coefficient must lie in [0, 1]")
        return StepPolicy("nolips", gamma=(1.0 + nu) / (2.0 * L_rel))

    @staticmethod
    def md_decreasing(gamma0: float) -> "StepPolicy":
        if gamma0 <= 0:
            raise ConfigurationError("gamma0 must be positive")
        return StepPolicy("md-decreasing", gamma0=gamma0)

    def step(self, k: int) -> float:
        """Step used to produce iterate k+1."""
        if self.kind == "md-decreasing":
            return self.gamma0 / math.sqrt(k + 1)
        return self.gamma


def _gap_entry(problem: CompositeProblem, x, psi, glo):
    if problem.reference_optimum is not None:
        return psi - problem.psi_min, None
    if glo is not None:
        e = merit_gap(problem, glo, x).e
        return e, e
    return None, None


def bpgm_run(
    problem: CompositeProblem,
    h: DistanceGenerator,
    policy: StepPolicy,
    x0=None,
    steps: int = 100,
    glo=None,
    eps: Optional[float] = None,
    check_descent: bool = True,
):
    """x^{k+1} = P^h_{gamma r}(x^k, gamma grad f(x^k)); returns (x, trace)."""
    if steps < 0:
        raise ArgumentError("steps must be nonnegative")
    f, X = problem.f, problem.X
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    counter = OracleCounter()
    trace = SolverTrace(policy.kind if policy.kind != "constant-smooth" else "bpgm")
    psi = problem.objective(x)
    gap, merit = _gap_entry(problem, x, psi, glo)
    trace.record(0, psi, gap, 0.0, counter)
    for k in range(steps):
        g = np.asarray(f.first_order(x), dtype=float)
        counter.grad += 1
        gamma = policy.step(k)
        pm = ProxMapping(h, problem.r.scaled(gamma), X)
        x_new = prox_map(pm, x, gamma * g)
        counter.prox += 1
        psi_new = problem.objective(x_new)
        if not math.isfinite(psi_new):
            raise OracleError(f"objective became non-finite at iteration {k + 1}")
        if check_descent and psi_new > psi + DESCENT_TOL * max(1.0, abs(psi)):
            raise InternalFault(
                f"objective increased from {psi!r} to {psi_new!r} at iteration {k + 1}"
            )
        x, psi = x_new, psi_new
        gap, merit = _gap_entry(problem, x, psi, glo)
        trace.record(k + 1, psi, gap, gamma, counter)
        if merit is not None:
            trace.add("merit", merit)
        if eps is not None and merit is not None and merit < eps:
            break
    return x, trace


def mirror_descent_run(
    problem: CompositeProblem,
    h: DistanceGenerator,
    x0=None,
    steps: int = 1000,
    gamma0: float = 1.0,
):
    """Subgradient steps gamma0/sqrt(k+1) in the geometry of h.

    Returns the best iterate; the trace gap column holds the best-so-far gap.
    """
    oracle = problem.f.first_order
    policy = StepPolicy.md_decreasing(gamma0)
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    counter = OracleCounter()
    trace = SolverTrace("md")
    psi = problem.objective(x)
    best_x, best = x.copy(), psi
    ref = problem.psi_min
    trace.record(0, psi, None if ref is None else best - ref, 0.0, counter)
    for k in range(steps):
        g = np.asarray(oracle(x), dtype=float)
        counter.grad += 1
        gamma = policy.step(k)
        x = prox_map(ProxMapping(h, problem.r.scaled(gamma), problem.X), x, gamma * g)
        counter.prox += 1
        psi = problem.objective(x)
        if psi < best:
            best, best_x = psi, x.copy()
        trace.record(k + 1, psi, None if ref is None else best - ref, gamma, counter)
    return best_x, trace


def nolips_run(
    problem: CompositeProblem,
    h: DistanceGenerator,
    x0=None,
    steps: int = 100,
    conservative: bool = False,
):
    """BPGM with step (1 + nu) / (2 L_rel) under relative smoothness."""
    if h.rel_smooth_const is None:
        raise ConfigurationError("kernel carries no relative smoothness constant")
    if conservative:
        nu = 0.0
    elif h.symmetry is None:
        raise ConfigurationError("kernel has no symmetry estimate; estimate it or pass conservative=True")
    else:
        nu = h.symmetry
    x, trace = bpgm_run(problem, h, StepPolicy.nolips(h.rel_smooth_const, nu), x0, steps)
    trace.solver = "nolips"
    return x, trace
