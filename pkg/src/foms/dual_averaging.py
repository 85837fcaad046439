"""Composite dual averaging with ergodic output."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, UnsupportedError
from .geometry import (
    DistanceGenerator,
    ProxMapping,
    _euclidean_prox,
    _sigmoid,
    prox_map,
)
from .problem import CompositeProblem, whole_space, zero
from .trace import OracleCounter, SolverTrace


@dataclass(frozen=True)
class DASchedule:
    beta: Callable[[int], float]
    lam: Callable[[int], float]
    name: str = "custom"

    @staticmethod
    def constant_beta_sqrt(beta: float = 1.0) -> "DASchedule":
        """beta_k = beta, lambda_k = 1/sqrt(k+1)."""
        return DASchedule(lambda k: beta, lambda k: 1.0 / math.sqrt(k + 1), "constant-beta-sqrt")

    @staticmethod
    def fixed_horizon(
        N: int, M_f: float, Omega_h: float, alpha: float = 1.0, beta: float = 1.0
    ) -> "DASchedule":
        """Constant lambda = sqrt(2 alpha beta Omega_h) / (sqrt(N+1) M_f)."""
        lam = math.sqrt(2 * alpha * beta * Omega_h) / (math.sqrt(N + 1) * M_f)
        return DASchedule(lambda k: beta, lambda k: lam, "fixed-horizon")


@dataclass
class DAState:
    y: np.ndarray
    x: np.ndarray
    xbar: np.ndarray
    Lambda: float
    gamma: float
    k: int


def mirror_map(h: DistanceGenerator, r, beta: float, gamma: float, y, X=None) -> np.ndarray:
    """argmax_x <y, x> - beta h(x) - gamma r(x) over X."""
    y = np.asarray(y, dtype=float)
    mu = getattr(r, "strong_convexity", 0.0)
    if beta <= 0 and gamma * mu <= 0:
        raise ArgumentError("mirror map needs beta > 0 or gamma * mu > 0")
    if beta <= 0:
        raise UnsupportedError("mirror map with beta = 0 has no closed form")
    rk = r.kind
    if h.kind == "entropy-simplex":
        if rk in ("zero", "l1") or (rk == "indicator" and r.set.kind == "simplex"):
            z = y / beta
            z = z - z.max()
            w = np.exp(z)
            return w / w.sum()
        raise UnsupportedError(f"no entropic mirror map for r={rk!r}")
    if h.kind == "euclidean":
        X = X if X is not None else whole_space(y.size)
        r_eff = zero() if gamma == 0 or rk == "zero" else r.scaled(gamma / beta)
        return _euclidean_prox(r_eff, X, y / beta)
    if h.kind == "fermi-dirac-box" and (rk == "zero" or gamma == 0):
        return h.lower + (h.upper - h.lower) * _sigmoid(y / beta)
    if h.grad_conjugate is not None and (X is None or X.kind == "whole-space") and (
        rk == "zero" or gamma == 0
    ):
        return np.asarray(h.grad_conjugate(y / beta), dtype=float)
    raise UnsupportedError(f"no mirror map for h={h.kind!r}, r={rk!r}")


def da_bound(beta: float, Omega_h: float, r_x0: float, M_f: float, alpha: float, N: int) -> float:
    """[beta Omega_h + r(x0) + (M_f^2 / 2 alpha)(1 + log(N+1))] / sqrt(N+1)."""
    return (
        beta * Omega_h + r_x0 + (M_f**2 / (2 * alpha)) * (1 + math.log(N + 1))
    ) / math.sqrt(N + 1)


def setup_constants(c) -> tuple[float, float]:
    """Bound constants of the entropy and euclidean setups for f = <c, x> on the simplex."""
    c = np.asarray(c, dtype=float)
    n = c.size
    entropy_const = math.sqrt(math.log(n)) * float(np.abs(c).max())
    euclid_const = math.sqrt((n - 1) / (2 * n)) * float(np.linalg.norm(c))
    return entropy_const, euclid_const


def da_run(
    problem: CompositeProblem,
    h: DistanceGenerator,
    schedule: DASchedule,
    steps: int,
    callback: Optional[Callable[[DAState], None]] = None,
):
    """Run N = ``steps`` dual updates; returns the ergodic average and trace.

    Row k of the trace holds Psi at the average of x^0..x^k.
    """
    if not problem.X.bounded:
        raise UnsupportedError("dual averaging needs a bounded feasible set")
    oracle = problem.f.first_order
    r, X = problem.r, problem.X
    counter = OracleCounter()
    trace = SolverTrace("da", {"schedule": schedule.name})
    y = np.zeros(X.shape)
    gamma = 0.0
    x = mirror_map(h, r, schedule.beta(0), gamma, y, X)
    counter.prox += 1
    Lambda = 0.0
    xsum = np.zeros_like(x)
    ref = problem.psi_min
    for k in range(steps + 1):
        lam = schedule.lam(k)
        Lambda += lam
        xsum += lam * x
        xbar = xsum / Lambda
        psi = problem.objective(xbar)
        trace.record(k, psi, None if ref is None else psi - ref, lam, counter)
        if callback is not None:
            callback(DAState(y.copy(), x.copy(), xbar.copy(), Lambda, gamma, k))
        if k == steps:
            break
        g = np.asarray(oracle(x), dtype=float)
        counter.grad += 1
        y = y - lam * g
        gamma += lam
        x = mirror_map(h, r, schedule.beta(k + 1), gamma, y, X)
        counter.prox += 1
    return xbar, trace


def da_md_equivalence_check(
    problem: CompositeProblem,
    h: DistanceGenerator,
    steps: int,
    lam: Optional[Callable[[int], float]] = None,
) -> float:
    """Max deviation between DA (beta = 1) and mirror descent with matching steps."""
    if problem.r.kind != "zero":
        raise UnsupportedError("equivalence holds for r = 0 only")
    lam = lam or (lambda k: 1.0 / math.sqrt(k + 1))
    oracle = problem.f.first_order
    X = problem.X
    y = np.zeros(X.shape)
    x_da = mirror_map(h, problem.r, 1.0, 0.0, y, X)
    x_md = x_da.copy()
    pm = ProxMapping(h, problem.r, X)
    dev = 0.0
    for k in range(steps):
        y = y - lam(k) * np.asarray(oracle(x_da), dtype=float)
        x_da = mirror_map(h, problem.r, 1.0, 0.0, y, X)
        x_md = prox_map(pm, x_md, lam(k) * np.asarray(oracle(x_md), dtype=float))
        dev = max(dev, float(np.linalg.norm(x_da - x_md)))
    return dev

