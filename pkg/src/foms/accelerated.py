"""Accelerated Bregman proximal gradient and its relatives.

Includes the plain method, restarts under a quadratic error bound, the
universal variant with backtracking on L, Nesterov smoothing of max-type
terms, and a projection-free variant that replaces the prox step by a
generalized linear oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    ArgumentError,
    AssumptionViolation,
    ConfigurationError,
    DomainError,
    InternalFault,
    OracleError,
    UnsupportedError,
)
from .geometry import DistanceGenerator, ProxMapping, bregman_divergence, primal_norm, prox_map, rescale
from .problem import CompositeProblem, SmoothPart
from .splitting import operator_norm
from .trace import OracleCounter, SolverTrace

QUAD_TOL = 1e-10


@dataclass
class AccelState:
    A: float
    alpha: float
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray
    L_work: float


def next_alpha(A: float, L: float) -> float:
    """Positive root of L a^2 = A + a."""
    return (1.0 + math.sqrt(1.0 + 4.0 * L * A)) / (2.0 * L)


def accel_sequence(L: float, N: int) -> np.ndarray:
    """A_0, ..., A_N of the plain method."""
    A = np.zeros(N + 1)
    for k in range(N):
        A[k + 1] = A[k] + next_alpha(A[k], L)
    return A


def _check_quadratic(A_old, alpha, L):
    lhs, rhs = A_old + alpha, L * alpha * alpha
    if abs(lhs - rhs) > QUAD_TOL * max(1.0, rhs):
        raise InternalFault(f"A_k + alpha = {lhs!r} but L alpha^2 = {rhs!r}")


def _dist_to_ref(h, x_star, u):
    try:
        return bregman_divergence(h, x_star, u)
    except DomainError:
        return math.nan


def abpgm_run(
    problem: CompositeProblem,
    h: DistanceGenerator,
    L: float,
    x0=None,
    steps: int = 100,
    callback: Optional[Callable[[AccelState], None]] = None,
    epoch: Optional[int] = None,
    trace: Optional[SolverTrace] = None,
    counter: Optional[OracleCounter] = None,
    k_offset: int = 0,
):
    """Accelerated Bregman proximal gradient with the fixed constant L.

    The trace series ``A`` holds A_k and, when a reference solution is
    known, ``D`` holds D_h(x*, u^k).
    """
    if L is None or L <= 0:
        raise ConfigurationError("accelerated method needs L > 0")
    f, r, X = problem.f, problem.r, problem.X
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    u = x.copy()
    A = 0.0
    counter = counter if counter is not None else OracleCounter()
    fresh = trace is None
    trace = trace if trace is not None else SolverTrace("abpgm", {"L": L})
    ref = problem.psi_min
    x_star = problem.x_star
    if fresh:
        psi = problem.objective(x)
        trace.record(k_offset, psi, None if ref is None else psi - ref, 0.0, counter, epoch)
        trace.add("A", 0.0)
        if x_star is not None:
            trace.add("D", _dist_to_ref(h, x_star, u))
    for k in range(steps):
        alpha = next_alpha(A, L)
        A_new = A + alpha
        _check_quadratic(A, alpha, L)
        y = (alpha / A_new) * u + (A / A_new) * x
        g = np.asarray(f.gradient(y), dtype=float)
        counter.grad += 1
        u = prox_map(ProxMapping(h, r.scaled(alpha), X), u, alpha * g)
        counter.prox += 1
        x = (alpha / A_new) * u + (A / A_new) * x
        A = A_new
        psi = problem.objective(x)
        if not math.isfinite(psi):
            raise OracleError(f"objective became non-finite at step {k + 1}")
        trace.record(k_offset + k + 1, psi, None if ref is None else psi - ref, alpha, counter, epoch)
        trace.add("A", A)
        if x_star is not None:
            trace.add("D", _dist_to_ref(h, x_star, u))
        if callback is not None:
            callback(AccelState(A, alpha, x.copy(), u.copy(), y, L))
    return x, trace


# ---------------------------------------------------------------------------
# restarts


@dataclass(frozen=True)
class RestartConfig:
    """Restart schedule under Psi - Psi_min >= mu/2 ||x - x*||^2.

    ``Omega`` bounds h((x - x*)/R) by Omega/2 whenever ||x - x*|| <= R.
    ``inner_steps`` overrides the default per-epoch count.
    """

    mu: float
    R0: float
    Omega: float
    L: float
    inner_steps: Optional[int] = None
    strict: bool = False

    def __post_init__(self):
        if min(self.mu, self.R0, self.Omega, self.L) <= 0:
            raise ConfigurationError("mu, R0, Omega and L must be positive")

    @property
    def inner_N(self) -> int:
        if self.inner_steps is not None:
            return max(1, int(self.inner_steps))
        return max(1, math.ceil(2.0 * math.sqrt(self.Omega * self.L / self.mu)) - 1)

    def radius(self, p: int) -> float:
        return self.R0 * 2.0 ** (-p)

    def epochs_for(self, eps: float) -> int:
        ratio = self.mu * self.R0**2 / (2.0 * eps)
        return 0 if ratio <= 1.0 else max(0, math.ceil(0.5 * math.log2(ratio)))

    def guarantee(self, p: int) -> float:
        return self.mu * self.R0**2 * 2.0 ** (-2 * p) / 2.0


def restart_run(problem: CompositeProblem, h: DistanceGenerator, cfg: RestartConfig, z0=None, eps: float = 1e-8):
    """Epochs of the accelerated method, each recentred and rescaled.

    Rows carry their epoch number; row 0 (epoch 0) is the start point.
    Guarantee breaches above 10% are listed in ``trace.meta['violations']``.
    """
    if eps <= 0:
        raise ArgumentError("eps must be positive")
    z = np.array(problem.x0 if z0 is None else z0, dtype=float)
    counter = OracleCounter()
    trace = SolverTrace("restart", {"inner_N": cfg.inner_N, "mu": cfg.mu, "R0": cfg.R0})
    ref = problem.psi_min
    psi = problem.objective(z)
    trace.record(0, psi, None if ref is None else psi - ref, 0.0, counter, 0)
    violations = []
    p_hat = cfg.epochs_for(eps)
    trace.meta["epochs"] = p_hat
    k = 0
    for p in range(1, p_hat + 1):
        if ref is not None and psi - ref <= eps:
            break
        hp = rescale(h, z, cfg.radius(p - 1))
        sub = CompositeProblem(problem.f, problem.r, problem.X, z, problem.reference_optimum)
        z, _ = abpgm_run(sub, hp, cfg.L, z, cfg.inner_N, epoch=p, trace=trace, counter=counter, k_offset=k)
        k += cfg.inner_N
        psi = problem.objective(z)
        trace.add("epoch_end", k)
        if ref is not None and psi - ref > 1.1 * cfg.guarantee(p):
            msg = f"epoch {p}: gap {psi - ref:.3e} exceeds guarantee {cfg.guarantee(p):.3e}"
            violations.append(msg)
            if cfg.strict:
                raise AssumptionViolation(msg)
    trace.meta["violations"] = len(violations)
    trace.series["violations"] = violations
    return z, trace


# ---------------------------------------------------------------------------
# universal method


@dataclass(frozen=True)
class UniversalConfig:
    eps: float
    L0: float
    max_doublings: int = 60

    def __post_init__(self):
        if self.eps <= 0 or self.L0 <= 0:
            raise ConfigurationError("eps and L0 must be positive")


def universal_run(
    problem: CompositeProblem,
    h: DistanceGenerator,
    cfg: UniversalConfig,
    x0=None,
    steps: int = 100,
    dist_bound: Optional[float] = None,
):
    """Accelerated method that adapts L through an eps-shifted descent test.

    One trial costs a gradient (with value) at y and a value at x.  The run
    ends after ``steps`` iterations or, if ``dist_bound`` bounds
    D_h(x*, x0), once dist_bound / A_k <= eps / 2.
    """
    f, r, X = problem.f, problem.r, problem.X
    grad = f.first_order
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    u = x.copy()
    A, L = 0.0, cfg.L0
    counter = OracleCounter()
    trace = SolverTrace("universal", {"eps": cfg.eps, "L0": cfg.L0})
    ref = problem.psi_min
    psi = problem.objective(x)
    trace.record(0, psi, None if ref is None else psi - ref, 0.0, counter)
    trace.add("L", L)
    trace.add("value_calls", 0)
    trace.add("A", 0.0)
    for k in range(steps):
        for i in range(cfg.max_doublings + 1):
            M = 2.0 ** (i - 1) * L
            alpha = next_alpha(A, M)
            A_new = A + alpha
            y = (alpha / A_new) * u + (A / A_new) * x
            fy = float(f.value(y))
            gy = np.asarray(grad(y), dtype=float)
            counter.grad += 1
            u_new = prox_map(ProxMapping(h, r.scaled(alpha), X), u, alpha * gy)
            counter.prox += 1
            x_new = (alpha / A_new) * u_new + (A / A_new) * x
            fx = float(f.value(x_new))
            counter.value += 1
            dx = primal_norm(h, x_new - y)
            upper = fy + float(np.vdot(gy, x_new - y)) + 0.5 * M * dx * dx + cfg.eps * alpha / (2 * A_new)
            if fx <= upper:
                break
        else:
            raise OracleError(f"descent test failed after {cfg.max_doublings} doublings")
        x, u, A, L = x_new, u_new, A_new, M
        psi = problem.objective(x)
        trace.record(k + 1, psi, None if ref is None else psi - ref, alpha, counter)
        trace.add("L", L)
        trace.add("value_calls", counter.value)
        trace.add("A", A)
        if dist_bound is not None and dist_bound / A <= cfg.eps / 2:
            break
    return x, trace


def universal_call_budget(N: int, L0: float, LN: float) -> float:
    return 4 * N + 2 * math.log2(LN / L0)


# ---------------------------------------------------------------------------
# smoothing


@dataclass(frozen=True)
class SmoothedProblem:
    """Smoothed max-type term max_w <A x - b, w> - tau h_w(w) over W.

    ``norm_A`` is the operator norm matched to the primal l2 norm and to the
    norm in which h_w is 1-strongly convex.
    """

    variant: str
    A: np.ndarray
    b: np.ndarray
    tau: float
    D_W: float
    norm_A: float
    L_f: float = 0.0
    argmax_oracle: Optional[Callable] = None

    @property
    def L_tau(self) -> float:
        return self.L_f + self.norm_A**2 / self.tau

    def argmax(self, x) -> np.ndarray:
        return _argmax(self, np.asarray(x, dtype=float))

    def value_and_grad(self, x):
        return build_smoothed(self, x)

    def nonsmooth_value(self, x) -> float:
        res = self.A @ np.asarray(x, dtype=float) - self.b
        if self.variant == "softmax-uniform-fit":
            return float(np.abs(res).max())
        return float(np.abs(res).sum())

    def with_tau(self, tau: float) -> "SmoothedProblem":
        return SmoothedProblem(self.variant, self.A, self.b, tau, self.D_W, self.norm_A, self.L_f)

    def smooth_part(self) -> SmoothPart:
        return SmoothPart(
            value=lambda x: build_smoothed(self, x)[0],
            gradient=lambda x: build_smoothed(self, x)[1],
            lipschitz_grad=self.L_tau,
        )


def softmax_uniform_fit(A, b, tau: float) -> SmoothedProblem:
    """Smoothing of ||Ax - b||_inf with the entropy on the 2m-simplex."""
    if tau <= 0:
        raise ArgumentError("tau must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    m = A.shape[0]
    return SmoothedProblem(
        "softmax-uniform-fit", A, b, float(tau), math.log(2 * m),
        float(np.linalg.norm(A, axis=1).max()),
    )


def huber_l1_fit(A, b, tau: float) -> SmoothedProblem:
    """Smoothing of ||Ax - b||_1 with h_w(w) = sum ||a_i|| w_i^2 / 2 on the unit box."""
    if tau <= 0:
        raise ArgumentError("tau must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    rows = np.linalg.norm(A, axis=1)
    if np.any(rows == 0):
        raise ArgumentError("huber smoothing needs nonzero rows")
    return SmoothedProblem(
        "huber-l1-fit", A, b, float(tau), 0.5 * float(rows.sum()),
        operator_norm(A / np.sqrt(rows)[:, None]),
    )


def _argmax(sp: SmoothedProblem, x: np.ndarray) -> np.ndarray:
    res = sp.A @ x - sp.b
    if sp.variant == "softmax-uniform-fit":
        z = np.concatenate([res, -res]) / sp.tau
        w = np.exp(z - z.max())
        return w / w.sum()
    if sp.variant == "huber-l1-fit":
        rows = np.linalg.norm(sp.A, axis=1)
        return np.clip(res / (sp.tau * rows), -1.0, 1.0)
    if sp.argmax_oracle is not None:
        return np.asarray(sp.argmax_oracle(x), dtype=float)
    raise UnsupportedError(f"no argmax oracle for {sp.variant!r}")


def build_smoothed(sp: SmoothedProblem, x):
    """Value and gradient of the smoothed term at x."""
    if sp.tau <= 0:
        raise ArgumentError("tau must be positive")
    x = np.asarray(x, dtype=float)
    res = sp.A @ x - sp.b
    if sp.variant == "softmax-uniform-fit":
        m = res.size
        z = np.concatenate([res, -res]) / sp.tau
        zmax = float(z.max())
        ez = np.exp(z - zmax)
        total = float(ez.sum())
        value = sp.tau * (zmax + math.log(total) - math.log(2 * m))
        w = ez / total
        return value, sp.A.T @ (w[:m] - w[m:])
    if sp.variant == "huber-l1-fit":
        rows = np.linalg.norm(sp.A, axis=1)
        t = np.abs(res) / rows
        psi = np.where(t <= sp.tau, t * t / (2 * sp.tau), t - sp.tau / 2)
        w = np.clip(res / (sp.tau * rows), -1.0, 1.0)
        return float(np.sum(rows * psi)), sp.A.T @ w
    raise UnsupportedError(f"unknown smoothing variant {sp.variant!r}")


def choose_tau(norm_A: float, N: int, D_X: float, D_W: float) -> float:
    """tau = (2 ||A|| / (N + 1)) sqrt(D_X / D_W)."""
    if min(norm_A, D_X, D_W) <= 0 or N < 0:
        raise ArgumentError("choose_tau needs positive inputs")
    return 2.0 * norm_A / (N + 1) * math.sqrt(D_X / D_W)


def smoothing_bound(norm_A: float, D_X: float, D_W: float, L_f: float, N: int) -> float:
    """4 ||A|| sqrt(D_X D_W) / (N + 1) + 4 L_f D_X / (N + 1)^2."""
    return 4 * norm_A * math.sqrt(D_X * D_W) / (N + 1) + 4 * L_f * D_X / (N + 1) ** 2


# ---------------------------------------------------------------------------
# projection-free variant


def cg_inexact_abpgm_run(problem: CompositeProblem, glo, D_X: float, x0=None, steps: int = 100, L: Optional[float] = None):
    """Accelerated scheme whose u-update is a generalized linear oracle call."""
    if not problem.X.bounded:
        raise UnsupportedError("oracle-based steps need a bounded feasible set")
    L = L if L is not None else problem.f.lipschitz_grad
    if L is None or L <= 0:
        raise ConfigurationError("need L_f > 0")
    f = problem.f
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    u = x.copy()
    A = 0.0
    counter = OracleCounter()
    trace = SolverTrace("cg-inexact", {"L": L, "D_X": D_X})
    ref = problem.psi_min
    psi = problem.objective(x)
    trace.record(0, psi, None if ref is None else psi - ref, 0.0, counter)
    for k in range(steps):
        alpha = next_alpha(A, L)
        A_new = A + alpha
        y = (alpha / A_new) * u + (A / A_new) * x
        g = np.asarray(f.gradient(y), dtype=float)
        counter.grad += 1
        u = np.asarray(glo(g), dtype=float)
        counter.lo += 1
        x = (alpha / A_new) * u + (A / A_new) * x
        A = A_new
        psi = problem.objective(x)
        trace.record(k + 1, psi, None if ref is None else psi - ref, alpha, counter)
    return x, trace


def cg_inexact_bound(L: float, D_X: float, N: int) -> float:
    return 4 * L * D_X / (N + 1) ** 2 + 8 * L * D_X / (N + 1)
