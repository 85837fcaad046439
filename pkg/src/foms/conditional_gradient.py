"""Projection-free methods driven by linear minimization oracles.

Covers the linear and generalized linear oracles, generalized conditional
gradient with four step rules, away-step and pairwise variants with explicit
atom bookkeeping, and conditional gradient sliding with its inner CndG
procedure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InternalFault, UnsupportedError
from .problem import CompositeProblem, FeasibleSet
from .trace import OracleCounter, SolverTrace

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
POWER_MAX_ITERS = 10_000
POWER_TOL = 1e-10


# ---------------------------------------------------------------------------
# oracles


def _spectrahedron_lo(Y: np.ndarray) -> np.ndarray:
    Y = 0.5 * (Y + Y.T)
    n = Y.shape[0]
    sigma = float(np.linalg.norm(Y, "fro"))
    B = sigma * np.eye(n) - Y
    v = np.ones(n) / math.sqrt(n)
    rq = float(v @ Y @ v)
    for _ in range(POWER_MAX_ITERS):
        w = B @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            break
        w = w / nw
        moved = float(np.linalg.norm(w - v))
        v = w
        rq = float(v @ Y @ v)
        # vector change bounds the quotient error by its square
        if moved <= POWER_TOL:
            break
    if rq >= 0.0:
        return np.zeros_like(Y)
    return np.outer(v, v)


def linear_oracle(domain: FeasibleSet, y) -> np.ndarray:
    """A minimiser of <y, s> over the domain; ties go to the lowest index."""
    y = np.asarray(y, dtype=float)
    kind = domain.kind
    if kind == "simplex":
        s = np.zeros_like(y)
        s[int(np.argmin(y))] = 1.0
        return s
    if kind == "l1-ball":
        i = int(np.argmax(np.abs(y)))
        s = np.zeros_like(y)
        s[i] = -domain.radius * np.sign(y[i])
        return s
    if kind == "box":
        return np.where(y > 0, domain.lower, np.where(y < 0, domain.upper, domain.lower))
    if kind == "l2-ball":
        ny = float(np.linalg.norm(y))
        return np.zeros_like(y) if ny == 0 else -domain.radius * y / ny
    if kind == "spectrahedron":
        return _spectrahedron_lo(y)
    raise UnsupportedError(f"no linear oracle over {kind!r}")


def _box_l1_glo(domain: FeasibleSet, lam: float, y: np.ndarray) -> np.ndarray:
    a, b = domain.lower, domain.upper
    va = y * a + lam * np.abs(a)
    vb = y * b + lam * np.abs(b)
    has_zero = (a <= 0) & (b >= 0)
    # zero wins ties, then the lower endpoint
    best = np.where(has_zero, 0.0, a)
    best_val = np.where(has_zero, 0.0, va)
    take_a = has_zero & (va < best_val)
    best = np.where(take_a, a, best)
    best_val = np.where(take_a, va, best_val)
    take_b = vb < best_val
    return np.where(take_b, b, best)


def generalized_linear_oracle(domain: FeasibleSet, r, y) -> np.ndarray:
    """A minimiser of <y, x> + r(x) over the domain."""
    y = np.asarray(y, dtype=float)
    rk = r.kind
    if rk == "zero" or rk == "indicator":
        return linear_oracle(domain, y)
    if rk == "l1":
        if domain.kind == "simplex":
            return linear_oracle(domain, y)
        if domain.kind == "box":
            return _box_l1_glo(domain, r.weight, y)
        if domain.kind == "l1-ball":
            if np.abs(y).max(initial=0.0) > r.weight:
                return linear_oracle(domain, y)
            return np.zeros_like(y)
    raise UnsupportedError(f"no generalized oracle for r={rk!r} over {domain.kind!r}")


@dataclass(frozen=True)
class LinearOracle:
    domain: FeasibleSet

    def __call__(self, y) -> np.ndarray:
        return linear_oracle(self.domain, y)


@dataclass(frozen=True)
class GeneralizedLinearOracle:
    domain: FeasibleSet
    r: object

    def __call__(self, y) -> np.ndarray:
        return generalized_linear_oracle(self.domain, self.r, y)


# ---------------------------------------------------------------------------
# step rules


@dataclass(frozen=True)
class CGStepRule:
    """Step rule for (generalized) conditional gradient.

    ``standard`` uses gamma_k = a / (k + b); ``adaptive`` uses L and, when
    ``curvature`` is given, that constant in place of ||p - x||^2.
    """

    kind: str
    L: Optional[float] = None
    curvature: Optional[float] = None
    a: float = 2.0
    b: float = 1.0
    M0: float = 1.0
    growth: float = 2.0
    shrink: float = 0.9

    def __post_init__(self):
        if self.kind not in ("standard", "exact-line-search", "adaptive", "backtracking"):
            raise ConfigurationError(f"unknown step rule {self.kind!r}")


def golden_section(phi, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Minimiser of a unimodal phi on [lo, hi], compared against both ends."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = phi(d)
    t = 0.5 * (a + b)
    ft = phi(t)
    if not math.isfinite(ft):
        raise FloatingPointError("line search met a non-finite value")
    f_hi = phi(hi)
    if f_hi <= ft:
        return hi
    if phi(lo) < ft:
        return lo
    return t


def _segment_objective(problem: CompositeProblem, x, d):
    f, r = problem.f.value, problem.r.value
    return lambda t: float(f(x + t * d) + r(x + t * d))


def gcg_run(problem: CompositeProblem, glo, rule: CGStepRule, x0=None, steps: int = 100):
    """Generalized conditional gradient; the merit e^k is kept in ``series``."""
    if not problem.X.bounded:
        raise UnsupportedError("conditional gradient needs a bounded feasible set")
    L = rule.L if rule.L is not None else problem.f.lipschitz_grad
    if rule.kind == "adaptive" and L is None:
        raise ConfigurationError("adaptive step needs L_f")
    f, r = problem.f, problem.r
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    counter = OracleCounter()
    trace = SolverTrace("gcg", {"rule": rule.kind})
    ref = problem.psi_min
    psi = problem.objective(x)
    trace.record(0, psi, None if ref is None else psi - ref, 0.0, counter)
    M = rule.M0
    warned = False
    for k in range(1, steps + 1):
        g = np.asarray(f.gradient(x), dtype=float)
        counter.grad += 1
        p = np.asarray(glo(g), dtype=float)
        counter.lo += 1
        d = p - x
        e = float(r.value(x) - r.value(p) + np.vdot(g, x - p))
        dd = float(np.vdot(d, d))
        trace.add("merit", max(e, 0.0))
        kind = rule.kind
        if kind == "exact-line-search":
            try:
                gamma = golden_section(_segment_objective(problem, x, d), 0.0, 1.0)
            except FloatingPointError:
                if not warned:
                    trace.meta["warning"] = "line search failed; adaptive fallback used"
                    warned = True
                kind = "adaptive"
        if kind == "standard":
            gamma = min(1.0, rule.a / (k + rule.b))
        elif kind == "adaptive":
            denom = L * (rule.curvature if rule.curvature is not None else dd)
            gamma = 0.0 if e <= 0 else (1.0 if denom <= 0 else min(1.0, e / denom))
        elif kind == "backtracking":
            gamma = 0.0
            if e > 0 and dd > 0:
                M = max(rule.shrink * M, 1e-12)
                for _ in range(200):
                    gamma = min(1.0, e / (M * dd))
                    cand = problem.objective(x + gamma * d)
                    if cand <= psi - gamma * e + 0.5 * gamma * gamma * M * dd + 1e-15 * max(1.0, abs(psi)):
                        break
                    M *= rule.growth
                else:
                    raise InternalFault("backtracking failed to certify a step")
        x = x + gamma * d
        psi = problem.objective(x)
        trace.record(k, psi, None if ref is None else psi - ref, gamma, counter)
    return x, trace


# ---------------------------------------------------------------------------
# away-step and pairwise variants


@dataclass
class AtomState:
    """Convex combination of atoms; ``weights`` sum to one."""

    atoms: list = field(default_factory=list)
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @staticmethod
    def from_vertex(v) -> "AtomState":
        return AtomState([np.asarray(v, dtype=float).copy()], np.ones(1))

    def copy(self) -> "AtomState":
        return AtomState([a.copy() for a in self.atoms], self.weights.copy())

    def iterate(self) -> np.ndarray:
        return np.tensordot(self.weights, np.array(self.atoms), axes=1)

    def index_of(self, v) -> int:
        for i, a in enumerate(self.atoms):
            if np.array_equal(a, v):
                return i
        return -1

    def add_weight(self, v, w: float) -> None:
        i = self.index_of(v)
        if i < 0:
            self.atoms.append(np.asarray(v, dtype=float).copy())
            self.weights = np.append(self.weights, w)
        else:
            self.weights[i] += w

    def prune(self) -> None:
        keep = self.weights > 0
        if not np.all(keep):
            self.atoms = [a for a, kp in zip(self.atoms, keep) if kp]
            self.weights = self.weights[keep]

    def check(self) -> None:
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-8:
            raise InternalFault(f"atom weights drifted: sum = {self.weights.sum()!r}")


def awcg_run(
    problem: CompositeProblem,
    lo,
    atoms0: AtomState,
    steps: int = 100,
    variant: str = "away",
    tol: float = 0.0,
):
    """Away-step or pairwise conditional gradient with exact line search.

    Stops early once the Frank-Wolfe gap drops to ``tol`` or below.
    """
    if variant not in ("away", "pairwise"):
        raise ConfigurationError(f"unknown variant {variant!r}")
    f = problem.f
    state = atoms0.copy()
    state.check()
    x = state.iterate()
    counter = OracleCounter()
    trace = SolverTrace(f"awcg-{variant}")
    ref = problem.psi_min
    psi = problem.objective(x)
    trace.record(0, psi, None if ref is None else psi - ref, 0.0, counter)
    for k in range(1, steps + 1):
        g = np.asarray(f.gradient(x), dtype=float)
        counter.grad += 1
        p = np.asarray(lo(g), dtype=float)
        counter.lo += 1
        fw_gap = float(np.vdot(g, x - p))
        trace.add("fw_gap", fw_gap)
        if fw_gap <= tol:
            break
        scores = np.array([np.vdot(g, a) for a in state.atoms])
        j = int(np.argmax(scores))
        u, lam_u = state.atoms[j], float(state.weights[j])
        if variant == "pairwise":
            d, gmax, mode = p - u, lam_u, "pairwise"
        elif fw_gap >= float(np.vdot(g, u - x)):
            d, gmax, mode = p - x, 1.0, "forward"
        else:
            d, gmax, mode = x - u, lam_u / (1.0 - lam_u), "away"
        gamma = golden_section(_segment_objective(problem, x, d), 0.0, gmax)
        drop = gamma == gmax
        if mode == "forward":
            state.weights *= 1.0 - gamma
            state.add_weight(p, gamma)
        elif mode == "away":
            state.weights *= 1.0 + gamma
            state.weights[j] = 0.0 if drop else state.weights[j] - gamma
        else:
            state.weights[j] = 0.0 if drop else state.weights[j] - gamma
            state.add_weight(p, gamma)
        state.prune()
        state.check()
        x = state.iterate()
        psi = problem.objective(x)
        trace.record(k, psi, None if ref is None else psi - ref, gamma, counter)
    return x, state, trace


# ---------------------------------------------------------------------------
# conditional gradient sliding


def cndg_inner(
    g,
    u,
    beta: float,
    eta: float,
    lo,
    omega_sq: Optional[float] = None,
    counter: Optional[OracleCounter] = None,
) -> np.ndarray:
    """Approximately minimise <g, x> + beta ||x - u||^2 / 2 by conditional gradient.

    Stops when the Wolfe gap V is at most eta; with ``omega_sq`` the number
    of oracle calls is capped at ceil(6 beta omega_sq / eta).
    """
    if beta <= 0 or eta <= 0:
        raise ConfigurationError("beta and eta must be positive")
    g = np.asarray(g, dtype=float)
    u = np.asarray(u, dtype=float)
    cap = math.ceil(6 * beta * omega_sq / eta) if omega_sq is not None else None
    ut = u.copy()
    calls = 0
    while True:
        grad = g + beta * (ut - u)
        v = np.asarray(lo(grad), dtype=float)
        calls += 1
        if counter is not None:
            counter.lo += 1
        V = float(np.vdot(grad, ut - v))
        if V <= eta:
            return ut
        if cap is not None and calls >= cap:
            raise InternalFault(f"inner oracle cap {cap} exceeded")
        dv = v - ut
        alpha = min(1.0, V / (beta * float(np.vdot(dv, dv))))
        ut = ut + alpha * dv


@dataclass(frozen=True)
class SCGParams:
    L: float
    omega_sq: float

    def beta(self, k: int) -> float:
        return 3.0 * self.L / (k + 1)

    def gamma(self, k: int) -> float:
        return 3.0 / (k + 2)

    def eta(self, k: int) -> float:
        return self.L * self.omega_sq / (k * (k + 1))

    def Gamma(self, k: int) -> float:
        g = 1.0
        for i in range(2, k + 1):
            g *= 1.0 - self.gamma(i)
        return g

    def lo_cap(self, k: int) -> int:
        return math.ceil(6 * self.beta(k) * self.omega_sq / self.eta(k))

    def bound(self, k: int) -> float:
        return 15.0 * self.L * self.omega_sq / (2.0 * (k + 1) * (k + 2))

    def check(self, kmax: int = 1000) -> None:
        if abs(self.gamma(1) - 1.0) > 1e-15:
            raise InternalFault("gamma_1 must equal 1")
        prev = -math.inf
        G = 1.0
        for k in range(1, kmax + 1):
            if k > 1:
                G *= 1.0 - self.gamma(k)
            if self.L * self.gamma(k) > self.beta(k) * (1 + 1e-15):
                raise InternalFault(f"L gamma_k > beta_k at k={k}")
            ratio = self.beta(k) * self.gamma(k) / G
            if ratio < prev * (1 - 1e-12):
                raise InternalFault(f"beta_k gamma_k / Gamma_k decreased at k={k}")
            prev = ratio


def scg_run(problem: CompositeProblem, lo, params: SCGParams, x0=None, steps: int = 100):
    """Conditional gradient sliding; returns (y_N, trace)."""
    if problem.r.kind != "zero":
        raise UnsupportedError("sliding handles r = 0 only")
    f = problem.f
    x = np.array(problem.x0 if x0 is None else x0, dtype=float)
    y = x.copy()
    counter = OracleCounter()
    trace = SolverTrace("scg")
    ref = problem.psi_min
    psi = problem.objective(y)
    trace.record(0, psi, None if ref is None else psi - ref, 0.0, counter)
    cap_total = 0
    for k in range(1, steps + 1):
        gam = params.gamma(k)
        z = (1 - gam) * y + gam * x
        g = np.asarray(f.gradient(z), dtype=float)
        counter.grad += 1
        x = cndg_inner(g, x, params.beta(k), params.eta(k), lo, params.omega_sq, counter)
        y = (1 - gam) * y + gam * x
        psi = problem.objective(y)
        cap_total += params.lo_cap(k)
        trace.add("lo_cap", cap_total)
        trace.record(k, psi, None if ref is None else psi - ref, gam, counter)
    return y, trace
