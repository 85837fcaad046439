"""Seeded desk-scale instances with stored reference optima."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from ..accelerated import SmoothedProblem, huber_l1_fit, softmax_uniform_fit
from ..errors import ArgumentError
from ..geometry import project_simplex, soft_threshold
from ..problem import (
    CompositeProblem,
    SmoothPart,
    box,
    half_squared_distance,
    l1,
    simplex,
    whole_space,
    zero,
)
from ..splitting import SplitProblem, operator_norm

GENERATOR_NAME = "numpy-PCG64+box-muller"
PROBLEMS = ("lasso", "uniform-fit", "l1-fit", "simplex-qp", "strongly-convex-qp", "nonsmooth-l1")


class SeededStream:
    """PCG64 uniforms; normals by Box-Muller on consecutive pairs."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ArgumentError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size) -> np.ndarray:
        return self._gen.random(size)

    def normal(self, size) -> np.ndarray:
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape))
        pairs = (count + 1) // 2
        u = self._gen.random(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
        angle = 2.0 * math.pi * u[:, 1]
        z = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).ravel()
        return z[:count].reshape(shape)


@dataclass(frozen=True)
class InstanceSpec:
    """``m = 0`` selects the identity design for simplex-qp (f = ||x - b||^2 / 2)."""

    problem: str
    n: int
    m: int = 0
    lam: float = 0.1
    seed: int = 0
    mu: float = 1.0
    radius: float = 1.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["generator"] = GENERATOR_NAME
        return d


@dataclass
class Instance:
    spec: InstanceSpec
    problem: CompositeProblem
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    split: Optional[SplitProblem] = None
    smoothed: Optional[SmoothedProblem] = None
    meta: dict = field(default_factory=dict)

    @property
    def psi_min(self) -> float:
        return self.problem.psi_min

    @property
    def x_star(self) -> np.ndarray:
        return self.problem.x_star


# ---------------------------------------------------------------------------
# reference solvers


def _accelerated_reference(value, grad, prox, L, x0, certify, max_iter=200_000, every=100):
    """Accelerated proximal gradient with function-value restarts.

    Every ``every`` steps ``certify(x)`` may return an exact KKT point, which ends the run.
    """
    x = x0.copy()
    yk = x.copy()
    t = 1.0
    fx = value(x)
    for it in range(1, max_iter + 1):
        if it % every == 0:
            exact = certify(x)
            if exact is not None:
                return exact
        x_new = prox(yk - grad(yk) / L, 1.0 / L)
        f_new = value(x_new)
        if f_new > fx:
            yk, t = x.copy(), 1.0
            continue
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        yk = x_new + ((t - 1) / t_new) * (x_new - x)
        x, fx, t = x_new, f_new, t_new
    return x


def _lasso_reference(A, b, lam):
    n = A.shape[1]
    if lam >= np.abs(A.T @ b).max():
        return np.zeros(n)
    L = operator_norm(A) ** 2

    def value(x):
        r = A @ x - b
        return 0.5 * r @ r + lam * np.abs(x).sum()

    def certify(x):
        S = np.abs(x) > 1e-9
        if not 0 < S.sum() <= A.shape[0]:
            return None
        AS = A[:, S]
        xs = np.linalg.solve(AS.T @ AS, AS.T @ b - lam * np.sign(x[S]))
        cand = np.zeros(n)
        cand[S] = xs
        grad = A.T @ (A @ cand - b)
        if np.all(np.sign(xs) == np.sign(x[S])) and np.abs(grad[~S]).max(initial=0.0) <= lam * (1 + 1e-12):
            return cand
        return None

    return _accelerated_reference(value, lambda x: A.T @ (A @ x - b), lambda v, g: soft_threshold(v, lam * g), L,
                                  np.zeros(n), certify)


def _simplex_ls_reference(A, b):
    n = A.shape[1]
    Q, q = A.T @ A, A.T @ b
    L = operator_norm(A) ** 2

    def value(x):
        r = A @ x - b
        return 0.5 * r @ r

    def certify(x):
        S = x > 1e-10
        k = int(S.sum())
        K = np.zeros((k + 1, k + 1))
        K[:k, :k] = Q[np.ix_(S, S)]
        K[:k, k] = 1.0
        K[k, :k] = 1.0
        rhs = np.concatenate([q[S], [1.0]])
        z0 = np.concatenate([x[S], [float(np.mean(q[S] - Q[np.ix_(S, S)] @ x[S]))]])
        # minimal-norm correction keeps the polished point near x when Q is singular
        sol = z0 + np.linalg.lstsq(K, rhs - K @ z0, rcond=None)[0]
        cand = np.zeros(n)
        cand[S] = sol[:k]
        grad = Q @ cand - q
        nu = -sol[k]
        scale = max(1.0, float(np.abs(grad).max()))
        if np.all(cand[S] > 0) and np.all(grad[~S] >= nu - 1e-12 * scale):
            return cand
        return None

    return _accelerated_reference(value, lambda x: Q @ x - q, lambda v, g: project_simplex(v), L,
                                  np.full(n, 1.0 / n), certify)


def _lp_fit_reference(A, b, R, norm: str):
    from scipy.optimize import linprog

    m, n = A.shape
    if norm == "inf":
        c = np.concatenate([np.zeros(n), [1.0]])
        ones = np.ones((m, 1))
        A_ub = np.block([[A, -ones], [-A, -ones]])
        bounds = [(-R, R)] * n + [(0, None)]
    else:
        c = np.concatenate([np.zeros(n), np.ones(m)])
        eye = np.eye(m)
        A_ub = np.block([[A, -eye], [-A, -eye]])
        bounds = [(-R, R)] * n + [(0, None)] * m
    b_ub = np.concatenate([b, -b])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"reference LP failed: {res.message}")
    return np.clip(res.x[:n], -R, R)


# ---------------------------------------------------------------------------
# generators


def _lasso(spec: InstanceSpec, rng: SeededStream) -> Instance:
    m = spec.m or max(1, spec.n // 2)
    A = rng.normal((m, spec.n))
    b = rng.normal(m)
    L = operator_norm(A) ** 2
    f = SmoothPart.least_squares(A, b)
    f = SmoothPart(f.value, f.gradient, lipschitz_grad=L)
    x_star = _lasso_reference(A, b, spec.lam)
    prob = CompositeProblem(f, l1(spec.lam), whole_space(spec.n), np.zeros(spec.n))
    psi = prob.objective(x_star)
    prob = CompositeProblem(f, l1(spec.lam), whole_space(spec.n), np.zeros(spec.n), (x_star, psi), "lasso")
    split = SplitProblem(half_squared_distance(b), l1(spec.lam), A, reference_optimum=(x_star, psi))
    return Instance(spec, prob, A, b, split=split, meta={"L_f": L, "psi_min": psi})


def _simplex_qp(spec: InstanceSpec, rng: SeededStream) -> Instance:
    n = spec.n
    x0 = np.full(n, 1.0 / n)
    X = simplex(n)
    if spec.m == 0:
        b = 2.0 * rng.normal(n)
        A = np.eye(n)
        f = SmoothPart.squared_distance(b)
        x_star = project_simplex(b)
        L, L1 = 1.0, 1.0
    else:
        A = rng.normal((spec.m, n)) / math.sqrt(spec.m)
        b = rng.normal(spec.m)
        L = operator_norm(A) ** 2
        L1 = float(np.abs(A.T @ A).max())
        base = SmoothPart.least_squares(A, b)
        f = SmoothPart(base.value, base.gradient, lipschitz_grad=L)
        x_star = _simplex_ls_reference(A, b)
    psi = float(f.value(x_star))
    prob = CompositeProblem(f, zero(), X, x0, (x_star, psi), "simplex-qp")
    return Instance(spec, prob, A, b, meta={"L_f": L, "L_l1": L1, "omega_sq": 2.0, "D_X": 1.0, "psi_min": psi})


def _strongly_convex_qp(spec: InstanceSpec, rng: SeededStream) -> Instance:
    n = spec.n
    m = spec.m or n
    A = rng.normal((m, n)) / math.sqrt(m)
    b = rng.normal(m)
    mu = spec.mu
    L = operator_norm(A) ** 2 + mu
    base = SmoothPart.least_squares(A, b, mu)
    f = SmoothPart(base.value, base.gradient, lipschitz_grad=L)
    x_star = np.linalg.solve(A.T @ A + mu * np.eye(n), A.T @ b)
    x0 = x_star + rng.normal(n)
    psi = float(f.value(x_star))
    prob = CompositeProblem(f, zero(), whole_space(n), x0, (x_star, psi), "strongly-convex-qp")
    R0 = float(np.linalg.norm(x0 - x_star))
    return Instance(spec, prob, A, b, meta={"L_f": L, "mu": mu, "R0": R0, "psi_min": psi})


def _fit(spec: InstanceSpec, rng: SeededStream, norm: str) -> Instance:
    n = spec.n
    m = spec.m or 2 * n
    A = rng.normal((m, n))
    b = rng.normal(m)
    R = spec.radius
    X = box(-R * np.ones(n), R * np.ones(n))
    if norm == "inf":
        def value(x):
            return float(np.abs(A @ x - b).max())

        def sub(x):
            res = A @ x - b
            i = int(np.argmax(np.abs(res)))
            return np.sign(res[i]) * A[i]

        M_f = float(np.linalg.norm(A, axis=1).max())
        smoothed = softmax_uniform_fit(A, b, 1.0)
    else:
        def value(x):
            return float(np.abs(A @ x - b).sum())

        def sub(x):
            return A.T @ np.sign(A @ x - b)

        # ||A^T s||_2 <= sqrt(m) ||A|| for sign vectors s
        M_f = math.sqrt(m) * operator_norm(A)
        smoothed = huber_l1_fit(A, b, 1.0)
    f = SmoothPart(value=value, subgradient=sub, subgrad_bound=M_f)
    x_star = _lp_fit_reference(A, b, R, norm)
    psi = value(x_star)
    name = "uniform-fit" if norm == "inf" else "l1-fit"
    prob = CompositeProblem(f, zero(), X, np.zeros(n), (x_star, psi), name)
    D_X = 0.5 * n * R * R
    return Instance(spec, prob, A, b, smoothed=smoothed,
                    meta={"M_f": M_f, "D_X": D_X, "psi_min": psi, "norm_A": smoothed.norm_A, "D_W": smoothed.D_W})


def _nonsmooth_l1(spec: InstanceSpec, rng: SeededStream) -> Instance:
    n = spec.n
    R = spec.radius
    X = box(-R * np.ones(n), R * np.ones(n))
    x0 = R * (2.0 * rng.uniform(n) - 1.0)
    f = SmoothPart.abs_sum()
    f = SmoothPart(f.value, f.gradient, subgradient=f.subgradient, subgrad_bound=math.sqrt(n), holder=None)
    prob = CompositeProblem(f, zero(), X, x0, (np.zeros(n), 0.0), "nonsmooth-l1")
    return Instance(spec, prob, meta={"psi_min": 0.0, "D_X": 0.5 * n * R * R})


def generate_problem(spec: InstanceSpec) -> Instance:
    """Deterministic instance for (problem, n, m, lam, seed, mu, radius)."""
    if spec.n < 1 or spec.m < 0:
        raise ArgumentError("dimensions must be positive")
    rng = SeededStream(spec.seed)
    if spec.problem == "lasso":
        inst = _lasso(spec, rng)
    elif spec.problem == "simplex-qp":
        inst = _simplex_qp(spec, rng)
    elif spec.problem == "strongly-convex-qp":
        inst = _strongly_convex_qp(spec, rng)
    elif spec.problem == "uniform-fit":
        inst = _fit(spec, rng, "inf")
    elif spec.problem == "l1-fit":
        inst = _fit(spec, rng, "one")
    elif spec.problem == "nonsmooth-l1":
        inst = _nonsmooth_l1(spec, rng)
    else:
        raise ArgumentError(f"unknown problem {spec.problem!r}; choose from {', '.join(PROBLEMS)}")
    inst.meta.update({"seed": spec.seed, "generator": GENERATOR_NAME, "problem": spec.problem})
    return inst
