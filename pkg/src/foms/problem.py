"""Composite problems Psi = f + r over a feasible set, plus diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, OracleError, UnsupportedError
from .geometry import project_l1_ball, project_simplex, soft_threshold

MEMBERSHIP_TOL = 1e-9

__all__ = [
    "CompositeProblem",
    "FeasibleSet",
    "GapReport",
    "NonsmoothPart",
    "SmoothPart",
    "box",
    "check_gradient",
    "evaluate_objective",
    "half_squared_distance",
    "indicator",
    "l1",
    "l1_ball",
    "l2_ball",
    "merit_gap",
    "shifted_l1",
    "simplex",
    "spectrahedron",
    "whole_space",
    "zero",
]


def inner(a, b) -> float:
    return float(np.vdot(a, b))


# ---------------------------------------------------------------------------
# smooth part


@dataclass(frozen=True)
class SmoothPart:
    """Differentiable (or subdifferentiable) convex term with optional constants.

    ``holder`` is a pair ``(nu, L_nu)``; ``subgrad_bound`` bounds the dual norm
    of any (sub)gradient over the feasible set.
    """

    value: Callable[[np.ndarray], float]
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz_grad: Optional[float] = None
    holder: Optional[tuple] = None
    subgrad_bound: Optional[float] = None
    subgradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def first_order(self) -> Callable[[np.ndarray], np.ndarray]:
        oracle = self.gradient if self.gradient is not None else self.subgradient
        if oracle is None:
            raise UnsupportedError("smooth part has neither gradient nor subgradient")
        return oracle

    @staticmethod
    def zero() -> "SmoothPart":
        return SmoothPart(
            value=lambda x: 0.0,
            gradient=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
            lipschitz_grad=0.0,
            subgrad_bound=0.0,
        )

    @staticmethod
    def linear(c) -> "SmoothPart":
        c = np.asarray(c, dtype=float).copy()
        return SmoothPart(
            value=lambda x: inner(c, x),
            gradient=lambda x: c.copy(),
            lipschitz_grad=0.0,
        )

    @staticmethod
    def squared_distance(b) -> "SmoothPart":
        """f(x) = ||x - b||^2 / 2."""
        b = np.asarray(b, dtype=float).copy()

        def value(x):
            d = np.asarray(x, dtype=float) - b
            return 0.5 * inner(d, d)

        return SmoothPart(value=value, gradient=lambda x: np.asarray(x, dtype=float) - b, lipschitz_grad=1.0)

    @staticmethod
    def least_squares(A, b, mu: float = 0.0) -> "SmoothPart":
        """f(x) = ||Ax - b||^2 / 2 + mu ||x||^2 / 2 with L = ||A||_2^2 + mu."""
        A = np.asarray(A, dtype=float).copy()
        b = np.asarray(b, dtype=float).copy()

        def value(x):
            res = A @ x - b
            return 0.5 * inner(res, res) + 0.5 * mu * inner(x, x)

        def gradient(x):
            return A.T @ (A @ x - b) + mu * np.asarray(x, dtype=float)

        L = float(np.linalg.norm(A, 2)) ** 2 + mu if A.size else mu
        return SmoothPart(value=value, gradient=gradient, lipschitz_grad=L)

    @staticmethod
    def max_coordinate() -> "SmoothPart":
        """f(x) = max_i x_i with the lowest-index maximiser as subgradient."""

        def subgradient(x):
            x = np.asarray(x, dtype=float)
            g = np.zeros_like(x)
            g[int(np.argmax(x))] = 1.0
            return g

        return SmoothPart(value=lambda x: float(np.max(x)), subgradient=subgradient, subgrad_bound=1.0)

    @staticmethod
    def abs_sum() -> "SmoothPart":
        """f(x) = ||x||_1 exposed through a subgradient oracle."""
        return SmoothPart(
            value=lambda x: float(np.abs(x).sum()),
            subgradient=lambda x: np.sign(np.asarray(x, dtype=float)),
            gradient=lambda x: np.sign(np.asarray(x, dtype=float)),
            holder=None,
        )


# ---------------------------------------------------------------------------
# nonsmooth part


@dataclass(frozen=True)
class NonsmoothPart:
    """Convex, possibly extended-valued term handled through its prox.

    ``prox(x, gamma)`` returns argmin_u gamma*r(u) + ||u - x||^2/2.
    ``conjugate_prox(u, c)`` returns the prox of ``c`` times the conjugate.
    """

    value: Callable[[np.ndarray], float]
    prox: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    subgradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    strong_convexity: float = 0.0
    kind: str = "separable-custom"
    weight: float = 0.0
    set: Optional["FeasibleSet"] = None
    conjugate_prox: Optional[Callable[[np.ndarray, float], np.ndarray]] = None
    conjugate_value: Optional[Callable[[np.ndarray], float]] = None

    def scaled(self, c: float) -> "NonsmoothPart":
        """The function c * r for c > 0."""
        if c <= 0:
            raise ArgumentError("scale must be positive")
        if c == 1.0 or self.kind in ("zero", "indicator"):
            return self
        base = self
        return NonsmoothPart(
            value=lambda x: c * base.value(x),
            prox=None if base.prox is None else (lambda x, g: base.prox(x, c * g)),
            subgradient=None if base.subgradient is None else (lambda x: c * base.subgradient(x)),
            strong_convexity=c * base.strong_convexity,
            kind=base.kind,
            weight=c * base.weight,
            set=base.set,
        )


def zero() -> NonsmoothPart:
    return NonsmoothPart(
        value=lambda x: 0.0,
        prox=lambda x, g: np.asarray(x, dtype=float).copy(),
        subgradient=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        kind="zero",
        conjugate_prox=lambda u, c: np.zeros_like(np.asarray(u, dtype=float)),
        conjugate_value=lambda y: 0.0 if not np.any(y) else math.inf,
    )


def l1(lam: float) -> NonsmoothPart:
    """r(x) = lam * ||x||_1; its conjugate is the indicator of the lam l_inf ball."""
    if lam < 0:
        raise ArgumentError("l1 weight must be nonnegative")
    lam = float(lam)

    def conj_value(y):
        return 0.0 if np.abs(y).max(initial=0.0) <= lam * (1 + 1e-12) + 1e-15 else math.inf

    return NonsmoothPart(
        value=lambda x: lam * float(np.abs(x).sum()),
        prox=lambda x, g: soft_threshold(x, lam * g),
        subgradient=lambda x: lam * np.sign(np.asarray(x, dtype=float)),
        kind="l1",
        weight=lam,
        conjugate_prox=lambda u, c: np.clip(u, -lam, lam),
        conjugate_value=conj_value,
    )


def indicator(X: "FeasibleSet") -> NonsmoothPart:
    if X.projection is None:
        raise UnsupportedError(f"no projection for {X.kind}")
    return NonsmoothPart(
        value=lambda x: 0.0 if X.membership(x) else math.inf,
        prox=lambda x, g: X.projection(x),
        kind="indicator",
        set=X,
    )


def half_squared_distance(b) -> NonsmoothPart:
    """g(z) = ||z - b||^2 / 2 with closed-form prox and conjugate prox."""
    b = np.asarray(b, dtype=float).copy()

    def value(z):
        d = np.asarray(z, dtype=float) - b
        return 0.5 * inner(d, d)

    return NonsmoothPart(
        value=value,
        prox=lambda z, g: (np.asarray(z, dtype=float) + g * b) / (1.0 + g),
        subgradient=lambda z: np.asarray(z, dtype=float) - b,
        strong_convexity=1.0,
        kind="separable-custom",
        conjugate_prox=lambda u, c: (np.asarray(u, dtype=float) - c * b) / (1.0 + c),
        conjugate_value=lambda y: 0.5 * inner(y, y) + inner(b, y),
    )


def shifted_l1(b) -> NonsmoothPart:
    """g(z) = ||z - b||_1; globally sqrt(m)-Lipschitz in l2."""
    b = np.asarray(b, dtype=float).copy()

    def conj_value(y):
        return inner(b, y) if np.abs(y).max(initial=0.0) <= 1 + 1e-12 else math.inf

    return NonsmoothPart(
        value=lambda z: float(np.abs(np.asarray(z, dtype=float) - b).sum()),
        prox=lambda z, g: b + soft_threshold(np.asarray(z, dtype=float) - b, g),
        subgradient=lambda z: np.sign(np.asarray(z, dtype=float) - b),
        kind="separable-custom",
        conjugate_prox=lambda u, c: np.clip(np.asarray(u, dtype=float) - c * b, -1.0, 1.0),
        conjugate_value=conj_value,
    )


# ---------------------------------------------------------------------------
# feasible sets


@dataclass(frozen=True)
class FeasibleSet:
    dimension: int
    kind: str
    membership: Callable[[np.ndarray], bool]
    projection: Optional[Callable[[np.ndarray], np.ndarray]] = None
    diameter_sq: Optional[float] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    radius: Optional[float] = None
    shape: tuple = field(default=())

    @property
    def bounded(self) -> bool:
        return self.diameter_sq is not None and math.isfinite(self.diameter_sq)


def whole_space(n: int) -> FeasibleSet:
    return FeasibleSet(
        dimension=n,
        kind="whole-space",
        membership=lambda x: bool(np.all(np.isfinite(x))),
        projection=lambda x: np.asarray(x, dtype=float).copy(),
        diameter_sq=None,
        shape=(n,),
    )


def simplex(n: int) -> FeasibleSet:
    def member(x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= -MEMBERSHIP_TOL) and abs(x.sum() - 1.0) <= MEMBERSHIP_TOL)

    return FeasibleSet(
        dimension=n,
        kind="simplex",
        membership=member,
        projection=project_simplex,
        diameter_sq=2.0 if n > 1 else 0.0,
        shape=(n,),
    )


def box(lower, upper) -> FeasibleSet:
    lo = np.asarray(lower, dtype=float).copy()
    hi = np.asarray(upper, dtype=float).copy()
    if lo.shape != hi.shape or lo.ndim != 1 or np.any(lo > hi):
        raise ArgumentError("box needs matching 1-D bounds with lower <= upper")

    def member(x):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= lo - MEMBERSHIP_TOL) and np.all(x <= hi + MEMBERSHIP_TOL))

    return FeasibleSet(
        dimension=lo.size,
        kind="box",
        membership=member,
        projection=lambda x: np.clip(x, lo, hi),
        diameter_sq=float(np.sum((hi - lo) ** 2)),
        lower=lo,
        upper=hi,
        shape=(lo.size,),
    )


def l1_ball(n: int, radius: float = 1.0) -> FeasibleSet:
    R = float(radius)
    return FeasibleSet(
        dimension=n,
        kind="l1-ball",
        membership=lambda x: bool(np.abs(x).sum() <= R + MEMBERSHIP_TOL),
        projection=lambda x: project_l1_ball(x, R),
        diameter_sq=4.0 * R * R,
        radius=R,
        shape=(n,),
    )


def l2_ball(n: int, radius: float = 1.0) -> FeasibleSet:
    R = float(radius)

    def project(x):
        x = np.asarray(x, dtype=float)
        nx = float(np.linalg.norm(x))
        return x.copy() if nx <= R else x * (R / nx)

    return FeasibleSet(
        dimension=n,
        kind="l2-ball",
        membership=lambda x: bool(np.linalg.norm(x) <= R + MEMBERSHIP_TOL),
        projection=project,
        diameter_sq=4.0 * R * R,
        radius=R,
        shape=(n,),
    )


def spectrahedron(n: int) -> FeasibleSet:
    """Symmetric positive semidefinite n x n matrices with trace at most one."""

    def member(X):
        X = np.asarray(X, dtype=float)
        if X.shape != (n, n) or not np.allclose(X, X.T, atol=MEMBERSHIP_TOL):
            return False
        w = np.linalg.eigvalsh(0.5 * (X + X.T))
        return bool(w.min() >= -MEMBERSHIP_TOL and w.sum() <= 1.0 + MEMBERSHIP_TOL)

    def project(X):
        X = np.asarray(X, dtype=float)
        w, V = np.linalg.eigh(0.5 * (X + X.T))
        w = np.maximum(w, 0.0)
        if w.sum() > 1.0:
            w = project_simplex(w)
        return (V * w) @ V.T

    return FeasibleSet(
        dimension=n,
        kind="spectrahedron",
        membership=member,
        projection=project,
        diameter_sq=2.0 if n > 1 else 1.0,
        shape=(n, n),
    )


# ---------------------------------------------------------------------------
# composite problem


@dataclass(frozen=True)
class CompositeProblem:
    """Minimise f + r over X starting from the designated feasible point x0."""

    f: SmoothPart
    r: NonsmoothPart
    X: FeasibleSet
    x0: np.ndarray
    reference_optimum: Optional[tuple] = None
    name: str = ""

    def __post_init__(self):
        x0 = np.asarray(self.x0, dtype=float)
        if x0.shape != self.X.shape:
            raise ArgumentError(f"start point has shape {x0.shape}, expected {self.X.shape}")
        if not self.X.membership(x0) or not math.isfinite(self.r.value(x0)):
            raise ArgumentError("designated start point is infeasible")
        object.__setattr__(self, "x0", x0)

    @property
    def psi_min(self) -> Optional[float]:
        return None if self.reference_optimum is None else float(self.reference_optimum[1])

    @property
    def x_star(self) -> Optional[np.ndarray]:
        return None if self.reference_optimum is None else np.asarray(self.reference_optimum[0])

    def objective(self, x) -> float:
        return evaluate_objective(self, x)

    def gap(self, x) -> Optional[float]:
        if self.reference_optimum is None:
            return None
        return evaluate_objective(self, x) - self.psi_min


def evaluate_objective(problem: CompositeProblem, x) -> float:
    """f(x) + r(x), or +inf when x is outside X or dom r."""
    x = np.asarray(x, dtype=float)
    if x.shape != problem.X.shape:
        raise ArgumentError(f"point has shape {x.shape}, expected {problem.X.shape}")
    if not problem.X.membership(x):
        return math.inf
    rv = float(problem.r.value(x))
    if not math.isfinite(rv):
        return math.inf
    return float(problem.f.value(x)) + rv


def check_gradient(problem: CompositeProblem, x, h_fd: float = 1e-6) -> float:
    """Max coordinate deviation between the gradient and central differences."""
    if not 1e-8 < h_fd < 1e-2:
        raise ArgumentError("finite-difference step must lie in (1e-8, 1e-2)")
    x = np.asarray(x, dtype=float)
    g = np.asarray(problem.f.first_order(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise OracleError("gradient oracle returned non-finite values")
    flat = x.ravel()
    cd = np.empty(flat.size)
    for i in range(flat.size):
        e = np.zeros_like(flat)
        e[i] = h_fd
        fp = problem.f.value((flat + e).reshape(x.shape))
        fm = problem.f.value((flat - e).reshape(x.shape))
        cd[i] = (fp - fm) / (2 * h_fd)
    if not np.all(np.isfinite(cd)):
        raise OracleError("value oracle returned non-finite values")
    gf = g.ravel()
    return float(np.max(np.abs(gf - cd) / (1.0 + np.abs(gf))))


@dataclass(frozen=True)
class GapReport:
    e: float
    witness: np.ndarray
    gamma_term: float


def merit_gap(problem: CompositeProblem, oracle, x) -> GapReport:
    """Primal gap r(x) - r(u) + <grad f(x), x - u> at the oracle answer u."""
    if not problem.X.bounded:
        raise UnsupportedError("merit gap needs a bounded feasible set")
    x = np.asarray(x, dtype=float)
    g = np.asarray(problem.f.first_order(x), dtype=float)
    u = np.asarray(oracle(g), dtype=float)
    gamma = float(problem.r.value(x) - problem.r.value(u) + inner(g, x - u))
    return GapReport(e=max(gamma, 0.0), witness=u, gamma_term=gamma)
