"""Distance-generating functions, Bregman divergences and prox-mappings.

Three closed-form geometries ship: the euclidean kernel, the negative
entropy on the unit simplex and the Fermi-Dirac entropy on a box.  Kernels
with an explicit conjugate gradient (such as the quartic kernel used for
relative smoothness) are available as the ``custom`` kind.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, DomainError, UnsupportedError

ENTROPY_FLOOR = 1e-300

__all__ = [
    "DistanceGenerator",
    "ProxMapping",
    "SymmetryEstimate",
    "bregman_divergence",
    "entropy_simplex",
    "estimate_curvature",
    "estimate_symmetry",
    "euclidean",
    "fermi_dirac_box",
    "moreau_envelope",
    "moreau_identity_check",
    "primal_norm",
    "dual_norm",
    "project_l1_ball",
    "project_simplex",
    "prox_map",
    "quartic_kernel",
    "rescale",
    "soft_threshold",
]


# ---------------------------------------------------------------------------
# elementary operators


def soft_threshold(x, gamma: float) -> np.ndarray:
    """Prox of ``gamma * ||.||_1``, applied coordinate-wise."""
    if gamma < 0:
        raise ArgumentError(f"threshold must be nonnegative, got {gamma}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    n = v.size
    # stable sort keeps tie handling deterministic
    s = np.sort(v, kind="stable")[::-1]
    css = np.cumsum(s) - 1.0
    idx = np.arange(1, n + 1)
    cond = s - css / idx > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def project_l1_ball(v, radius: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if np.abs(v).sum() <= radius:
        return v.copy()
    w = project_simplex(np.abs(v) / radius) * radius
    return np.sign(v) * w


def _sigmoid(s: np.ndarray) -> np.ndarray:
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    e = np.exp(s[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _xlog_ratio(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """u*log(u/x) with the convention 0*log(0/x) = 0."""
    safe_u = np.where(u > 0, u, 1.0)
    return np.where(u > 0, u * np.log(safe_u / x), 0.0)


# ---------------------------------------------------------------------------
# distance-generating functions


@dataclass(frozen=True)
class DistanceGenerator:
    """A strongly convex reference function together with its geometry.

    ``norm`` names the primal norm in which ``modulus`` is measured
    (``"l2"`` or ``"l1"``).  ``grad_conjugate`` inverts the gradient map and
    enables the prox-mapping of unconstrained custom kernels.
    """

    kind: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    modulus: float = 1.0
    norm: str = "l2"
    diameter: Optional[float] = None
    symmetry: Optional[float] = None
    symmetry_is_estimate: bool = False
    rel_smooth_const: Optional[float] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None
    grad_conjugate: Optional[Callable[[np.ndarray], np.ndarray]] = None
    center: Optional[np.ndarray] = None
    scale: float = 1.0

    def with_symmetry(self, nu: float, estimate: bool = True) -> "DistanceGenerator":
        return replace(self, symmetry=float(nu), symmetry_is_estimate=estimate)

    def with_rel_smooth_const(self, L: float) -> "DistanceGenerator":
        return replace(self, rel_smooth_const=float(L))


def euclidean(X=None) -> DistanceGenerator:
    """Half squared euclidean norm, shifted so its minimum over ``X`` is zero."""
    shift = 0.0
    diameter = None
    if X is not None:
        if X.kind == "simplex":
            n = X.dimension
            shift = 1.0 / (2 * n)
            diameter = 0.5 - shift
        elif X.kind == "box":
            lo, hi = X.lower, X.upper
            nearest = np.clip(0.0, lo, hi)
            farthest = np.maximum(lo * lo, hi * hi)
            shift = 0.5 * float(nearest @ nearest)
            diameter = 0.5 * float(farthest.sum()) - shift
        elif X.kind in ("l1-ball", "l2-ball"):
            diameter = 0.5 * X.radius**2

    def value(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * float(np.vdot(x, x)) - shift

    return DistanceGenerator(
        kind="euclidean",
        value=value,
        gradient=lambda x: np.asarray(x, dtype=float).copy(),
        modulus=1.0,
        norm="l2",
        diameter=diameter,
        symmetry=1.0,
        symmetry_is_estimate=False,
        grad_conjugate=lambda v: np.asarray(v, dtype=float).copy(),
    )


def entropy_simplex(n: int) -> DistanceGenerator:
    """Negative entropy plus ``log n``; 1-strongly convex for the l1 norm."""
    log_n = float(np.log(n))

    def value(x):
        x = np.asarray(x, dtype=float)
        return float(_xlog_ratio(x, np.ones_like(x)).sum()) + log_n

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.log(np.maximum(x, ENTROPY_FLOOR)) + 1.0

    return DistanceGenerator(
        kind="entropy-simplex",
        value=value,
        gradient=gradient,
        modulus=1.0,
        norm="l1",
        diameter=log_n,
    )


def fermi_dirac_box(lower, upper) -> DistanceGenerator:
    """Fermi-Dirac entropy on a box, shifted to vanish at the box centre.

    Strong convexity holds with modulus ``4 / max(upper - lower)`` in l2.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ArgumentError("box bounds must satisfy lower < upper coordinate-wise")
    width = hi - lo
    shift = float(np.sum(width * np.log(width / 2)))

    def value(x):
        x = np.asarray(x, dtype=float)
        a = x - lo
        b = hi - x
        if np.any(a < 0) or np.any(b < 0):
            return np.inf
        return float(
            np.sum(_xlog_ratio(a, np.ones_like(a)) + _xlog_ratio(b, np.ones_like(b)))
        ) - shift

    def gradient(x):
        x = np.asarray(x, dtype=float)
        a = np.maximum(x - lo, ENTROPY_FLOOR)
        b = np.maximum(hi - x, ENTROPY_FLOOR)
        return np.log(a) - np.log(b)

    return DistanceGenerator(
        kind="fermi-dirac-box",
        value=value,
        gradient=gradient,
        modulus=4.0 / float(width.max()),
        norm="l2",
        diameter=float(np.sum(width) * np.log(2.0)),
        lower=lo,
        upper=hi,
    )


def _solve_cubic_norm(s: float) -> float:
    """Positive root of t**3 + t = s for s >= 0."""
    if s == 0.0:
        return 0.0
    d = np.sqrt(s * s / 4.0 + 1.0 / 27.0)
    t = float(np.cbrt(s / 2.0 + d) + np.cbrt(s / 2.0 - d))
    for _ in range(3):
        t -= (t**3 + t - s) / (3 * t * t + 1)
    return t


def quartic_kernel() -> DistanceGenerator:
    """h(x) = ||x||^4/4 + ||x||^2/2 on the whole space."""

    def value(x):
        q = float(np.vdot(x, x))
        return 0.25 * q * q + 0.5 * q

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return (float(np.vdot(x, x)) + 1.0) * x

    def grad_conjugate(v):
        v = np.asarray(v, dtype=float)
        s = float(np.linalg.norm(v))
        if s == 0.0:
            return np.zeros_like(v)
        t = _solve_cubic_norm(s)
        return v * (t / s)

    return DistanceGenerator(
        kind="custom",
        value=value,
        gradient=gradient,
        modulus=1.0,
        norm="l2",
        grad_conjugate=grad_conjugate,
    )


def rescale(h: DistanceGenerator, center, radius: float) -> DistanceGenerator:
    """The kernel x -> radius**2 * h((x - center) / radius)."""
    if radius <= 0:
        raise ArgumentError("radius must be positive")
    c = np.asarray(center, dtype=float).copy()
    R = float(radius)
    if h.kind == "euclidean":
        def value(x):
            d = np.asarray(x, dtype=float) - c
            return 0.5 * float(np.vdot(d, d))

        return replace(
            h,
            value=value,
            gradient=lambda x: np.asarray(x, dtype=float) - c,
            grad_conjugate=lambda v: np.asarray(v, dtype=float) + c,
            center=c,
            scale=R,
            diameter=None,
        )
    if h.kind == "custom" and h.grad_conjugate is not None:
        base_value, base_grad, base_conj = h.value, h.gradient, h.grad_conjugate
        return replace(
            h,
            value=lambda x: R * R * base_value((np.asarray(x, dtype=float) - c) / R),
            gradient=lambda x: R * base_grad((np.asarray(x, dtype=float) - c) / R),
            grad_conjugate=lambda v: c + R * base_conj(np.asarray(v, dtype=float) / R),
            center=c,
            scale=R,
            diameter=None,
        )
    raise UnsupportedError(f"cannot recentre a kernel of kind {h.kind!r}")


def primal_norm(h: DistanceGenerator, d) -> float:
    d = np.asarray(d, dtype=float).ravel()
    return float(np.abs(d).sum()) if h.norm == "l1" else float(np.linalg.norm(d))


def dual_norm(h: DistanceGenerator, g) -> float:
    g = np.asarray(g, dtype=float).ravel()
    return float(np.abs(g).max(initial=0.0)) if h.norm == "l1" else float(np.linalg.norm(g))


def bregman_divergence(h: DistanceGenerator, u, x) -> float:
    """D_h(u, x) = h(u) - h(x) - <grad h(x), u - x>."""
    u = np.asarray(u, dtype=float)
    x = np.asarray(x, dtype=float)
    if u.shape != x.shape:
        raise ArgumentError(f"shape mismatch {u.shape} vs {x.shape}")
    if h.kind == "euclidean":
        d = u - x
        return 0.5 * float(np.vdot(d, d))
    if h.kind == "entropy-simplex":
        if np.any(x <= 0):
            raise DomainError("entropy divergence needs x in the relative interior")
        if np.any(u < 0):
            raise DomainError("entropy divergence needs u >= 0")
        return float(np.sum(_xlog_ratio(u, x) - u + x))
    if h.kind == "fermi-dirac-box":
        a = x - h.lower
        b = h.upper - x
        if np.any(a <= 0) or np.any(b <= 0):
            raise DomainError("Fermi-Dirac divergence needs x strictly inside the box")
        ua = u - h.lower
        ub = h.upper - u
        if np.any(ua < 0) or np.any(ub < 0):
            raise DomainError("Fermi-Dirac divergence needs u inside the box")
        return float(np.sum(_xlog_ratio(ua, a) + _xlog_ratio(ub, b)))
    return float(h.value(u) - h.value(x) - np.vdot(h.gradient(x), u - x))


# ---------------------------------------------------------------------------
# prox-mappings


@dataclass(frozen=True)
class ProxMapping:
    """argmin_u r(u) + <y, u - x> + D_h(u, x) over X.

    ``solver(x, y)`` overrides the closed forms; ``inexactness`` records the
    admissible violation of the optimality condition when a solver is
    approximate.
    """

    h: DistanceGenerator
    r: object
    X: object
    inexactness: float = 0.0
    solver: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None


def _same_set(A, B) -> bool:
    if A is B:
        return True
    if A is None or B is None:
        return False
    if A.kind != B.kind or A.dimension != B.dimension:
        return False
    for attr in ("lower", "upper"):
        a, b = getattr(A, attr), getattr(B, attr)
        if (a is None) != (b is None):
            return False
        if a is not None and not np.array_equal(a, b):
            return False
    return A.radius == B.radius


def _euclidean_prox(r, X, v: np.ndarray) -> np.ndarray:
    rk = r.kind
    if X.kind == "whole-space":
        if rk == "zero":
            return v
        if r.prox is None:
            raise UnsupportedError("nonsmooth part has no prox oracle")
        return np.asarray(r.prox(v, 1.0), dtype=float)
    if rk == "zero" or (rk == "indicator" and _same_set(r.set, X)):
        return X.projection(v)
    if rk == "l1" and X.kind == "box":
        return np.clip(soft_threshold(v, r.weight), X.lower, X.upper)
    if rk == "l1" and X.kind == "simplex":
        # l1 is constant on the simplex
        return X.projection(v)
    raise UnsupportedError(f"no euclidean prox for r={rk!r} over X={X.kind!r}")


def _entropic_prox(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    logits = np.log(np.maximum(x, ENTROPY_FLOOR)) - y
    logits = logits - logits.max()
    w = np.exp(logits)
    return w / w.sum()


def _fermi_dirac_prox(h: DistanceGenerator, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    lo, hi = h.lower, h.upper
    s = (
        np.log(np.maximum(x - lo, ENTROPY_FLOOR))
        - np.log(np.maximum(hi - x, ENTROPY_FLOOR))
        - y
    )
    return lo + (hi - lo) * _sigmoid(s)


def prox_map(pm: ProxMapping, x, y) -> np.ndarray:
    """Bregman prox-mapping; closed forms for every shipped (h, r, X) triple."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ArgumentError(f"shape mismatch {x.shape} vs {y.shape}")
    if pm.solver is not None:
        return np.asarray(pm.solver(x, y), dtype=float)
    h, r, X = pm.h, pm.r, pm.X
    rk = r.kind
    if h.kind == "euclidean":
        # recentred euclidean kernels share the divergence of the plain one
        return _euclidean_prox(r, X, x - y)
    if h.kind == "entropy-simplex":
        if X.kind != "simplex":
            raise UnsupportedError("entropy kernel requires the simplex as X")
        if rk in ("zero", "l1") or (rk == "indicator" and _same_set(r.set, X)):
            return _entropic_prox(x, y)
        raise UnsupportedError(f"no entropic prox for r={rk!r}")
    if h.kind == "fermi-dirac-box":
        if rk == "zero" or (rk == "indicator" and r.set is not None and r.set.kind == "box"):
            return _fermi_dirac_prox(h, x, y)
        if rk == "l1" and np.all(h.lower >= 0):
            # l1 is linear on a nonnegative box
            return _fermi_dirac_prox(h, x, y + r.weight)
        raise UnsupportedError(f"no Fermi-Dirac prox for r={rk!r}")
    if h.grad_conjugate is not None and X.kind == "whole-space" and rk == "zero":
        return np.asarray(h.grad_conjugate(h.gradient(x) - y), dtype=float)
    raise UnsupportedError(
        f"no closed-form prox for h={h.kind!r}, r={rk!r}, X={X.kind!r}; supply a solver"
    )


# ---------------------------------------------------------------------------
# Moreau machinery


def moreau_envelope(r, gamma: float, x):
    """Value and gradient of the Moreau envelope of ``r`` with parameter gamma."""
    if gamma <= 0:
        raise ArgumentError("gamma must be positive")
    if r.prox is None:
        raise UnsupportedError("Moreau envelope needs a prox oracle")
    x = np.asarray(x, dtype=float)
    p = np.asarray(r.prox(x, gamma), dtype=float)
    d = p - x
    return float(r.value(p) + np.vdot(d, d) / (2 * gamma)), (x - p) / gamma


def moreau_identity_check(g, c: float, u) -> float:
    """Residual norm of c*prox_{g/c}(u/c) + prox_{c g*}(u) - u."""
    if g.prox is None or g.conjugate_prox is None:
        raise UnsupportedError("identity check needs both prox and conjugate prox")
    u = np.asarray(u, dtype=float)
    res = c * g.prox(u / c, 1.0 / c) + g.conjugate_prox(u, c) - u
    return float(np.linalg.norm(res))


# ---------------------------------------------------------------------------
# sampled constants


@dataclass(frozen=True)
class SymmetryEstimate:
    value: float
    is_estimate: bool
    pairs: int


def _default_sampler(h: DistanceGenerator, dim: int):
    if h.kind == "entropy-simplex":
        return lambda rng: rng.dirichlet(np.ones(dim))
    if h.kind == "fermi-dirac-box":
        return lambda rng: rng.uniform(h.lower, h.upper)
    return lambda rng: rng.standard_normal(dim)


def estimate_symmetry(
    h: DistanceGenerator,
    dim: int,
    sampler=None,
    pairs: int = 10_000,
    seed: int = 0,
) -> SymmetryEstimate:
    """Minimum of D_h(x,u)/D_h(u,x) over sampled pairs (exact 1 for euclidean)."""
    if h.kind == "euclidean":
        return SymmetryEstimate(1.0, False, 0)
    rng = np.random.default_rng(seed)
    draw = sampler or _default_sampler(h, dim)
    best = 1.0
    for _ in range(pairs):
        x, u = draw(rng), draw(rng)
        fwd = bregman_divergence(h, u, x)
        if fwd <= 1e-14:
            continue
        best = min(best, bregman_divergence(h, x, u) / fwd)
    return SymmetryEstimate(max(0.0, best), True, pairs)


def estimate_curvature(
    h: DistanceGenerator,
    dim: int,
    sampler=None,
    samples: int = 10_000,
    seed: int = 0,
) -> float:
    """Sampled sup of 2 D_h(x + t(u - x), x) / t^2 over X and t in (0, 1]."""
    rng = np.random.default_rng(seed)
    draw = sampler or _default_sampler(h, dim)
    best = 0.0
    for _ in range(samples):
        x, u = draw(rng), draw(rng)
        t = rng.uniform(1e-3, 1.0)
        z = x + t * (u - x)
        best = max(best, 2.0 * bregman_divergence(h, z, x) / (t * t))
    return best
