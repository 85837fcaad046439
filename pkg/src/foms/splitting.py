"""Proximal ADMM and Chambolle-Pock for Psi(x) = g(Ax) + r(x)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import ArgumentError, ConfigurationError, UnsupportedError
from .trace import OracleCounter, SolverTrace

PSD_TOL = 1e-10


def operator_norm(A, iters: int = 10_000, tol: float = 1e-14) -> float:
    """Largest singular value by power iteration on A^T A."""
    A = np.asarray(A, dtype=float)
    n = A.shape[1]
    if A.size == 0 or not np.any(A):
        return 0.0
    v = np.ones(n) / math.sqrt(n)
    if not np.any(A @ v):
        v = np.zeros(n)
        v[int(np.argmax(np.abs(A).sum(axis=0)))] = 1.0
    est = 0.0
    for _ in range(iters):
        w = A.T @ (A @ v)
        nw = float(np.linalg.norm(w))
        if nw == 0.0 or not math.isfinite(nw):
            break
        v = w / nw
        if abs(nw - est) <= tol * nw:
            est = nw
            break
        est = nw
    return math.sqrt(est)


@dataclass(frozen=True)
class SplitProblem:
    """g and r expose value/prox; g also carries its conjugate prox for CP."""

    g: object
    r: object
    A: np.ndarray
    lipschitz_g: Optional[float] = None
    operator_norm: Optional[float] = None
    reference_optimum: Optional[tuple] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        object.__setattr__(self, "A", A)
        if self.operator_norm is None:
            object.__setattr__(self, "operator_norm", operator_norm(A))

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    @property
    def psi_min(self) -> Optional[float]:
        return None if self.reference_optimum is None else float(self.reference_optimum[1])

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.g.value(self.A @ x)) + float(self.r.value(x))

    def lagrangian(self, x, z, y) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.g.value(z) + self.r.value(x) + np.vdot(y, self.A @ x - z))


def _check_psd(M: np.ndarray, name: str) -> None:
    if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, atol=1e-12, rtol=0):
        raise ConfigurationError(f"{name} must be symmetric")
    if M.size and np.linalg.eigvalsh(M).min() < -PSD_TOL * max(1.0, float(np.abs(M).max())):
        raise ConfigurationError(f"{name} must be positive semidefinite")


def _scalar_identity(M: np.ndarray) -> Optional[float]:
    """s if M == s I up to roundoff, else None."""
    if M.size == 0:
        return 0.0
    s = float(np.mean(np.diag(M)))
    scale = max(1.0, float(np.abs(M).max()))
    if np.abs(M - s * np.eye(M.shape[0])).max() <= 1e-12 * scale:
        return s
    return None


@dataclass(frozen=True)
class ADMMConfig:
    c: float
    M1: np.ndarray
    M2: np.ndarray
    inner_solver: Optional[Union[str, Callable]] = None

    def __post_init__(self):
        if self.c <= 0:
            raise ConfigurationError("penalty c must be positive")
        M1 = np.atleast_2d(np.asarray(self.M1, dtype=float))
        M2 = np.atleast_2d(np.asarray(self.M2, dtype=float))
        _check_psd(M1, "M1")
        _check_psd(M2, "M2")
        object.__setattr__(self, "M1", M1)
        object.__setattr__(self, "M2", M2)

    @staticmethod
    def classical(n: int, m: int, c: float, inner_solver=None) -> "ADMMConfig":
        return ADMMConfig(c, np.zeros((n, n)), np.zeros((m, m)), inner_solver)

    @staticmethod
    def linearized(A, c: float, tau: float) -> "ADMMConfig":
        """M1 = I/tau - c A^T A, M2 = 0; the x-update becomes a prox of r."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        m, n = A.shape
        return ADMMConfig(c, np.eye(n) / tau - c * (A.T @ A), np.zeros((m, m)))


@dataclass(frozen=True)
class CPConfig:
    tau: float
    c: float
    theta: float = 1.0

    def __post_init__(self):
        if self.tau <= 0 or self.c <= 0:
            raise ConfigurationError("tau and c must be positive")
        if not 0 <= self.theta <= 1:
            raise ConfigurationError("theta must lie in [0, 1]")

    def validate(self, norm_A: float) -> None:
        if self.theta == 1 and self.tau * self.c * norm_A**2 > 1 + 1e-12:
            raise ConfigurationError(
                f"tau * c * ||A||^2 = {self.tau * self.c * norm_A ** 2:.6g} exceeds 1"
            )


@dataclass
class SplitIterates:
    """Stored sequences; row k is iterate k."""

    x: np.ndarray
    y: np.ndarray
    z: Optional[np.ndarray] = None
    p: Optional[np.ndarray] = None


@dataclass
class ErgodicCertificate:
    """Averages of iterates 1..N and the constants of the ergodic bound."""

    xbar: np.ndarray
    zbar: np.ndarray
    ybar: np.ndarray
    N: int
    c: float
    A: np.ndarray = field(repr=False)
    M1: np.ndarray = field(repr=False)
    M2: np.ndarray = field(repr=False)
    x0: np.ndarray = field(repr=False)
    z0: np.ndarray = field(repr=False)
    y0: np.ndarray = field(repr=False)

    def C(self, x, z) -> float:
        """c||Ax - z0||^2 + ||x - x0||^2_M1 + ||z - z0||^2_M2."""
        dx = np.asarray(x, dtype=float) - self.x0
        dz = np.asarray(z, dtype=float) - self.z0
        r = self.A @ np.asarray(x, dtype=float) - self.z0
        return float(self.c * r @ r + dx @ self.M1 @ dx + dz @ self.M2 @ dz)

    def C1(self, x, z, L_g: float) -> float:
        """C(x, z) + (2/c)(L_g^2 + ||y0||^2)."""
        return self.C(x, z) + (2.0 / self.c) * (L_g**2 + float(self.y0 @ self.y0))

    def bound(self, x, z, L_g: float) -> float:
        return self.C1(x, z, L_g) / (2 * self.N) if self.N > 0 else math.inf

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "c": self.c,
            "xbar": self.xbar.tolist(),
            "zbar": self.zbar.tolist(),
            "ybar": self.ybar.tolist(),
        }


def ergodic_averages(iterates: SplitIterates, k: int):
    """Means of iterates 1..k of x, z and y."""
    if k < 1:
        raise ArgumentError("ergodic average needs k >= 1")
    return (
        iterates.x[1 : k + 1].mean(axis=0),
        iterates.z[1 : k + 1].mean(axis=0),
        iterates.y[1 : k + 1].mean(axis=0),
    )


def effective_lipschitz_g(sp: SplitProblem, points) -> float:
    """max ||grad g(A x)|| over the given points.

    For a g that is not globally Lipschitz this is the radius the ergodic
    bound actually needs at those points.
    """
    if sp.g.subgradient is None:
        raise UnsupportedError("g exposes no (sub)gradient")
    return max(float(np.linalg.norm(sp.g.subgradient(sp.A @ x))) for x in points)


def _default_init(sp: SplitProblem, init):
    m, n = sp.shape
    if init is None:
        return np.zeros(n), np.zeros(m), np.zeros(m)
    x0, z0, y0 = (np.array(v, dtype=float) for v in init)
    if x0.shape != (n,) or z0.shape != (m,) or y0.shape != (m,):
        raise ArgumentError("initial point has wrong dimensions")
    return x0, z0, y0


def _inner_prox_gradient(H, rhs, r, x_warm, tol=1e-10, cap=10_000):
    """argmin_x r(x) + x^T H x / 2 - rhs^T x by proximal gradient."""
    L = float(np.linalg.eigvalsh(H).max())
    if L <= 0:
        raise ConfigurationError("inner problem has no curvature")
    t = 1.0 / L
    x = x_warm.copy()
    for _ in range(cap):
        x_new = r.prox(x - t * (H @ x - rhs), t)
        if np.linalg.norm(x_new - x) <= tol:
            return x_new
        x = x_new
    return x


def _make_x_update(sp: SplitProblem, cfg: ADMMConfig):
    A, r, c = sp.A, sp.r, cfg.c
    H = c * (A.T @ A) + cfg.M1
    s = _scalar_identity(H)
    if s is not None and s > 0:
        if r.kind != "zero" and r.prox is None:
            raise ConfigurationError("x-update needs the prox of r")
        return lambda xk, zk, yk: np.asarray(
            r.prox((A.T @ (c * zk - yk) + cfg.M1 @ xk) / s, 1.0 / s), dtype=float
        )
    if r.kind == "zero":
        return lambda xk, zk, yk: np.linalg.lstsq(H, A.T @ (c * zk - yk) + cfg.M1 @ xk, rcond=None)[0]
    solver = cfg.inner_solver
    if solver is None:
        raise ConfigurationError(
            "x-update has no closed form; use the linearized M1 or pass inner_solver"
        )
    if solver == "bpgm":
        return lambda xk, zk, yk: _inner_prox_gradient(H, A.T @ (c * zk - yk) + cfg.M1 @ xk, r, xk)
    if callable(solver):
        return lambda xk, zk, yk: np.asarray(
            solver(H, A.T @ (c * zk - yk) + cfg.M1 @ xk, r, xk), dtype=float
        )
    raise ConfigurationError(f"unknown inner solver {solver!r}")


def adpmm_run(sp: SplitProblem, cfg: ADMMConfig, init=None, steps: int = 100):
    """Alternating direction proximal method of multipliers.

    Returns (iterates, certificate, trace); the certificate averages
    iterates 1..N and is None when ``steps`` is 0.
    """
    m, n = sp.shape
    if cfg.M1.shape != (n, n) or cfg.M2.shape != (m, m):
        raise ConfigurationError("M1 / M2 dimensions do not match A")
    x_update = _make_x_update(sp, cfg)
    mz = _scalar_identity(cfg.M2)
    if mz is None:
        raise ConfigurationError("z-update needs M2 = m I")
    if sp.g.prox is None:
        raise ConfigurationError("z-update needs the prox of g")
    c, A = cfg.c, sp.A
    x, z, y = _default_init(sp, init)
    xs, zs, ys = [x], [z], [y]
    counter = OracleCounter()
    trace = SolverTrace("adpmm", {"c": c})
    ref = sp.psi_min
    psi = sp.objective(x)
    trace.record(0, psi, None if ref is None else psi - ref, c, counter)
    for k in range(steps):
        x = x_update(x, z, y)
        Ax = A @ x
        z = np.asarray(sp.g.prox((c * (Ax + y / c) + mz * z) / (c + mz), 1.0 / (c + mz)), dtype=float)
        y = y + c * (Ax - z)
        counter.prox += 2
        xs.append(x)
        zs.append(z)
        ys.append(y)
        psi = sp.objective(x)
        trace.record(k + 1, psi, None if ref is None else psi - ref, c, counter)
        trace.add("residual", float(np.linalg.norm(Ax - z)))
    it = SplitIterates(x=np.array(xs), y=np.array(ys), z=np.array(zs))
    cert = None
    if steps > 0:
        xb, zb, yb = ergodic_averages(it, steps)
        cert = ErgodicCertificate(
            xbar=xb, zbar=zb, ybar=yb, N=steps, c=c, A=A, M1=cfg.M1, M2=cfg.M2,
            x0=it.x[0], z0=it.z[0], y0=it.y[0],
        )
    return it, cert, trace


def cp_run(sp: SplitProblem, cfg: CPConfig, init=None, steps: int = 100):
    """Chambolle-Pock primal-dual iteration with extrapolation theta.

    ``init`` is (x0, y0) or (x0, y0, p0); p0 defaults to y0.
    """
    if sp.g.conjugate_prox is None:
        raise UnsupportedError("g exposes no conjugate prox")
    if sp.r.prox is None:
        raise UnsupportedError("r exposes no prox")
    cfg.validate(sp.operator_norm)
    m, n = sp.shape
    if init is None:
        x, y = np.zeros(n), np.zeros(m)
        p = y.copy()
    else:
        x = np.array(init[0], dtype=float)
        y = np.array(init[1], dtype=float)
        p = np.array(init[2], dtype=float) if len(init) > 2 else y.copy()
    A, tau, c, theta = sp.A, cfg.tau, cfg.c, cfg.theta
    xs, ys, ps = [x], [y], [p]
    counter = OracleCounter()
    trace = SolverTrace("cp", {"tau": tau, "c": c, "theta": theta})
    ref = sp.psi_min
    psi = sp.objective(x)
    trace.record(0, psi, None if ref is None else psi - ref, tau, counter)
    for k in range(steps):
        x = np.asarray(sp.r.prox(x - tau * (A.T @ p), tau), dtype=float)
        y_new = np.asarray(sp.g.conjugate_prox(y + c * (A @ x), c), dtype=float)
        p = y_new + theta * (y_new - y)
        y = y_new
        counter.prox += 2
        xs.append(x)
        ys.append(y)
        ps.append(p)
        psi = sp.objective(x)
        trace.record(k + 1, psi, None if ref is None else psi - ref, tau, counter)
    return SplitIterates(x=np.array(xs), y=np.array(ys), p=np.array(ps)), trace


def cp_adpmm_equivalence(sp: SplitProblem, tau: float, c: float, init=None, steps: int = 100) -> float:
    """max_k ||x_CP - x_ADPMM|| + ||y_CP - y_ADPMM|| under the matched mapping."""
    if tau * c * sp.operator_norm**2 > 1 + 1e-12:
        raise ConfigurationError("I/tau - c A^T A is not positive semidefinite")
    x0, z0, y0 = _default_init(sp, init)
    p0 = y0 + c * (sp.A @ x0 - z0)
    adm, _, _ = adpmm_run(sp, ADMMConfig.linearized(sp.A, c, tau), (x0, z0, y0), steps)
    cp, _ = cp_run(sp, CPConfig(tau, c, 1.0), (x0, y0, p0), steps)
    dev = np.linalg.norm(cp.x - adm.x, axis=1) + np.linalg.norm(cp.y - adm.y, axis=1)
    return float(dev.max())
