import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from foms.errors import ConfigurationError, UnsupportedError
from foms.geometry import soft_threshold
from foms.harness.instances import InstanceSpec, generate_problem
from foms.problem import NonsmoothPart, half_squared_distance, l1, zero
from foms.splitting import (
    ADMMConfig,
    CPConfig,
    ErgodicCertificate,
    SplitProblem,
    adpmm_run,
    cp_adpmm_equivalence,
    cp_run,
    effective_lipschitz_g,
    ergodic_averages,
    operator_norm,
)


def _lasso_split(seed=0, n=20, m=10, lam=0.1):
    return generate_problem(InstanceSpec("lasso", n, m, lam, seed)).split


def _identity_lasso(b, lam):
    b = np.asarray(b, dtype=float)
    return SplitProblem(half_squared_distance(b), l1(lam), np.eye(b.size))


class TestOperatorNorm:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_svd(self, seed):
        A = np.random.default_rng(seed).standard_normal((7, 11))
        assert operator_norm(A) == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], rel=1e-10)

    def test_zero_matrix(self):
        assert operator_norm(np.zeros((3, 2))) == 0.0

    @settings(max_examples=40)
    @given(arrays(float, (4, 3), elements=st.floats(-5, 5)), arrays(float, 3, elements=st.floats(-5, 5)))
    def test_bounds_image(self, A, x):
        assert np.linalg.norm(A @ x) <= operator_norm(A) * np.linalg.norm(x) + 1e-9


class TestADPMM:
    def test_identity_design_reaches_soft_threshold(self):
        b = np.array([1.5, -0.05, 0.4, -2.0, 0.0])
        lam = 0.3
        sp = _identity_lasso(b, lam)
        it, _, _ = adpmm_run(sp, ADMMConfig.classical(5, 5, 1.0), steps=200)
        assert np.max(np.abs(it.x[-1] - soft_threshold(b, lam))) <= 1e-8

    def test_scalar_recursion(self):
        b, lam, c = 0.9, 0.25, 1.7
        sp = _identity_lasso([b], lam)
        it, _, _ = adpmm_run(sp, ADMMConfig.classical(1, 1, c), steps=30)
        x = z = y = 0.0
        for k in range(30):
            x = np.sign(z - y / c) * max(abs(z - y / c) - lam / c, 0.0)
            z = (b + c * x + y) / (1 + c)
            y = y + c * (x - z)
            assert it.x[k + 1, 0] == pytest.approx(x, abs=1e-14)
            assert it.z[k + 1, 0] == pytest.approx(z, abs=1e-14)
            assert it.y[k + 1, 0] == pytest.approx(y, abs=1e-14)

    def test_zero_steps(self):
        sp = _lasso_split()
        init = (np.ones(20), np.full(10, 0.5), np.full(10, -0.5))
        it, cert, tr = adpmm_run(sp, ADMMConfig.linearized(sp.A, 1.0, 0.5 / sp.operator_norm**2), init, 0)
        assert cert is None
        assert np.array_equal(it.x[-1], init[0]) and np.array_equal(it.y[-1], init[2])
        assert len(tr) == 1

    def test_multiplier_identity_exact(self):
        sp = _lasso_split(1)
        c = 2.0
        it, _, _ = adpmm_run(sp, ADMMConfig.linearized(sp.A, c, 0.9 / (c * sp.operator_norm**2)), steps=100)
        for k in range(100):
            assert np.array_equal(it.y[k + 1], it.y[k] + c * (sp.A @ it.x[k + 1] - it.z[k + 1]))

    def test_fenchel_gap_nonnegative(self):
        sp = _lasso_split(2)
        it, _, _ = adpmm_run(sp, ADMMConfig.linearized(sp.A, 1.0, 0.9 / sp.operator_norm**2), steps=200)
        g = sp.g
        for z, y in zip(it.z, it.y):
            assert g.value(z) + g.conjugate_value(y) - y @ z >= -1e-10

    def test_residual_vanishes(self):
        sp = _lasso_split(3)
        _, _, tr = adpmm_run(sp, ADMMConfig.linearized(sp.A, 1.0, 0.9 / sp.operator_norm**2), steps=3000)
        assert tr.series["residual"][-1] <= 1e-6

    @pytest.mark.parametrize("seed", range(3))
    def test_ergodic_objective_bound(self, seed):
        sp = _lasso_split(seed)
        c = 1.0
        cfg = ADMMConfig.linearized(sp.A, c, 0.9 / (c * sp.operator_norm**2))
        it, _, _ = adpmm_run(sp, cfg, steps=300)
        avgs = [ergodic_averages(it, k) for k in range(1, 301)]
        L_g = effective_lipschitz_g(sp, [a[0] for a in avgs])
        xs = sp.reference_optimum[0]
        for k, (xb, zb, yb) in enumerate(avgs, start=1):
            cert = ErgodicCertificate(xb, zb, yb, k, c, sp.A, cfg.M1, cfg.M2, it.x[0], it.z[0], it.y[0])
            assert sp.objective(xb) - sp.psi_min <= cert.bound(xs, sp.A @ xs, L_g) + 1e-12

    def test_ergodic_saddle_inequality_sampled(self):
        sp = _lasso_split(4)
        c = 1.0
        cfg = ADMMConfig.linearized(sp.A, c, 0.9 / sp.operator_norm**2)
        it, cert, _ = adpmm_run(sp, cfg, steps=150)
        gen = np.random.default_rng(0)
        for _ in range(300):
            x, z, y = gen.standard_normal(20), gen.standard_normal(10), 3 * gen.standard_normal(10)
            lhs = sp.lagrangian(cert.xbar, cert.zbar, y) - sp.lagrangian(x, z, cert.ybar)
            dy = y - it.y[0]
            rhs = (cert.C(x, z) + dy @ dy / c) / (2 * cert.N)
            assert lhs <= rhs + 1e-10

    def test_certificate_arithmetic(self):
        A = np.array([[1.0, 2.0]])
        cert = ErgodicCertificate(np.zeros(2), np.zeros(1), np.zeros(1), 4, 2.0, A, np.eye(2), 3 * np.eye(1),
                                  np.array([1.0, 0.0]), np.array([1.0]), np.array([2.0]))
        # hand computation: 2*(3-1)^2 + (0^2+1^2) + 3*(2-1)^2 = 12; + (2/2)(5 + 4) = 21
        x, z = np.array([1.0, 1.0]), np.array([2.0])
        assert cert.C(x, z) == 12.0
        assert cert.C1(x, z, np.sqrt(5.0)) == pytest.approx(21.0, abs=1e-13)
        assert cert.bound(x, z, np.sqrt(5.0)) == pytest.approx(21.0 / 8, abs=1e-13)

    def test_classical_general_design_needs_inner_solver(self):
        sp = _lasso_split()
        with pytest.raises(ConfigurationError):
            adpmm_run(sp, ADMMConfig.classical(20, 10, 1.0), steps=1)

    def test_inner_solver(self):
        sp = _lasso_split(5)
        it, _, _ = adpmm_run(sp, ADMMConfig.classical(20, 10, 1.0, inner_solver="bpgm"), steps=300)
        assert sp.objective(it.x[-1]) - sp.psi_min <= 1e-6

    def test_non_psd_rejected(self):
        with pytest.raises(ConfigurationError):
            ADMMConfig(1.0, -np.eye(2), np.zeros((1, 1)))
        sp = _lasso_split()
        with pytest.raises(ConfigurationError):
            ADMMConfig.linearized(sp.A, 1.0, 2.0 / sp.operator_norm**2)


class TestChambollePock:
    def test_decoupled_when_design_is_zero(self):
        b = np.array([0.5, -1.0])
        g = half_squared_distance(b)
        r = l1(0.2)
        sp = SplitProblem(g, r, np.zeros((2, 3)))
        x0, y0 = np.array([1.0, -0.1, 0.3]), np.array([0.7, 0.2])
        it, _ = cp_run(sp, CPConfig(0.4, 0.6), (x0, y0), 5)
        x, y = x0, y0
        for k in range(5):
            x, y = r.prox(x, 0.4), g.conjugate_prox(y, 0.6)
            assert np.array_equal(it.x[k + 1], x)
            assert np.array_equal(it.y[k + 1], y)

    @pytest.mark.parametrize("seed", range(6))
    def test_lasso_converges(self, seed):
        sp = _lasso_split(seed, m=40)
        c = 1.0
        it, _ = cp_run(sp, CPConfig(0.9 / (c * sp.operator_norm**2), c, 1.0), steps=5000)
        assert sp.objective(it.x[-1]) - sp.psi_min <= 1e-6

    def test_arrow_hurwicz_bounded(self):
        sp = _lasso_split(6)
        it, _ = cp_run(sp, CPConfig(0.9 / sp.operator_norm**2, 1.0, 0.0), steps=2000)
        assert np.all(np.isfinite(it.x)) and np.abs(it.x).max() <= 1e3 and np.abs(it.y).max() <= 1e3

    def test_extrapolation_identity(self):
        sp = _lasso_split(7)
        it, _ = cp_run(sp, CPConfig(0.5 / sp.operator_norm**2, 1.0, 0.7), steps=20)
        for k in range(20):
            assert np.array_equal(it.p[k + 1], it.y[k + 1] + 0.7 * (it.y[k + 1] - it.y[k]))

    def test_missing_conjugate_prox(self):
        g = NonsmoothPart(value=lambda z: 0.0, prox=lambda z, t: z)
        with pytest.raises(UnsupportedError):
            cp_run(SplitProblem(g, zero(), np.eye(2)), CPConfig(0.5, 1.0), steps=1)

    def test_step_condition(self):
        sp = _lasso_split()
        with pytest.raises(ConfigurationError):
            cp_run(sp, CPConfig(1.5 / sp.operator_norm**2, 1.0), steps=1)
        with pytest.raises(ConfigurationError):
            CPConfig(1.0, 1.0, theta=1.5)


class TestEquivalence:
    @given(st.floats(0.1, 3.0), st.floats(0.05, 1.0))
    @settings(max_examples=30)
    def test_one_dimensional(self, c, frac):
        sp = SplitProblem(half_squared_distance([0.8]), l1(0.3), np.array([[1.0]]))
        assert cp_adpmm_equivalence(sp, frac / c, c, steps=50) <= 1e-12

    @pytest.mark.parametrize("seed", range(3))
    def test_lasso(self, seed):
        sp = _lasso_split(seed)
        c = 1.3
        assert cp_adpmm_equivalence(sp, 0.5 / (c * sp.operator_norm**2), c, steps=200) <= 1e-9

    def test_zero_steps(self):
        sp = _lasso_split()
        assert cp_adpmm_equivalence(sp, 0.5 / sp.operator_norm**2, 1.0, steps=0) == 0.0

    def test_invalid_step(self):
        sp = _lasso_split()
        with pytest.raises(ConfigurationError):
            cp_adpmm_equivalence(sp, 2.0 / sp.operator_norm**2, 1.0, steps=5)


class TestProximalMatrixVariants:
    """Only M1 = I/tau - c A^T A reproduces the primal-dual iterates."""

    def _setup(self):
        gen = np.random.default_rng(11)
        A = gen.standard_normal((6, 9))
        A *= 0.8 / np.linalg.svd(A, compute_uv=False)[0]
        sp = SplitProblem(half_squared_distance(gen.standard_normal(6)), l1(0.1), A)
        c = 1.0
        tau = 0.5 / (c * sp.operator_norm**2)
        cp, _ = cp_run(sp, CPConfig(tau, c, 1.0), steps=50)
        return sp, c, tau, cp

    def _deviation(self, sp, c, M1, cp):
        cfg = ADMMConfig(c, M1, np.zeros((6, 6)))
        it, _, _ = adpmm_run(sp, cfg, steps=50)
        return float(np.max(np.linalg.norm(it.x - cp.x, axis=1)))

    def test_inverse_tau_matches(self):
        sp, c, tau, cp = self._setup()
        M1 = np.eye(9) / tau - c * sp.A.T @ sp.A
        assert self._deviation(sp, c, M1, cp) <= 1e-12

    def test_inverse_penalty_variant_differs(self):
        sp, c, tau, cp = self._setup()
        M1 = np.eye(9) / c - c * sp.A.T @ sp.A
        assert self._deviation(sp, c, M1, cp) >= 1e-3

    def test_tau_variant_differs(self):
        sp, c, tau, cp = self._setup()
        M1 = tau * np.eye(9) - c * sp.A.T @ sp.A
        assert self._deviation(sp, c, M1, cp) >= 1e-3
