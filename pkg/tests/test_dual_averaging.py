import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import minimize

from foms.errors import ArgumentError, UnsupportedError
from foms.geometry import entropy_simplex, euclidean
from foms.dual_averaging import (
    DASchedule,
    da_bound,
    da_md_equivalence_check,
    da_run,
    mirror_map,
    setup_constants,
)
from foms.harness.verify import max_simplex_problem
from foms.problem import CompositeProblem, SmoothPart, simplex, whole_space, zero


def _linear(c):
    c = np.asarray(c, dtype=float)
    return CompositeProblem(SmoothPart.linear(c), zero(), simplex(c.size), np.full(c.size, 1.0 / c.size))


class TestMirrorMap:
    def test_zero_dual_is_uniform(self):
        x = mirror_map(entropy_simplex(4), zero(), 1.0, 0.0, np.zeros(4))
        assert np.allclose(x, 0.25, atol=1e-15)

    def test_two_point(self):
        # oracle: numeric constrained maximisation, frozen
        y = np.array([math.log(2.0), 0.0])

        def neg(t):
            x = np.array([t[0], 1 - t[0]])
            return -(y @ x - float(np.sum(x * np.log(x))))

        t = minimize(neg, [0.5], bounds=[(1e-9, 1 - 1e-9)], tol=1e-14).x[0]
        assert abs(t - 2 / 3) <= 1e-6
        x = mirror_map(entropy_simplex(2), zero(), 1.0, 0.0, y)
        assert np.allclose(x, [2 / 3, 1 / 3], atol=1e-14)

    @given(st.floats(-50, 50), st.floats(0.1, 10))
    def test_constant_shift(self, c, beta):
        x = mirror_map(entropy_simplex(5), zero(), beta, 0.0, np.full(5, c))
        assert np.allclose(x, 0.2, atol=1e-14)

    def test_euclidean_projects(self):
        X = simplex(3)
        y = np.array([2.0, 0.2, -1.0])
        assert np.allclose(mirror_map(euclidean(X), zero(), 2.0, 0.0, y, X), X.projection(y / 2))

    def test_needs_positive_beta(self):
        with pytest.raises(ArgumentError):
            mirror_map(entropy_simplex(3), zero(), 0.0, 0.0, np.zeros(3))

    def test_unsupported_pair(self):
        from foms.problem import indicator, l2_ball

        with pytest.raises(UnsupportedError):
            mirror_map(entropy_simplex(3), indicator(l2_ball(3, 1.0)), 1.0, 1.0, np.zeros(3))


class TestDARun:
    @pytest.mark.parametrize("N", [100, 1000, 10_000])
    def test_bound_max_coordinate(self, N):
        n = 10
        p = max_simplex_problem(n)
        h = entropy_simplex(n)
        _, tr = da_run(p, h, DASchedule.constant_beta_sqrt(1.0), N)
        gap = float(tr.column("gap")[N])
        assert gap <= da_bound(1.0, math.log(n), 0.0, 1.0, 1.0, N)

    def test_linear_reaches_vertex(self):
        c = np.random.default_rng(4).standard_normal(6)
        p = _linear(c)
        x, _ = da_run(p, entropy_simplex(6), DASchedule.constant_beta_sqrt(1.0), 10_000)
        assert p.objective(x) - c.min() <= 0.05

    def test_constant_returns_q0(self):
        f = SmoothPart(value=lambda x: 2.0, subgradient=lambda x: np.zeros_like(x))
        p = CompositeProblem(f, zero(), simplex(4), np.full(4, 0.25))
        h = entropy_simplex(4)
        q0 = mirror_map(h, zero(), 1.0, 0.0, np.zeros(4))
        for N in (0, 1, 25):
            x, _ = da_run(p, h, DASchedule.constant_beta_sqrt(1.0), N)
            assert np.array_equal(x, q0)

    def test_unbounded_rejected(self):
        p = CompositeProblem(SmoothPart.linear([1.0, 1.0]), zero(), whole_space(2), np.zeros(2))
        with pytest.raises(UnsupportedError):
            da_run(p, euclidean(), DASchedule.constant_beta_sqrt(), 5)

    def test_dual_accumulation_and_convexity(self):
        c = np.array([0.5, -1.0, 0.25, 2.0])
        p = _linear(c)
        states = []
        sched = DASchedule.constant_beta_sqrt(1.0)
        da_run(p, entropy_simplex(4), sched, 40, callback=states.append)
        lam = [sched.lam(k) for k in range(41)]
        for s0, s1 in zip(states, states[1:]):
            assert np.array_equal(s1.y, s0.y - lam[s0.k] * c)
            assert s1.gamma == pytest.approx(s0.gamma + lam[s0.k], abs=1e-14)
        xs = np.array([s.x for s in states])
        for s in states:
            w = np.array(lam[: s.k + 1]) / s.Lambda
            assert abs(w.sum() - 1) <= 1e-14
            assert np.allclose(w @ xs[: s.k + 1], s.xbar, atol=1e-14)
            assert simplex(4).membership(s.xbar)

    def test_fixed_horizon_schedule(self):
        s = DASchedule.fixed_horizon(99, 2.0, math.log(10))
        assert s.lam(0) == s.lam(50) == pytest.approx(math.sqrt(2 * math.log(10)) / (10 * 2.0))


class TestEquivalence:
    def test_linear(self):
        c = np.random.default_rng(1).standard_normal(8)
        assert da_md_equivalence_check(_linear(c), entropy_simplex(8), 100) <= 1e-10

    def test_quadratic(self):
        b = np.random.default_rng(2).standard_normal(8)
        p = CompositeProblem(SmoothPart.squared_distance(b), zero(), simplex(8), np.full(8, 1 / 8))
        assert da_md_equivalence_check(p, entropy_simplex(8), 100) <= 1e-10

    def test_zero_steps(self):
        assert da_md_equivalence_check(_linear([1.0, 2.0]), entropy_simplex(2), 0) == 0.0

    @settings(max_examples=20)
    @given(arrays(float, 5, elements=st.floats(-3, 3)))
    def test_property_linear(self, c):
        assert da_md_equivalence_check(_linear(c), entropy_simplex(5), 30) <= 1e-10


def test_l1_setup_never_worse():
    c = np.random.default_rng(9).standard_normal(10_000)
    ent, euc = setup_constants(c)
    assert ent <= euc

