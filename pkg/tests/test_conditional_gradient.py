import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from foms.conditional_gradient import (
    AtomState,
    CGStepRule,
    GeneralizedLinearOracle,
    LinearOracle,
    SCGParams,
    awcg_run,
    cndg_inner,
    gcg_run,
    generalized_linear_oracle,
    golden_section,
    linear_oracle,
    scg_run,
)
from foms.errors import ConfigurationError, InternalFault, UnsupportedError
from foms.geometry import entropy_simplex, estimate_curvature, project_simplex
from foms.harness.instances import InstanceSpec, generate_problem
from foms.harness.rates import count_violations
from foms.problem import (
    CompositeProblem,
    SmoothPart,
    box,
    l1,
    l1_ball,
    l2_ball,
    simplex,
    spectrahedron,
    whole_space,
    zero,
)

vec3 = arrays(float, 3, elements=st.floats(-5, 5))


def _qp(n, seed, interior=False):
    gen = np.random.default_rng(seed)
    b = gen.dirichlet(np.ones(n)) if interior else gen.standard_normal(n)
    X = simplex(n)
    x_star = project_simplex(b)
    f = SmoothPart.squared_distance(b)
    return CompositeProblem(f, zero(), X, np.full(n, 1.0 / n), (x_star, f.value(x_star)))


class TestLinearOracle:
    def test_simplex(self):
        assert np.array_equal(linear_oracle(simplex(3), [1.0, 0.0, -2.0]), [0, 0, 1])

    def test_l1_ball(self):
        y = np.array([1.0, -3.0])
        verts = [np.array(v, dtype=float) for v in ([2, 0], [-2, 0], [0, 2], [0, -2])]
        best = min(verts, key=lambda v: y @ v)
        s = linear_oracle(l1_ball(2, 2.0), y)
        assert np.array_equal(s, best) and np.array_equal(s, [0.0, 2.0])

    def test_spectrahedron(self):
        Y = np.diag([1.0, -1.0])
        w, V = np.linalg.eigh(Y)
        u = V[:, 0]
        S = linear_oracle(spectrahedron(2), Y)
        assert np.allclose(S, np.outer(u, u), atol=1e-8)
        assert np.allclose(S, [[0, 0], [0, 1]], atol=1e-8)

    def test_spectrahedron_psd_dual_gives_zero(self):
        assert np.array_equal(linear_oracle(spectrahedron(2), np.eye(2)), np.zeros((2, 2)))

    def test_ties_lowest_index(self):
        assert np.array_equal(linear_oracle(simplex(3), [0.0, -1.0, -1.0]), [0, 1, 0])

    def test_unbounded(self):
        with pytest.raises(UnsupportedError):
            linear_oracle(whole_space(2), [1.0, 0.0])

    @pytest.mark.parametrize(
        "X", [simplex(3), l1_ball(3, 1.5), box(-np.ones(3), 2 * np.ones(3)), l2_ball(3, 2.0)], ids=lambda X: X.kind
    )
    @settings(max_examples=30)
    @given(y=vec3)
    def test_optimal_against_samples(self, X, y):
        s = linear_oracle(X, y)
        assert X.membership(s)
        gen = np.random.default_rng(0)
        U = [X.projection(4 * gen.standard_normal(3)) for _ in range(1000)]
        assert y @ s <= min(y @ u for u in U) + 1e-10

    def test_spectrahedron_against_samples(self):
        gen = np.random.default_rng(1)
        S = spectrahedron(4)
        for _ in range(10):
            B = gen.standard_normal((4, 4))
            Y = B + B.T
            P = linear_oracle(S, Y)
            best = min(float(np.sum(Y * S.projection(M + M.T))) for M in gen.standard_normal((200, 4, 4)))
            assert float(np.sum(Y * P)) <= best + 1e-8
            assert float(np.sum(Y * P)) == pytest.approx(min(np.linalg.eigvalsh(Y).min(), 0.0), abs=1e-8)


class TestGeneralizedOracle:
    def test_reduces_to_lo(self):
        y = np.array([0.3, -0.7, 0.1])
        assert np.array_equal(generalized_linear_oracle(simplex(3), zero(), y), linear_oracle(simplex(3), y))

    def test_box_l1(self):
        X = box(-np.ones(3), np.ones(3))
        y = np.array([2.0, 0.5, -3.0])
        grid = np.linspace(-1, 1, 2001)
        brute = np.array([grid[np.argmin(yi * grid + np.abs(grid))] for yi in y])
        x = generalized_linear_oracle(X, l1(1.0), y)
        assert np.array_equal(x, [-1.0, 0.0, 1.0])
        assert np.allclose(x, brute, atol=1e-12)

    def test_zero_dual(self):
        assert np.array_equal(generalized_linear_oracle(box(-np.ones(2), np.ones(2)), l1(0.5), np.zeros(2)), np.zeros(2))

    @settings(max_examples=40)
    @given(y=vec3, lam=st.floats(0.0, 3.0))
    def test_optimal_against_samples(self, y, lam):
        X = box(-np.ones(3), 2 * np.ones(3))
        r = l1(lam)
        x = generalized_linear_oracle(X, r, y)
        gen = np.random.default_rng(2)
        U = gen.uniform(-1, 2, (1000, 3))
        vals = U @ y + lam * np.abs(U).sum(axis=1)
        assert y @ x + r.value(x) <= vals.min() + 1e-10

    def test_unsupported(self):
        with pytest.raises(UnsupportedError):
            generalized_linear_oracle(l2_ball(2, 1.0), l1(1.0), np.ones(2))


class TestGCG:
    def test_linear_one_step_adaptive(self):
        c = np.array([0.4, -0.2, 0.9])
        f = SmoothPart(lambda x: float(c @ x), lambda x: c, lipschitz_grad=0.0)
        p = CompositeProblem(f, zero(), simplex(3), np.full(3, 1 / 3), (np.array([0, 1.0, 0]), -0.2))
        x, tr = gcg_run(p, LinearOracle(p.X), CGStepRule("adaptive"), steps=1)
        assert tr.column("step")[1] == 1.0
        assert np.array_equal(x, [0.0, 1.0, 0.0])

    @pytest.mark.parametrize("rule", ["standard", "exact-line-search", "adaptive"])
    @pytest.mark.parametrize("seed", range(3))
    def test_rate_bound(self, rule, seed):
        p = _qp(10, seed)
        L, om = 1.0, 2.0
        _, tr = gcg_run(p, LinearOracle(p.X), CGStepRule(rule, L=L), steps=10_000)
        s0 = p.objective(p.x0) - p.psi_min
        assert count_violations(tr, lambda k: 2 * max(s0, L * om) / k, slack=1e-12) == 0

    @pytest.mark.parametrize("rule", ["exact-line-search", "adaptive", "backtracking"])
    def test_descent(self, rule):
        inst = generate_problem(InstanceSpec("simplex-qp", 15, 8, 0.0, 4))
        p = inst.problem
        _, tr = gcg_run(p, LinearOracle(p.X), CGStepRule(rule, L=inst.meta["L_f"]), steps=500)
        assert np.all(np.diff(tr.column("objective")) <= 1e-12)

    def test_lasso_over_l1_ball_monotone(self):
        gen = np.random.default_rng(7)
        A, b = gen.standard_normal((12, 8)), gen.standard_normal(12)
        f = SmoothPart.least_squares(A, b)
        X = l1_ball(8, 1.0)
        p = CompositeProblem(f, zero(), X, np.zeros(8))
        _, tr = gcg_run(p, GeneralizedLinearOracle(X, zero()), CGStepRule("adaptive"), steps=300)
        assert np.all(np.diff(tr.column("objective")) <= 1e-12)

    def test_composite_box_l1(self):
        gen = np.random.default_rng(8)
        b = 2 * gen.standard_normal(6)
        X = box(-np.ones(6), np.ones(6))
        p = CompositeProblem(SmoothPart.squared_distance(b), l1(0.5), X, np.zeros(6))
        x, tr = gcg_run(p, GeneralizedLinearOracle(X, p.r), CGStepRule("exact-line-search", L=1.0), steps=2000)
        expected = np.clip(np.sign(b) * np.maximum(np.abs(b) - 0.5, 0), -1, 1)
        assert np.max(np.abs(x - expected)) <= 1e-6

    def test_merit_upper_bounds_gap(self):
        p = _qp(8, 3)
        _, tr = gcg_run(p, LinearOracle(p.X), CGStepRule("standard"), steps=200)
        merit = np.array(tr.series["merit"])
        assert np.all(merit >= tr.column("gap")[:-1] - 1e-12)

    def test_relative_smoothness_curvature(self):
        n = 6
        h = entropy_simplex(n)
        c = np.random.default_rng(5).standard_normal(n)
        # f = <c, x> + sum x log x is 1-smooth relative to the entropy
        f = SmoothPart(
            lambda x: float(c @ x + np.sum(x * np.log(np.maximum(x, 1e-300)))),
            lambda x: c + np.log(np.maximum(x, 1e-300)) + 1.0,
        )
        p = CompositeProblem(f, zero(), simplex(n), np.full(n, 1.0 / n))
        curv = estimate_curvature(h, n, samples=4000)
        assert math.isfinite(curv) and curv > 0
        # keep the iterate interior: mix the oracle answer toward the centre
        lo = lambda y: 0.5 * linear_oracle(p.X, y) + 0.5 / n
        _, tr = gcg_run(p, lo, CGStepRule("adaptive", L=1.0, curvature=curv), steps=300)
        assert np.all(np.diff(tr.column("objective")) <= 1e-12)

    def test_requires_bounded_set(self):
        p = CompositeProblem(SmoothPart.squared_distance(np.zeros(2)), zero(), whole_space(2), np.zeros(2))
        with pytest.raises(UnsupportedError):
            gcg_run(p, None, CGStepRule("standard"), steps=1)

    def test_unknown_rule(self):
        with pytest.raises(ConfigurationError):
            CGStepRule("diminishing")

    def test_adaptive_needs_lipschitz(self):
        f = SmoothPart(lambda x: 0.0, lambda x: np.zeros_like(x))
        p = CompositeProblem(f, zero(), simplex(2), np.array([0.5, 0.5]))
        with pytest.raises(ConfigurationError):
            gcg_run(p, LinearOracle(p.X), CGStepRule("adaptive"), steps=1)


class TestGoldenSection:
    @given(st.floats(-1, 2))
    def test_quadratic(self, t0):
        t = golden_section(lambda t: (t - t0) ** 2, 0.0, 1.0)
        assert abs(t - min(max(t0, 0.0), 1.0)) <= 1e-6


class TestAwayAndPairwise:
    def test_start_at_optimal_vertex(self):
        c = np.array([1.0, -2.0, 0.5])
        f = SmoothPart(lambda x: float(c @ x), lambda x: c)
        p = CompositeProblem(f, zero(), simplex(3), np.array([0.0, 1.0, 0.0]), (np.array([0.0, 1.0, 0.0]), -2.0))
        x, state, tr = awcg_run(p, LinearOracle(p.X), AtomState.from_vertex(p.x0), steps=10)
        assert len(tr) == 1 and tr.last.gap == 0.0

    @pytest.mark.parametrize("variant", ["away", "pairwise"])
    def test_interior_target_fast(self, variant):
        p = _qp(5, 0, interior=True)
        start = AtomState.from_vertex(np.eye(5)[0])
        _, _, tr = awcg_run(p, LinearOracle(p.X), start, steps=500, variant=variant)
        gaps = tr.column("gap")
        hit = int(np.argmax(gaps <= 1e-10))
        assert gaps[hit] <= 1e-10
        _, trg = gcg_run(p, LinearOracle(p.X), CGStepRule("exact-line-search"), x0=np.eye(5)[0], steps=hit)
        assert trg.last.gap > 1e-10

    @pytest.mark.parametrize("variant", ["away", "pairwise"])
    def test_representation_integrity(self, variant):
        inst = generate_problem(InstanceSpec("simplex-qp", 12, 8, 0.0, 2))
        p = inst.problem
        state = AtomState.from_vertex(np.eye(12)[3])
        lo = LinearOracle(p.X)
        for _ in range(150):
            x, state, _ = awcg_run(p, lo, state, steps=1, variant=variant)
            assert np.all(state.weights > 0)
            assert abs(state.weights.sum() - 1) <= 1e-12
            assert np.max(np.abs(state.iterate() - x)) <= 1e-10

    @pytest.mark.parametrize("variant", ["away", "pairwise"])
    def test_linear_rate_on_strongly_convex(self, variant):
        p = _qp(20, 1)
        _, _, tr = awcg_run(p, LinearOracle(p.X), AtomState.from_vertex(np.eye(20)[0]), steps=300, variant=variant)
        gaps = tr.column("gap")
        k = np.arange(len(gaps))
        mask = gaps > 1e-13
        slope = np.polyfit(k[mask], np.log(gaps[mask]), 1)[0]
        assert slope < 0
        assert gaps[-1] <= 1e-10

    def test_weight_drift_detected(self):
        bad = AtomState([np.eye(2)[0], np.eye(2)[1]], np.array([0.5, 0.6]))
        with pytest.raises(InternalFault):
            bad.check()

    def test_unknown_variant(self):
        p = _qp(3, 0)
        with pytest.raises(ConfigurationError):
            awcg_run(p, LinearOracle(p.X), AtomState.from_vertex(np.eye(3)[0]), variant="fully-corrective")


class TestCndG:
    def _gap(self, g, u, beta, ut, X):
        grad = g + beta * (ut - u)
        return float(grad @ (ut - linear_oracle(X, grad)))

    def test_already_optimal(self):
        X = simplex(3)
        g = np.array([1.0, 2.0, 3.0])
        u = np.array([1.0, 0.0, 0.0])
        from foms.trace import OracleCounter

        cnt = OracleCounter()
        out = cndg_inner(g, u, 1.0, 1e-6, LinearOracle(X), 2.0, cnt)
        assert np.array_equal(out, u) and cnt.lo == 1

    def test_quadratic_subproblem(self):
        X = simplex(5)
        gen = np.random.default_rng(3)
        g, u = gen.standard_normal(5), gen.dirichlet(np.ones(5))
        from foms.trace import OracleCounter

        cnt = OracleCounter()
        out = cndg_inner(g, u, 1.0, 1e-3, LinearOracle(X), 2.0, cnt)
        assert self._gap(g, u, 1.0, out, X) <= 1e-3
        assert cnt.lo <= math.ceil(6 * 2.0 / 1e-3)

    def test_huge_tolerance(self):
        u = np.array([0.2, 0.8])
        assert np.array_equal(cndg_inner(np.array([5.0, -5.0]), u, 1.0, 1e6, LinearOracle(simplex(2))), u)

    def test_bad_parameters(self):
        with pytest.raises(ConfigurationError):
            cndg_inner(np.zeros(2), np.array([1.0, 0.0]), 0.0, 1.0, LinearOracle(simplex(2)))


class TestSliding:
    def test_parameters(self):
        pr = SCGParams(2.0, 2.0)
        pr.check(1000)
        assert pr.gamma(1) == 1.0
        assert pr.Gamma(1) == 1.0
        assert pr.Gamma(3) == pytest.approx((1 - 3 / 4) * (1 - 3 / 5))

    @pytest.mark.parametrize("seed", range(3))
    def test_bound_and_counts(self, seed):
        p = _qp(20, seed)
        pr = SCGParams(1.0, 2.0)
        _, tr = scg_run(p, LinearOracle(p.X), pr, steps=300)
        assert count_violations(tr, pr.bound, slack=1e-12) == 0
        assert np.array_equal(tr.column("grad_calls"), tr.column("k"))
        caps = np.cumsum([0] + [pr.lo_cap(k) for k in range(1, 301)])
        assert np.all(tr.column("lo_calls") <= caps)

    def test_rejects_composite(self):
        p = CompositeProblem(SmoothPart.squared_distance(np.zeros(2)), l1(1.0), simplex(2), np.array([0.5, 0.5]))
        with pytest.raises(UnsupportedError):
            scg_run(p, LinearOracle(p.X), SCGParams(1.0, 2.0), steps=1)
