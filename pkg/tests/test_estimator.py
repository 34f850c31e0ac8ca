"""Tests for the coordinate-descent estimator and its cubic machinery."""

import math

import numpy as np
import pytest

from oracle_utils import (
    central_diff,
    companion_real_roots,
    grid_min_h,
    h_direct,
    random_context,
    scan_then_golden,
)
from symdet.errors import DegenerateToConstant
from symdet.estimator import (
    HContext,
    a_table,
    algorithm1,
    c_table,
    coordinate_min,
    cubic_coeffs_alpha1,
    cubic_coeffs_alpha2,
    derivative_coeffs,
    h_eval,
    profile_h,
    solve_cubic_real,
    two_step_estimate,
)
from symdet.realspd import logdet, quad_form, rank_two_update_logdet, spd_from_entries
from symdet.scenario import Amplitude, SteeringPair, steering


def toy_context(n=4):
    """z1 = z2 = 0, S = I, v = (e1, 0): h reduces to 1 + a1^2 + a2^2."""
    v1 = np.zeros(n)
    v1[0] = 1.0
    v = SteeringPair(v1, np.zeros(n))
    return HContext(np.zeros(n), np.zeros(n), v, spd_from_entries(np.eye(n)))


class TestHContext:
    def test_cached_scalars_match_fresh_quad_forms(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            ctx = random_context(rng)
            vecs = {"z1": ctx.z1, "z2": ctx.z2, "v1": ctx.v.v1, "v2": ctx.v.v2}
            pairs = {
                "zz11": ("z1", "z1"), "zz12": ("z1", "z2"), "zz22": ("z2", "z2"),
                "vz11": ("v1", "z1"), "vz12": ("v1", "z2"),
                "vz21": ("v2", "z1"), "vz22": ("v2", "z2"),
                "vv11": ("v1", "v1"), "vv12": ("v1", "v2"), "vv22": ("v2", "v2"),
            }
            for name, (x, y) in pairs.items():
                fresh = quad_form(ctx.s, vecs[x], vecs[y])
                cached = getattr(ctx, name)
                assert abs(cached - fresh) <= 1e-12 * max(1.0, abs(fresh)), name


class TestTwoStep:
    def test_unit_steering(self):
        n = 4
        v = SteeringPair(np.array([1.0, 0, 0, 0]), np.zeros(n))
        w = spd_from_entries(np.eye(n))
        rng = np.random.default_rng(2)
        z1 = rng.standard_normal(n)
        z2 = rng.standard_normal(n)
        a = two_step_estimate(z1, z2, v, w)
        assert abs(a.a1 - z1[0]) < 1e-14
        assert abs(a.a2 - z2[0]) < 1e-14

    def test_noise_free_recovery(self):
        n = 4
        v = SteeringPair(np.array([0.6, 0.8, 0, 0]), np.zeros(n))
        w = spd_from_entries(np.eye(n) + 0.3 * np.ones((n, n)))
        a1, a2 = 1.7, -0.4
        z1 = a1 * v.v1 - a2 * v.v2
        z2 = a1 * v.v2 + a2 * v.v1
        a = two_step_estimate(z1, z2, v, w)
        assert abs(a.a1 - a1) < 1e-12
        assert abs(a.a2 - a2) < 1e-12

    def test_matches_gradient_root_oracle(self):
        """The estimates solve grad ln g = 0 (2-D Newton, numeric Jacobian)."""
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = 5
            v = steering(n, rng.uniform(0, 0.4))
            r = rng.standard_normal((n, 2 * n))
            w = spd_from_entries(r @ r.T / n + 0.2 * np.eye(n))
            z1 = rng.standard_normal(n)
            z2 = rng.standard_normal(n)
            winv = np.linalg.inv(w.entries)

            def neg_ll(a):
                m1 = a[0] * v.v1 - a[1] * v.v2
                m2 = a[0] * v.v2 + a[1] * v.v1
                r1, r2 = z1 - m1, z2 - m2
                return 0.5 * (r1 @ winv @ r1 + r2 @ winv @ r2)

            def grad(a):
                out = np.empty(2)
                for i in range(2):
                    def f(x, i=i):
                        p = a.copy()
                        p[i] = x
                        return neg_ll(p)
                    out[i] = central_diff(f, a[i])
                return out

            x = np.zeros(2)
            for _ in range(8):
                g = grad(x)
                jac = np.empty((2, 2))
                for i in range(2):
                    def gi(t, i=i):
                        p = x.copy()
                        p[i] = t
                        return grad(p)
                    jac[:, i] = (gi(x[i] + 1e-5) - gi(x[i] - 1e-5)) / 2e-5
                x = x - np.linalg.solve(jac, g)
            est = two_step_estimate(z1, z2, v, w)
            assert abs(est.a1 - x[0]) < 1e-9
            assert abs(est.a2 - x[1]) < 1e-9


class TestHEval:
    def test_toy_closed_form(self):
        ctx = toy_context()
        for a1, a2 in [(0.0, 0.0), (1.5, -2.0), (0.3, 0.4)]:
            want = 1.0 + a1 * a1 + a2 * a2
            assert abs(h_eval(ctx, Amplitude(a1, a2)) - want) < 1e-12

    def test_null_amplitude_formula(self):
        rng = np.random.default_rng(4)
        ctx = random_context(rng)
        want = (1 + ctx.zz11) * (1 + ctx.zz22) - ctx.zz12 ** 2
        assert abs(h_eval(ctx, Amplitude(0.0, 0.0)) - want) < 1e-12 * abs(want)

    def test_determinant_identity(self):
        """h == det(S + r1 r1' + r2 r2') / det(S) with ri the residuals."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            ctx = random_context(rng)
            a = Amplitude(rng.uniform(-2, 2), rng.uniform(-2, 2))
            m1 = a.a1 * ctx.v.v1 - a.a2 * ctx.v.v2
            m2 = a.a1 * ctx.v.v2 + a.a2 * ctx.v.v1
            want = math.exp(
                rank_two_update_logdet(ctx.s, ctx.z1 - m1, ctx.z2 - m2) - logdet(ctx.s)
            )
            got = h_eval(ctx, a)
            assert abs(got - want) <= 1e-9 * abs(want)

    def test_positive_everywhere_sampled(self):
        rng = np.random.default_rng(6)
        ctx = random_context(rng)
        for _ in range(100):
            a = Amplitude(rng.uniform(-50, 50), rng.uniform(-50, 50))
            assert h_eval(ctx, a) > 0.0

    def test_matches_direct_definition(self):
        rng = np.random.default_rng(7)
        ctx = random_context(rng)
        a = Amplitude(0.7, -1.2)
        want = h_direct(ctx, a.a1, a.a2)
        assert abs(h_eval(ctx, a) - want) <= 1e-10 * abs(want)


class TestCubicCoeffs:
    def test_finite_difference_oracle_alpha1(self):
        rng = np.random.default_rng(8)
        ctx = random_context(rng)
        for _ in range(20):
            a2 = rng.uniform(-3, 3)
            x = rng.uniform(-3, 3)
            b1, b2, b3, b4 = cubic_coeffs_alpha1(ctx, a2)
            poly = ((b1 * x + b2) * x + b3) * x + b4
            fd = central_diff(lambda t: h_eval(ctx, Amplitude(t, a2)), x)
            assert abs(poly - fd) <= 1e-6 * max(1.0, abs(fd))

    def test_finite_difference_oracle_alpha2(self):
        rng = np.random.default_rng(9)
        ctx = random_context(rng)
        for _ in range(20):
            a1 = rng.uniform(-3, 3)
            x = rng.uniform(-3, 3)
            d1, d2, d3, d4 = cubic_coeffs_alpha2(ctx, a1)
            poly = ((d1 * x + d2) * x + d3) * x + d4
            fd = central_diff(lambda t: h_eval(ctx, Amplitude(a1, t)), x)
            assert abs(poly - fd) <= 1e-6 * max(1.0, abs(fd))

    def test_toy_derivative_is_2x(self):
        ctx = toy_context()
        for a2 in (0.0, 1.0, -2.5):
            b1, b2, b3, b4 = cubic_coeffs_alpha1(ctx, a2)
            assert abs(b1) < 1e-14 and abs(b2) < 1e-14
            assert abs(b3 - 2.0) < 1e-14 and abs(b4) < 1e-14
            d = cubic_coeffs_alpha2(ctx, a2)
            assert abs(d[2] - 2.0) < 1e-14 and abs(d[3]) < 1e-14

    def test_leading_coeff_assembly(self):
        """b1 recomputed from the table entries matches the assembled value."""
        rng = np.random.default_rng(10)
        ctx = random_context(rng)
        t = 0.37
        tab = a_table(ctx.scalars(), t)
        b = derivative_coeffs(tab)
        a1, a3, a6, a9, a11, a14 = tab[0], tab[2], tab[5], tab[8], tab[10], tab[13]
        assert b[0] == a1 * a3 + a9 * a6 - 2.0 * a11 * a14

    def test_role_swap_duality(self):
        """With z1 = z2 and v2 = 0, h is symmetric in (a1, a2), so the two
        derivative tables coincide under the role swap."""
        rng = np.random.default_rng(11)
        n = 4
        v1 = np.zeros(n)
        v1[0] = 1.0
        v = SteeringPair(v1, np.zeros(n))
        z = rng.standard_normal(n)
        r = rng.standard_normal((n, 2 * n))
        s = spd_from_entries(r @ r.T)
        ctx = HContext(z, z, v, s)
        for fixed in (0.0, 0.8, -1.3):
            b = derivative_coeffs(a_table(ctx.scalars(), fixed))
            d = derivative_coeffs(c_table(ctx.scalars(), fixed))
            for bi, di in zip(b, d):
                assert abs(bi - di) <= 1e-12 * max(1.0, abs(bi))


class TestSolveCubic:
    def test_three_known_roots(self):
        roots = solve_cubic_real((1.0, -6.0, 11.0, -6.0))
        assert len(roots) == 3
        for got, want in zip(roots, (1.0, 2.0, 3.0)):
            assert abs(got - want) < 1e-12

    def test_single_real_root(self):
        roots = solve_cubic_real((1.0, 0.0, 0.0, -8.0))
        assert len(roots) == 1
        assert abs(roots[0] - 2.0) < 1e-12

    def test_quadratic_fallback(self):
        roots = solve_cubic_real((0.0, 1.0, -3.0, 2.0))
        assert len(roots) == 2
        assert abs(roots[0] - 1.0) < 1e-12 and abs(roots[1] - 2.0) < 1e-12

    def test_linear_fallback(self):
        roots = solve_cubic_real((0.0, 0.0, 2.0, -4.0))
        assert roots == pytest.approx([2.0], abs=1e-14)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateToConstant):
            solve_cubic_real((0.0, 0.0, 0.0, 0.0))
        with pytest.raises(DegenerateToConstant):
            solve_cubic_real((1e-15, -1e-16, 1e-15, -1e-16))

    def test_double_root_case(self):
        # (x-1)^2 (x-5): the simple root 5 must always be reported; the
        # double root 1 may or may not appear (discriminant sits exactly on
        # the branch boundary), and nothing else is allowed.
        roots = solve_cubic_real((1.0, -7.0, 11.0, -5.0))
        assert any(abs(r - 5.0) < 1e-9 for r in roots)
        for r in roots:
            assert min(abs(r - 1.0), abs(r - 5.0)) < 1e-8

    def test_random_against_companion_matrix(self):
        rng = np.random.default_rng(12)
        for _ in range(1000):
            coeffs = rng.standard_normal(4) * 10.0 ** rng.integers(-2, 3)
            if abs(coeffs[0]) < 1e-6:
                coeffs[0] = 1.0
            got = np.array(solve_cubic_real(tuple(coeffs)))
            want = companion_real_roots(coeffs)
            # every returned root is near a companion root and vice versa
            for r in got:
                assert np.min(np.abs(want - r)) < 1e-8
            for r in want:
                assert np.min(np.abs(got - r)) < 1e-8

    def test_residual_bound(self):
        rng = np.random.default_rng(13)
        for _ in range(1000):
            b = tuple(rng.standard_normal(4) * 10.0 ** rng.integers(-3, 4))
            if max(abs(c) for c in b) < 1e-12:
                continue
            try:
                roots = solve_cubic_real(b)
            except DegenerateToConstant:
                continue
            for r in roots:
                p = ((b[0] * r + b[1]) * r + b[2]) * r + b[3]
                bound = 1e-9 * max(1.0, max(abs(c) for c in b) * max(1.0, abs(r)) ** 3)
                assert abs(p) <= bound


class TestCoordinateMin:
    def test_toy_minimum_at_zero(self):
        ctx = toy_context()
        for start in (-3.0, 0.0, 7.5):
            assert abs(coordinate_min(ctx, 1, start)) < 1e-12
            assert abs(coordinate_min(ctx, 2, start)) < 1e-12

    def test_noise_free_exact(self):
        rng = np.random.default_rng(14)
        true = (1.3, -0.8)
        v = steering(4, 0.1)
        zs = rng.standard_normal((4, 8))
        z1 = true[0] * v.v1 - true[1] * v.v2
        z2 = true[0] * v.v2 + true[1] * v.v1
        ctx = HContext(z1, z2, v, spd_from_entries(zs @ zs.T))
        got = coordinate_min(ctx, 1, true[1])
        assert abs(got - true[0]) < 1e-9

    def test_matches_scan_golden_oracle(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            ctx = random_context(rng)
            fixed = rng.uniform(-2, 2)
            coord = int(rng.integers(1, 3))
            table = (
                a_table(ctx.scalars(), fixed)
                if coord == 1
                else c_table(ctx.scalars(), fixed)
            )
            got = coordinate_min(ctx, coord, fixed)
            want = scan_then_golden(lambda x: profile_h(table, x), -40.0, 40.0)
            assert abs(got - want) < 1e-6


class TestAlgorithm1:
    def test_noise_free_convergence(self):
        rng = np.random.default_rng(16)
        true = Amplitude(2.0, -1.5)
        v = steering(4, 0.12)
        zs = rng.standard_normal((4, 8))
        z1 = true.a1 * v.v1 - true.a2 * v.v2
        z2 = true.a1 * v.v2 + true.a2 * v.v1
        ctx = HContext(z1, z2, v, spd_from_entries(zs @ zs.T))
        est, trace = algorithm1(ctx)
        assert trace.iterations_used <= 2
        assert abs(est.a1 - true.a1) < 1e-9
        assert abs(est.a2 - true.a2) < 1e-9
        b = cubic_coeffs_alpha1(ctx, est.a2)
        p = ((b[0] * est.a1 + b[1]) * est.a1 + b[2]) * est.a1 + b[3]
        assert abs(p) <= 1e-9 * max(1.0, max(abs(c) for c in b))

    def test_descent_from_seed(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            ctx = random_context(rng)
            seed = Amplitude(rng.uniform(-4, 4), rng.uniform(-4, 4))
            est, trace = algorithm1(ctx, seed=seed)
            assert h_eval(ctx, est) <= h_eval(ctx, seed) * (1.0 + 1e-12)

    def test_trace_monotone(self):
        rng = np.random.default_rng(18)
        for _ in range(1000):
            ctx = random_context(rng)
            _, trace = algorithm1(ctx, max_iter=8)
            assert trace.is_monotone()

    def test_stationarity_at_convergence(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            ctx = random_context(rng)
            est, trace = algorithm1(ctx, max_iter=60, eps1=1e-9, eps2=1e-9)
            assert trace.converged
            scale1 = max(abs(c) for c in cubic_coeffs_alpha1(ctx, est.a2))
            scale2 = max(abs(c) for c in cubic_coeffs_alpha2(ctx, est.a1))
            b = cubic_coeffs_alpha1(ctx, est.a2)
            d = cubic_coeffs_alpha2(ctx, est.a1)
            g = max(1.0, abs(est.a1), abs(est.a2)) ** 3
            p1 = ((b[0] * est.a1 + b[1]) * est.a1 + b[2]) * est.a1 + b[3]
            p2 = ((d[0] * est.a2 + d[1]) * est.a2 + d[2]) * est.a2 + d[3]
            assert abs(p1) <= 1e-6 * max(1.0, scale1 * g)
            assert abs(p2) <= 1e-6 * max(1.0, scale2 * g)

    def test_grid_oracle_small(self):
        """Coordinate descent lands at (or below) the brute-force grid min."""
        rng = np.random.default_rng(20)
        for _ in range(20):
            ctx = random_context(rng)
            est, _ = algorithm1(ctx, max_iter=30)
            h_alg = h_eval(ctx, est)
            h_grid, _, gap = grid_min_h(ctx)
            assert h_alg <= h_grid + gap + 1e-9 * h_grid

    def test_coercivity_probe(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            ctx = random_context(rng)
            est, _ = algorithm1(ctx)
            h_min = h_eval(ctx, est)
            theta = rng.uniform(0, 2 * np.pi)
            far = Amplitude(1e6 * math.cos(theta), 1e6 * math.sin(theta))
            assert h_eval(ctx, far) >= 1e10 * h_min

    def test_cold_start_mode(self):
        rng = np.random.default_rng(22)
        ctx = random_context(rng)
        est_cold, trace_cold = algorithm1(ctx, seed=Amplitude(0.0, 0.0))
        assert trace_cold.objective[0] == h_eval(ctx, Amplitude(0.0, 0.0))
        est_warm, _ = algorithm1(ctx)
        assert abs(h_eval(ctx, est_cold) - h_eval(ctx, est_warm)) <= 1e-6 * h_eval(
            ctx, est_warm
        )

    def test_fixed_sweep_mode(self):
        rng = np.random.default_rng(23)
        ctx = random_context(rng)
        _, trace = algorithm1(ctx, max_iter=3, eps1=1e-300, eps2=1e-300)
        assert trace.iterations_used == 3
        assert not trace.converged
