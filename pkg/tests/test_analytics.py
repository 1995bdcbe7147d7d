import math

import numpy as np
import pytest

from rggclt.analytics import (
    RegimeKind,
    classify_regime,
    edge_probability_given,
    edge_probability_expansion,
    exact_triangle_probability,
    exact_twopath_probability,
    h1_leading,
    h_second_moment_exact,
    kernel_h,
    kernel_h1_exact,
    mu_n,
    scaling_factor,
    scaling_identity_sides,
    sigma2n_sq_mc,
    sigma2n_sq_quadrature,
    standardize,
)
from rggclt.density import CircularDensity, constants, integrate_periodic_adaptive
from rggclt.sampler import derive_stream

UNIFORM = CircularDensity.uniform()
VM1 = CircularDensity.von_mises(1.0, 0.0)


class TestEdgeProbability:
    def test_uniform_is_arc_length(self):
        assert edge_probability_given(UNIFORM, 0.07, 0.4) == pytest.approx(0.14, abs=1e-15)

    def test_zero_radius(self):
        assert edge_probability_given(VM1, 0.0, 0.3) == 0.0

    def test_expansion_remainder_is_fifth_order(self):
        x = 0.2
        errs = [abs(edge_probability_given(VM1, r, x)
                    - edge_probability_expansion(VM1, r, x))
                for r in (0.02, 0.01)]
        assert math.log2(errs[0] / errs[1]) >= 4.5


class TestTwoPathProbability:
    @pytest.mark.parametrize("r", [0.03, 0.1, 0.25])
    def test_uniform_closed_form(self, r):
        assert exact_twopath_probability(UNIFORM, r) == pytest.approx(4 * r * r,
                                                                      rel=1e-13)

    def test_zero_radius(self):
        assert exact_twopath_probability(VM1, 0.0) == 0.0


class TestTriangleProbability:
    @pytest.mark.parametrize("r", [0.03, 0.1, 0.25])
    def test_uniform_closed_form(self, r):
        assert exact_triangle_probability(UNIFORM, r) == pytest.approx(3 * r * r,
                                                                       rel=1e-13)

    def test_radius_cap(self):
        with pytest.raises(ValueError):
            exact_triangle_probability(VM1, 0.3)

    def test_monte_carlo_cross_check(self):
        # 2e6 sampled triples against the quadrature value
        r, m = 0.05, 2_000_000
        target = exact_triangle_probability(VM1, r)
        stream = derive_stream(414, 0)
        sup = VM1.sup_f
        hits = np.zeros(0)
        draws = []
        need = 3 * m
        while sum(d.size for d in draws) < need:
            x = stream.uniforms(2 * need)
            u = stream.uniforms(2 * need)
            draws.append(x[u * sup <= VM1.evaluate(x)])
        pts = np.concatenate(draws)[:need].reshape(3, m)
        d01 = np.abs(pts[0] - pts[1]); d01 = np.minimum(d01, 1 - d01)
        d02 = np.abs(pts[0] - pts[2]); d02 = np.minimum(d02, 1 - d02)
        d12 = np.abs(pts[1] - pts[2]); d12 = np.minimum(d12, 1 - d12)
        tri = (d01 <= r) & (d02 <= r) & (d12 <= r)
        estimate = tri.mean()
        stderr = tri.std(ddof=1) / math.sqrt(m)
        assert abs(estimate - target) < 4 * stderr


class TestCenteringRatio:
    @pytest.mark.parametrize("r", [0.01, 0.05, 0.1, 0.25])
    def test_uniform_is_three_quarters(self, r):
        assert abs(mu_n(UNIFORM, r).mu_n_exact - 0.75) < 1e-12

    def test_limit_is_three_quarters(self):
        gaps = [abs(mu_n(VM1, r).mu_n_exact - 0.75) for r in (0.04, 0.02, 0.01)]
        assert gaps == sorted(gaps, reverse=True)
        assert gaps[-1] < 3e-3

    def test_exact_expansion_agreement_order(self):
        errs = [abs(mu_n(VM1, r).mu_n_exact - mu_n(VM1, r).mu_n_expansion)
                for r in (0.02, 0.01)]
        assert math.log2(errs[0] / errs[1]) >= 2.5


class TestRegimeClassification:
    def test_dense(self):
        regime = classify_regime(200_000, 0.2, VM1)
        assert regime.kind == RegimeKind.DENSE_I
        assert regime.diagnostics["n_r5"] == pytest.approx(64.0)

    def test_intermediate(self):
        n = 20_000
        regime = classify_regime(n, n ** -0.5, UNIFORM)
        assert regime.kind == RegimeKind.INTERMEDIATE_II

    def test_sparse(self):
        n = 20_000
        regime = classify_regime(n, n ** -1.3, VM1)
        assert regime.kind == RegimeKind.SPARSE_III
        assert regime.diagnostics["n3_r2"] == pytest.approx(52.7, rel=0.01)

    def test_degenerate(self):
        assert classify_regime(100, 0.001, UNIFORM).kind == RegimeKind.DEGENERATE

    def test_uniform_never_dense(self):
        # sigma1 vanishes, so a large n r^5 still routes to the intermediate case
        assert classify_regime(200_000, 0.2, UNIFORM).kind == RegimeKind.INTERMEDIATE_II


class TestStandardize:
    def test_dense_arithmetic(self):
        z = standardize(0.01, 100, 0.1, RegimeKind.DENSE_I, mu_n_exact=0.0,
                        e_f2=2.0, sigma1=4.0)
        assert z == pytest.approx(16 * 10 * 2 / (3 * 0.01 * 4) * 0.01, rel=1e-12)

    def test_sparse_centering(self):
        mu = 0.7512
        assert standardize(mu, 5000, 0.001, RegimeKind.SPARSE_III, mu, 1.0) == 0.0

    def test_intermediate_formula(self):
        n, r, s2 = 1000, 0.01, 0.3
        z = standardize(1.0, n, r, RegimeKind.INTERMEDIATE_II, 0.0, 1.0,
                        sigma2n=s2)
        assert z == pytest.approx(2 * math.sqrt(2) * n * r * r / (3 * s2), rel=1e-12)

    def test_dense_needs_positive_sigma1(self):
        with pytest.raises(ValueError):
            scaling_factor(RegimeKind.DENSE_I, 100, 0.1, 1.0, sigma1=0.0)

    def test_intermediate_needs_sigma2n(self):
        with pytest.raises(ValueError):
            scaling_factor(RegimeKind.INTERMEDIATE_II, 100, 0.1, 1.0)


class TestScalingIdentities:
    def test_grid(self):
        for n in (100, 1000, 20_000, 200_000, 1_000_000):
            for r in (0.001, 0.01, 0.05, 0.1, 0.2):
                lhs, rhs = scaling_identity_sides(RegimeKind.DENSE_I, n, r,
                                                  2.405, sigma1=118.0)
                assert lhs == pytest.approx(rhs, rel=1e-12)
                lhs, rhs = scaling_identity_sides(RegimeKind.INTERMEDIATE_II, n, r,
                                                  1.0, sigma2n=r ** 1.5 / math.sqrt(6))
                assert lhs == pytest.approx(rhs, rel=1e-12)
                lhs, rhs = scaling_identity_sides(RegimeKind.SPARSE_III, n, r, 2.405)
                assert lhs == pytest.approx(rhs, rel=1e-12)


class TestKernel:
    def test_triangle_value(self):
        k = kernel_h(0.10, 0.11, 0.12, 0.05, 0.75)
        assert k.triangle == 1
        assert k.value == pytest.approx(1 - 0.75)

    def test_single_edge_is_zero(self):
        k = kernel_h(0.10, 0.12, 0.6, 0.05, 0.75)
        assert k.triangle == 0 and sum(k.path_indicators) == 0
        assert k.value == 0.0

    def test_open_two_path(self):
        k = kernel_h(0.10, 0.14, 0.18, 0.05, 0.75)
        assert k.triangle == 0 and sum(k.path_indicators) == 1
        assert k.value == pytest.approx(-0.75 / 3)

    def test_centered_on_average(self):
        r = 0.05
        rc = mu_n(VM1, r)
        stream = derive_stream(515, 0)
        m = 400_000
        sup = VM1.sup_f
        pts = []
        while sum(p.size for p in pts) < 3 * m:
            x = stream.uniforms(4 * m)
            u = stream.uniforms(4 * m)
            pts.append(x[u * sup <= VM1.evaluate(x)])
        x1, x2, x3 = np.concatenate(pts)[:3 * m].reshape(3, m)
        def cd(a, b):
            d = np.abs(a - b); return np.minimum(d, 1 - d)
        a12, a13, a23 = cd(x1, x2) <= r, cd(x1, x3) <= r, cd(x2, x3) <= r
        h = ((a12 & a13 & a23).astype(float)
             - rc.mu_n_exact / 3 * ((a12 & a13).astype(float)
                                    + (a12 & a23).astype(float)
                                    + (a13 & a23).astype(float)))
        stderr = h.std(ddof=1) / math.sqrt(m)
        assert abs(h.mean()) < 4 * stderr


class TestSigma2n:
    def test_uniform_closed_form_quadrature(self):
        # for the uniform density the two-variable reduction evaluates to r^3/6
        for r in (0.02, 0.01):
            assert sigma2n_sq_quadrature(UNIFORM, r, 0.75) == pytest.approx(
                r ** 3 / 6, rel=1e-9)

    def test_mc_matches_uniform_value(self):
        r = 0.01
        est, se = sigma2n_sq_mc(UNIFORM, r, 0.75, 400_000, derive_stream(9, 0))
        assert abs(est - r ** 3 / 6) < 4 * se
        assert se < 0.02 * est * 3  # sanity on the error scale

    def test_mc_matches_quadrature_non_uniform(self):
        r = 0.02
        rc = mu_n(VM1, r)
        target = sigma2n_sq_quadrature(VM1, r, rc.mu_n_exact)
        est, se = sigma2n_sq_mc(VM1, r, rc.mu_n_exact, 400_000,
                                derive_stream(9, 1))
        assert abs(est - target) < 4 * se

    def test_theta_r_cubed_bracket(self):
        # estimate / r^3 stable across halvings: successive ratios near 1
        values = []
        for i, r in enumerate((0.02, 0.01, 0.005)):
            rc = mu_n(UNIFORM, r)
            est, _ = sigma2n_sq_mc(UNIFORM, r, rc.mu_n_exact, 240_000,
                                   derive_stream(10, i))
            values.append(est / r ** 3)
        for v0, v1 in zip(values, values[1:]):
            assert 0.8 <= v0 / v1 <= 1.25

    def test_deterministic_given_stream(self):
        a = sigma2n_sq_mc(UNIFORM, 0.01, 0.75, 200_000, derive_stream(4, 4))
        b = sigma2n_sq_mc(UNIFORM, 0.01, 0.75, 200_000, derive_stream(4, 4))
        assert a == b

    def test_stderr_shrinks_with_budget(self):
        _, se1 = sigma2n_sq_mc(UNIFORM, 0.01, 0.75, 200_000, derive_stream(4, 5))
        _, se4 = sigma2n_sq_mc(UNIFORM, 0.01, 0.75, 800_000, derive_stream(4, 6))
        assert 1.6 <= se1 / se4 <= 2.5

    def test_domain_guards(self):
        with pytest.raises(ValueError):
            sigma2n_sq_mc(UNIFORM, 0.2, 0.75, 200_000, derive_stream(1, 0))
        with pytest.raises(ValueError):
            sigma2n_sq_mc(UNIFORM, 0.01, 0.75, 50_000, derive_stream(1, 0))


class TestProjections:
    def test_h1_leading_uniform_vanishes(self):
        xs = np.linspace(0, 1, 64, endpoint=False)
        np.testing.assert_array_equal(h1_leading(UNIFORM, xs, 0.0), np.zeros(64))

    def test_h1_leading_square_integral_is_sigma1_sq(self):
        const = constants(VM1)
        value = integrate_periodic_adaptive(
            lambda x: h1_leading(VM1, x, const.c_f) ** 2 * VM1.evaluate(x),
            rel_tol=1e-13, abs_tol=1e-15)
        assert value == pytest.approx(const.sigma1_sq, rel=1e-10)

    def test_h1_leading_small_kappa_shape(self):
        kappa = 1e-3
        d = CircularDensity.von_mises(kappa, 0.3)
        const = constants(d)
        xs = np.linspace(0, 1, 257)
        lead = h1_leading(d, xs, const.c_f)
        model = 8 * math.pi ** 2 * kappa * np.cos(2 * math.pi * (xs - 0.3))
        assert np.max(np.abs(lead - model)) < 200 * kappa ** 2

    def test_exact_h1_is_centered(self):
        r = 0.05
        rc = mu_n(VM1, r)
        mean = integrate_periodic_adaptive(
            lambda x: kernel_h1_exact(VM1, r, x, rc.mu_n_exact) * VM1.evaluate(x),
            rel_tol=1e-12, abs_tol=0.0)
        assert abs(mean) < 1e-12 * exact_triangle_probability(VM1, r)

    def test_exact_h1_second_moment_approaches_leading(self):
        # E[h1^2] * 16 / (r^8 sigma1^2) -> 1
        const = constants(VM1)
        ratios = []
        for r in (0.02, 0.01):
            rc = mu_n(VM1, r, asymptotic_constants=const)
            second = integrate_periodic_adaptive(
                lambda x: kernel_h1_exact(VM1, r, x, rc.mu_n_exact) ** 2
                          * VM1.evaluate(x),
                rel_tol=1e-12, abs_tol=0.0)
            ratios.append(second * 16 / (r ** 8 * const.sigma1_sq))
        assert abs(ratios[0] - 1) < 0.06
        assert abs(ratios[1] - 1) < 0.03
        assert abs(ratios[1] - 1) < abs(ratios[0] - 1)

    def test_h_second_moment_leading_term(self):
        # E[h^2] - (3 r^2 / 8) E[f^2] shrinks at fourth order
        const = constants(VM1)
        errs = []
        for r in (0.02, 0.01):
            rc = mu_n(VM1, r, asymptotic_constants=const)
            exact = h_second_moment_exact(VM1, r, rc.mu_n_exact)
            errs.append(abs(exact - rc.sigma3n_sq_leading))
        assert math.log2(errs[0] / errs[1]) >= 3.5
