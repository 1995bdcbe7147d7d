import math

import numpy as np
import pytest

from rggclt.density import (
    CircularDensity,
    QuadratureError,
    constants,
    integrate_periodic,
    integrate_periodic_adaptive,
    moments,
    normalizer_I0,
)


def i0_series(kappa, terms=60):
    """Power-series oracle sum_m (kappa/2)^(2m) / (m!)^2."""
    total = 0.0
    term = 1.0
    for m in range(terms):
        total += term
        term *= (kappa / 2.0) ** 2 / (m + 1) ** 2
    return total


class TestNormalizer:
    def test_kappa_zero_is_one(self):
        assert normalizer_I0(0.0) == pytest.approx(1.0, abs=1e-14)

    @pytest.mark.parametrize("kappa", [0.3, 1.0, 5.0, 12.0])
    def test_matches_power_series(self, kappa):
        assert normalizer_I0(kappa) == pytest.approx(i0_series(kappa), rel=1e-12)

    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            normalizer_I0(-0.5)


class TestQuadrature:
    def test_constant_integrand(self):
        assert integrate_periodic(lambda x: np.ones_like(x), 16) == 1.0

    def test_trig_polynomial_exact(self):
        value = integrate_periodic(lambda x: np.cos(2 * np.pi * x) ** 2, 64)
        assert value == pytest.approx(0.5, abs=1e-15)

    def test_too_few_panels_rejected(self):
        with pytest.raises(ValueError):
            integrate_periodic(lambda x: x, 4)

    def test_non_finite_sample_rejected(self):
        with np.errstate(divide="ignore"), pytest.raises(QuadratureError):
            integrate_periodic(lambda x: 1.0 / (x - x[0]), 16)

    def test_adaptive_matches_fine_grid_oracle(self):
        # frozen reference: 1e6-panel rectangle rule for f^3, von Mises k=1
        density = CircularDensity.von_mises(1.0, 0.25)
        fine = 2.405035216033486
        value = integrate_periodic_adaptive(lambda x: density.evaluate(x) ** 3,
                                            rel_tol=1e-13, abs_tol=0.0)
        assert value == pytest.approx(fine, abs=1e-10)

    def test_self_consistency_at_convergence(self):
        density = CircularDensity.von_mises(1.0, 0.0)
        a = integrate_periodic(lambda x: density.evaluate(x) ** 3, 4096)
        b = integrate_periodic(lambda x: density.evaluate(x) ** 3, 8192)
        assert abs(a - b) < 1e-12 * max(1.0, abs(a))


class TestEvaluation:
    def test_uniform_values(self):
        u = CircularDensity.uniform()
        assert u.evaluate(0.37) == 1.0
        assert u.evaluate(0.37, 1) == 0.0
        assert u.evaluate(0.37, 2) == 0.0

    def test_von_mises_at_mode(self):
        d = CircularDensity.von_mises(1.0, 0.0)
        assert d.evaluate(0.0) == pytest.approx(math.e / i0_series(1.0), rel=1e-12)

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            CircularDensity.uniform().evaluate(0.1, order=3)

    def test_periodicity(self):
        d = CircularDensity.von_mises(2.0, 0.3)
        x = np.linspace(0, 1, 11)
        for order in (0, 1, 2):
            np.testing.assert_allclose(d.evaluate(x, order),
                                       d.evaluate(x + 1.0, order), rtol=1e-12)
        assert d.evaluate(0.0) == pytest.approx(d.evaluate(1.0), rel=1e-12)
        assert d.evaluate(0.0, 1) == pytest.approx(d.evaluate(1.0, 1), abs=1e-9)

    def test_fourier_derivatives(self):
        d = CircularDensity.fourier(cos_coeffs=[0.2], sin_coeffs=[0.1])
        x = 0.123
        w = 2 * math.pi
        assert d.evaluate(x) == pytest.approx(
            1 + 0.2 * math.cos(w * x) + 0.1 * math.sin(w * x), rel=1e-14)
        assert d.evaluate(x, 1) == pytest.approx(
            w * (-0.2 * math.sin(w * x) + 0.1 * math.cos(w * x)), rel=1e-13)
        assert d.evaluate(x, 2) == pytest.approx(
            w ** 2 * (-0.2 * math.cos(w * x) - 0.1 * math.sin(w * x)), rel=1e-13)

    def test_integrates_to_one(self):
        for d in (CircularDensity.uniform(),
                  CircularDensity.von_mises(2.5, 0.4),
                  CircularDensity.fourier(cos_coeffs=[0.3, 0.1])):
            assert integrate_periodic(d.evaluate, 4096) == pytest.approx(1.0, abs=1e-9)

    def test_bounds_enclose_values(self):
        for d in (CircularDensity.von_mises(3.0, 0.2),
                  CircularDensity.fourier(cos_coeffs=[0.4], sin_coeffs=[0.2])):
            xs = np.linspace(0, 1, 2048, endpoint=False)
            vals = d.evaluate(xs)
            assert d.inf_f > 0
            assert np.all(vals <= d.sup_f + 1e-12)
            assert np.all(vals >= d.inf_f - 1e-12)

    def test_non_positive_fourier_rejected(self):
        with pytest.raises(ValueError):
            CircularDensity.fourier(cos_coeffs=[1.2])

    def test_spec_round_trip(self):
        for d in (CircularDensity.uniform(),
                  CircularDensity.von_mises(1.5, 0.7),
                  CircularDensity.fourier(cos_coeffs=[0.1], sin_coeffs=[0.05])):
            clone = CircularDensity.from_spec(d.spec())
            assert clone.spec() == d.spec()

    def test_unknown_spec_keys_rejected(self):
        with pytest.raises(ValueError):
            CircularDensity.from_spec({"kind": "von_mises", "kappa": 1, "mu": 0,
                                       "sigma": 2})
        with pytest.raises(ValueError):
            CircularDensity.from_spec({"kind": "gaussian"})


class TestCumulative:
    def test_uniform_is_identity(self):
        u = CircularDensity.uniform()
        assert u.cumulative(0.3) == 0.3
        assert u.arc_mass(-0.1, 0.2) == pytest.approx(0.3, abs=1e-15)

    def test_shift_by_one_period(self):
        d = CircularDensity.von_mises(1.0, 0.3)
        t = np.array([-0.4, 0.1, 0.77])
        np.testing.assert_allclose(d.cumulative(t + 1.0), d.cumulative(t) + 1.0,
                                   rtol=0, atol=1e-14)

    def test_matches_quadrature(self):
        d = CircularDensity.von_mises(2.0, 0.6)
        for a, b in ((0.1, 0.35), (-0.2, 0.1), (0.9, 1.4)):
            grid = np.linspace(a, b, 200_001)
            reference = np.trapezoid(d.evaluate(grid), grid)
            assert d.arc_mass(a, b) == pytest.approx(reference, abs=1e-10)


class TestMoments:
    def test_uniform_moments(self):
        m = moments(CircularDensity.uniform())
        assert m.e_f2 == pytest.approx(1.0, abs=1e-14)
        assert m.e_fp2 == 0.0
        assert m.e_ffpp == 0.0
        assert m.e_fp2_2ffpp == 0.0

    def test_small_kappa_slope_moment(self):
        # leading behavior e_fp2 ~ 2 pi^2 kappa^2
        m = moments(CircularDensity.von_mises(0.1, 0.0))
        assert m.e_fp2 == pytest.approx(2 * math.pi ** 2 * 0.01, rel=0.02)

    def test_fourier_cubed_moment(self):
        # (1 + a cos)^3 integrates to 1 + 3 a^2 / 2
        m = moments(CircularDensity.fourier(cos_coeffs=[0.2]))
        assert m.e_f2 == pytest.approx(1.06, abs=1e-12)

    @pytest.mark.parametrize("density", [
        CircularDensity.von_mises(0.5, 0.2),
        CircularDensity.von_mises(2.0, 0.0),
        CircularDensity.fourier(cos_coeffs=[0.3], sin_coeffs=[0.1]),
    ])
    def test_integration_by_parts_identity(self, density):
        m = moments(density)
        assert m.e_ffpp == pytest.approx(-2.0 * m.e_fp2, rel=1e-9, abs=1e-12)


class TestConstants:
    def test_uniform_degenerates(self):
        c = constants(CircularDensity.uniform())
        assert abs(c.a_f) <= 1e-10
        assert abs(c.b_f) <= 1e-10
        assert abs(c.c_f) <= 1e-10
        assert abs(c.sigma1_sq) <= 1e-10

    @pytest.mark.parametrize("kappa,mu,expected", [
        (1.0, 0.1, 13924.35),
        (5.0, 0.5, 13646828.67),
    ])
    def test_reference_variance_values(self, kappa, mu, expected):
        c = constants(CircularDensity.von_mises(kappa, mu))
        assert c.sigma1_sq == pytest.approx(expected, rel=0.005)

    @pytest.mark.parametrize("density", [
        CircularDensity.uniform(),
        CircularDensity.von_mises(0.5, 0.3),
        CircularDensity.von_mises(2.0, 0.0),
        CircularDensity.fourier(cos_coeffs=[0.25], sin_coeffs=[0.1]),
    ])
    def test_linear_constant_identity(self, density):
        # 3 b_f - 4 a_f = -3 c_f, a consequence of periodic integration by parts
        c = constants(density)
        assert 3 * c.b_f - 4 * c.a_f == pytest.approx(-3 * c.c_f,
                                                      rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("kappa", [0.5, 5.0])
    def test_location_invariance(self, kappa):
        a = constants(CircularDensity.von_mises(kappa, 0.15))
        b = constants(CircularDensity.von_mises(kappa, 0.77))
        for va, vb in ((a.a_f, b.a_f), (a.b_f, b.b_f), (a.c_f, b.c_f),
                       (a.sigma1_sq, b.sigma1_sq)):
            assert abs(va - vb) <= 1e-9 * max(1.0, abs(va), abs(vb))

    def test_variance_grows_with_concentration(self):
        values = [constants(CircularDensity.von_mises(k, 0.1)).sigma1_sq
                  for k in (0.1, 0.5, 1.0, 5.0)]
        assert values == sorted(values)
