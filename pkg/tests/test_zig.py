import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from snowcast.zig import (
    GammaSpec,
    ZeroInflatedSpec,
    gamma_from_moments,
    inverse_logit,
    regularized_gamma_p,
    zig_cdf,
    zig_log_density,
    zig_sample,
)


class TestGammaFromMoments:
    def test_simple(self):
        spec = gamma_from_moments(2.0, 4.0)
        assert spec.shape == pytest.approx(1.0)
        assert spec.scale == pytest.approx(2.0)

    def test_direct_substitution(self):
        spec = gamma_from_moments(6.0, 12.0)
        assert spec.shape == pytest.approx(3.0)
        assert spec.scale == pytest.approx(2.0)

    def test_tiny_mean_no_underflow(self):
        spec = gamma_from_moments(1e-6, 1e-3)
        assert spec.shape == pytest.approx(1e-9)
        assert spec.scale == pytest.approx(1e3)
        assert spec.shape > 0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            gamma_from_moments(0.0, 1.0)
        with pytest.raises(ValueError):
            gamma_from_moments(1.0, -1.0)

    @given(
        st.floats(min_value=1e-6, max_value=1e6),
        st.floats(min_value=1e-6, max_value=1e6),
    )
    def test_round_trip(self, mean, variance):
        spec = gamma_from_moments(mean, variance)
        assert spec.mean == pytest.approx(mean, rel=1e-12)
        assert spec.variance == pytest.approx(variance, rel=1e-12)


class TestInverseLogit:
    def test_zero(self):
        assert inverse_logit(0.0) == 0.5

    def test_log_three(self):
        assert inverse_logit(math.log(3.0)) == pytest.approx(0.75, rel=1e-15)

    def test_deep_negative_stays_positive(self):
        v = inverse_logit(-745.0)
        assert 0.0 < v < 1e-300

    def test_large_positive_no_overflow(self):
        assert inverse_logit(745.0) <= 1.0

    @given(st.floats(min_value=-700, max_value=700))
    def test_complement_symmetry(self, x):
        assert inverse_logit(x) + inverse_logit(-x) == pytest.approx(1.0, abs=1e-12)


class TestLogDensity:
    def test_atom_mass(self):
        spec = ZeroInflatedSpec(0.25, GammaSpec(1.0, 2.0))
        assert zig_log_density(spec, 0.0) == pytest.approx(math.log(0.25))

    def test_impossible_zero(self):
        spec = ZeroInflatedSpec(0.0, GammaSpec(1.0, 2.0))
        assert zig_log_density(spec, 0.0) == -math.inf

    def test_exponential_case(self):
        # log(0.75 * 0.5 * e^-1), via arbitrary-precision evaluation
        spec = ZeroInflatedSpec(0.25, GammaSpec(1.0, 2.0))
        assert zig_log_density(spec, 2.0) == pytest.approx(
            -1.9808292530117262369, abs=1e-12
        )

    def test_negative_rejected(self):
        spec = ZeroInflatedSpec(0.25, GammaSpec(1.0, 2.0))
        with pytest.raises(ValueError):
            zig_log_density(spec, -0.5)

    def test_density_plus_atom_integrates_to_one(self):
        spec = ZeroInflatedSpec(0.3, GammaSpec(2.5, 1.2))
        total, _ = integrate.quad(
            lambda x: math.exp(zig_log_density(spec, x)), 0, np.inf, limit=200
        )
        assert total + spec.p_zero == pytest.approx(1.0, abs=1e-6)


class TestCdf:
    def test_atom_at_zero(self):
        spec = ZeroInflatedSpec(0.3, GammaSpec(2.0, 1.5))
        assert zig_cdf(spec, 0.0) == 0.3

    def test_upper_limit(self):
        spec = ZeroInflatedSpec(0.3, GammaSpec(1.0, 1.0))
        assert zig_cdf(spec, 1e12) == pytest.approx(1.0, abs=1e-12)

    def test_quadrature_oracle(self):
        spec = ZeroInflatedSpec(0.3, GammaSpec(2.0, 1.5))
        expected, _ = integrate.quad(
            lambda x: math.exp(zig_log_density(spec, x)), 0, 3.0, limit=200
        )
        assert zig_cdf(spec, 3.0) == pytest.approx(spec.p_zero + expected, abs=1e-8)

    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.05, max_value=50.0),
        st.floats(min_value=0.05, max_value=50.0),
    )
    @settings(max_examples=30)
    def test_monotone(self, p_zero, shape, scale):
        spec = ZeroInflatedSpec(p_zero, GammaSpec(shape, scale))
        grid = np.linspace(0.0, shape * scale * 5 + 1.0, 100)
        values = [zig_cdf(spec, float(x)) for x in grid]
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


class TestRegularizedGamma:
    def test_exponential_closed_form(self):
        # shape 1: P(1, x) = 1 - e^-x
        for x in (0.1, 1.0, 5.0, 30.0):
            assert regularized_gamma_p(1.0, x) == pytest.approx(
                1.0 - math.exp(-x), abs=1e-12
            )

    def test_small_shape(self):
        # P(a, x) -> 1 quickly for tiny shapes
        assert regularized_gamma_p(1e-9, 1.0) == pytest.approx(1.0, abs=1e-6)

    def test_large_shape(self):
        # Normal approximation at the mean: P(a, a) -> 0.5 as a grows
        assert regularized_gamma_p(1e5, 1e5) == pytest.approx(0.5, abs=1e-2)

    def test_zero(self):
        assert regularized_gamma_p(2.0, 0.0) == 0.0


class TestSampling:
    def test_degenerate_always_zero(self):
        spec = ZeroInflatedSpec(1.0, GammaSpec(5.0, 2.0))
        rng = np.random.default_rng(0)
        assert all(zig_sample(spec, rng) == 0.0 for _ in range(100))

    def test_mean_of_pure_gamma(self):
        spec = ZeroInflatedSpec(0.0, GammaSpec(5.0, 2.0))
        rng = np.random.default_rng(1)
        draws = np.array([zig_sample(spec, rng) for _ in range(100_000)])
        se = math.sqrt(spec.positive_part.variance / draws.size)
        assert abs(draws.mean() - 10.0) < 3 * se

    def test_zero_frequency(self):
        spec = ZeroInflatedSpec(0.4, GammaSpec(2.0, 1.0))
        rng = np.random.default_rng(2)
        draws = np.array([zig_sample(spec, rng) for _ in range(100_000)])
        freq = (draws == 0.0).mean()
        se = math.sqrt(0.4 * 0.6 / draws.size)
        assert abs(freq - 0.4) < 3 * se

    def test_deterministic_for_fixed_state(self):
        spec = ZeroInflatedSpec(0.4, GammaSpec(2.0, 1.0))
        a = [zig_sample(spec, np.random.default_rng(3)) for _ in range(5)]
        b = [zig_sample(spec, np.random.default_rng(3)) for _ in range(5)]
        assert a == b

    def test_empirical_cdf_matches_zig_cdf(self):
        # KS on the positive part, conditioning away the atom.
        spec = ZeroInflatedSpec(0.35, GammaSpec(1.7, 2.4))
        rng = np.random.default_rng(4)
        draws = np.array([zig_sample(spec, rng) for _ in range(100_000)])
        positive = np.sort(draws[draws > 0])
        n = positive.size
        # conditional CDF of the gamma part
        cond = np.array(
            [
                (zig_cdf(spec, float(x)) - spec.p_zero) / (1.0 - spec.p_zero)
                for x in positive
            ]
        )
        i = np.arange(1, n + 1)
        ks = max(np.max(i / n - cond), np.max(cond - (i - 1) / n))
        assert ks < 1.628 / math.sqrt(n)  # alpha = 0.01 critical value
