import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from snowcast.short_term import (
    DayInputs,
    ShortTermParams,
    conditional_mean,
    conditional_variance,
    log_likelihood,
    retention_term,
    snowfall_term,
    transition_spec,
    zero_probability,
)
from snowcast.zig import zig_log_density, zig_sample

from conftest import OSLO, synth_station


class TestSnowfall:
    def test_oslo_cold_storm(self):
        # 10 mm at -10 C: 10 * 0.96 * sigmoid(18.48), frozen from mpmath
        assert snowfall_term(OSLO, temp=-10.0, precip=10.0) == pytest.approx(
            9.5999999095290390, abs=1e-10
        )

    def test_no_precip_no_snowfall(self):
        assert snowfall_term(OSLO, temp=-3.0, precip=0.0) == 0.0

    def test_warmer_means_less(self):
        cold = snowfall_term(OSLO, temp=-10.0, precip=5.0)
        warm = snowfall_term(OSLO, temp=10.0, precip=5.0)
        assert warm < cold


class TestRetention:
    def test_oslo_mild_day(self):
        # 30 cm at +5 C, dry: 30 * sigmoid(0.49), frozen from mpmath
        assert retention_term(OSLO, temp=5.0, precip=0.0, prev_depth=30.0) == pytest.approx(
            18.603192970292704, abs=1e-10
        )

    def test_no_pack_nothing_retained(self):
        assert retention_term(OSLO, temp=-5.0, precip=0.0, prev_depth=0.0) == 0.0

    @given(
        st.floats(min_value=-40, max_value=40),
        st.floats(min_value=0, max_value=100),
        st.floats(min_value=0, max_value=500),
    )
    def test_never_exceeds_pack(self, temp, precip, prev):
        assert retention_term(OSLO, temp, precip, prev) <= prev


class TestMoments:
    def test_bare_ground_mean(self):
        inputs = DayInputs(temp=3.0, precip=0.0, prev_depth=0.0)
        assert conditional_mean(OSLO, inputs) == pytest.approx(math.exp(-6.92), rel=1e-12)

    def test_storm_mean(self):
        inputs = DayInputs(temp=-10.0, precip=10.0, prev_depth=0.0)
        assert conditional_mean(OSLO, inputs) == pytest.approx(9.6009877394695703, abs=1e-9)

    def test_mean_positive(self):
        inputs = DayInputs(temp=30.0, precip=0.0, prev_depth=0.0)
        assert conditional_mean(OSLO, inputs) > 0

    def test_variance_at_no_change(self):
        # find an input where mean == prev_depth is impossible exactly; check formula
        inputs = DayInputs(temp=-15.0, precip=0.0, prev_depth=20.0)
        m = conditional_mean(OSLO, inputs)
        expected = 0.63 + 1.79 * (m - 20.0) ** 2
        assert conditional_variance(OSLO, inputs) == pytest.approx(expected, rel=1e-12)

    def test_variance_floor(self):
        inputs = DayInputs(temp=0.0, precip=3.0, prev_depth=12.0)
        assert conditional_variance(OSLO, inputs) >= 0.63

    def test_variance_arithmetic(self):
        # mean - prev = 2 gives 0.63 + 1.79 * 4
        assert 0.63 + 1.79 * 4.0 == pytest.approx(7.79)


class TestZeroProbability:
    def test_small_mean_limit(self):
        inputs = DayInputs(temp=20.0, precip=0.0, prev_depth=0.0)
        # conditional mean ~ e^-6.92, essentially the sigmoid(4.13) limit
        assert zero_probability(OSLO, inputs) == pytest.approx(0.98417168603291016, abs=1e-4)

    def test_decreasing_in_mean(self):
        shallow = zero_probability(OSLO, DayInputs(-5.0, 0.0, 1.0))
        deep = zero_probability(OSLO, DayInputs(-5.0, 0.0, 50.0))
        assert deep < shallow

    def test_half_at_balance(self):
        # mean = -beta6/beta7 gives exactly 0.5; engineer prev_depth for it
        target = -OSLO.beta6 / OSLO.beta7
        keep = 1.0 / (1.0 + math.exp(-(OSLO.beta3 + OSLO.beta4 * (-5.0))))
        prev = (target - math.exp(OSLO.mu)) / keep
        inputs = DayInputs(temp=-5.0, precip=0.0, prev_depth=prev)
        assert zero_probability(OSLO, inputs) == pytest.approx(0.5, abs=1e-9)


class TestTransitionSpec:
    def test_moment_round_trip(self):
        inputs = DayInputs(temp=-4.0, precip=6.0, prev_depth=25.0)
        spec = transition_spec(OSLO, inputs)
        assert spec.positive_part.mean == pytest.approx(
            conditional_mean(OSLO, inputs), rel=1e-12
        )
        assert spec.positive_part.variance == pytest.approx(
            conditional_variance(OSLO, inputs), rel=1e-12
        )

    def test_storm_spec_mean(self):
        spec = transition_spec(OSLO, DayInputs(-10.0, 10.0, 0.0))
        assert spec.positive_part.mean == pytest.approx(9.6009877394695703, abs=1e-9)

    def test_mixture_mean_identity(self):
        inputs = DayInputs(temp=-2.0, precip=3.0, prev_depth=10.0)
        spec = transition_spec(OSLO, inputs)
        expected = (1.0 - zero_probability(OSLO, inputs)) * conditional_mean(OSLO, inputs)
        assert spec.mixture_mean == pytest.approx(expected, rel=1e-12)

    @given(
        st.floats(min_value=-60, max_value=60),
        st.floats(min_value=0, max_value=500),
        st.floats(min_value=0, max_value=1000),
    )
    @settings(max_examples=200)
    def test_finite_over_physical_ranges(self, temp, precip, prev):
        spec = transition_spec(OSLO, DayInputs(temp, precip, prev))
        assert math.isfinite(spec.p_zero)
        assert math.isfinite(spec.positive_part.shape)
        assert math.isfinite(spec.positive_part.scale)
        assert spec.positive_part.shape > 0 and spec.positive_part.scale > 0

    def test_sampling_mean_matches_mixture(self):
        inputs = DayInputs(temp=-3.0, precip=4.0, prev_depth=15.0)
        spec = transition_spec(OSLO, inputs)
        rng = np.random.default_rng(7)
        draws = np.array([zig_sample(spec, rng) for _ in range(100_000)])
        mix_var = (1 - spec.p_zero) * (
            spec.positive_part.variance + spec.p_zero * spec.positive_part.mean**2
        )
        se = math.sqrt(mix_var / draws.size)
        assert abs(draws.mean() - spec.mixture_mean) < 4 * se


class TestLogLikelihood:
    def test_single_transition(self, tmp_path):
        import datetime as dt

        from snowcast.data import DailyRecord, Dataset

        recs = (
            DailyRecord(dt.date(2000, 1, 1), -5.0, 2.0, 10.0),
            DailyRecord(dt.date(2000, 1, 2), -3.0, 1.0, 11.0),
        )
        data = Dataset(records=recs)
        spec = transition_spec(OSLO, DayInputs(temp=-3.0, precip=1.0, prev_depth=10.0))
        assert log_likelihood(OSLO, data) == pytest.approx(
            zig_log_density(spec, 11.0), rel=1e-12
        )

    def test_brute_force_oracle(self):
        # Independent re-evaluation from the raw formulas, scalar math only.
        data = synth_station(100, seed=5)
        expected = 0.0
        for t in range(1, len(data)):
            rec, prev = data[t], data[t - 1]
            mean = (
                math.exp(OSLO.mu)
                + rec.precipitation
                * OSLO.beta0
                / (1.0 + math.exp(-(OSLO.beta1 + OSLO.beta2 * rec.temperature)))
                + prev.snow_depth
                / (
                    1.0
                    + math.exp(
                        -(
                            OSLO.beta3
                            + (OSLO.beta4 + OSLO.beta5 * rec.precipitation)
                            * rec.temperature
                        )
                    )
                )
            )
            var = OSLO.sigma1_sq + OSLO.sigma2_sq * (mean - prev.snow_depth) ** 2
            p0 = 1.0 / (1.0 + math.exp(-(OSLO.beta6 + OSLO.beta7 * mean)))
            if rec.snow_depth == 0.0:
                expected += math.log(p0)
            else:
                k = mean * mean / var
                th = var / mean
                expected += (
                    math.log(1.0 - p0)
                    + (k - 1.0) * math.log(rec.snow_depth)
                    - rec.snow_depth / th
                    - k * math.log(th)
                    - math.lgamma(k)
                )
        assert log_likelihood(OSLO, data) == pytest.approx(expected, abs=1e-9)

    def test_window_order_invariance(self):
        import datetime as dt

        from snowcast.data import DailyRecord, Dataset

        base = synth_station(60, seed=9)
        # knock out one day to split into two windows
        recs = list(base.records)
        recs[30] = DailyRecord(recs[30].date)
        data = Dataset(records=tuple(recs))
        # same value computed windowwise in either order
        first = Dataset(records=tuple(recs[:30]) + tuple(recs[30:]))
        assert log_likelihood(OSLO, data) == pytest.approx(
            log_likelihood(OSLO, first), rel=1e-12
        )

    def test_no_usable_transition(self):
        import datetime as dt

        from snowcast.data import DailyRecord, Dataset

        recs = (
            DailyRecord(dt.date(2000, 1, 1), -5.0, 2.0, None),
            DailyRecord(dt.date(2000, 1, 2), -3.0, 1.0, None),
        )
        with pytest.raises(ValueError, match="no usable transitions"):
            log_likelihood(OSLO, Dataset(records=recs))

    def test_local_maximum_at_generating_values(self):
        # Perturbing key parameters away from truth lowers the likelihood on
        # a large synthetic sample.
        data = synth_station(366 * 8, seed=13)
        base = log_likelihood(OSLO, data)
        for field in ("beta2", "beta3", "beta7", "sigma1_sq", "sigma2_sq"):
            for factor in (0.8, 1.2):
                kwargs = {f: getattr(OSLO, f) for f in OSLO.__dataclass_fields__}
                kwargs[field] = kwargs[field] * factor
                assert log_likelihood(ShortTermParams(**kwargs), data) < base, field
