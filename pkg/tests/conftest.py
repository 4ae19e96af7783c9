"""Shared fixtures: reference parameter sets and synthetic station builders."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from snowcast.data import DailyRecord, Dataset
from snowcast.direct import DirectParams
from snowcast.short_term import ShortTermParams, simulate_depth_series
from snowcast.weather import FourierTrend, PrecipParams, TempParams, simulate_weather

# Published Oslo estimates for the short-term model; the standard generator
# for synthetic snow series in this suite.
OSLO = ShortTermParams(
    mu=-6.92,
    beta0=0.96,
    beta1=0.88,
    beta2=-1.76,
    beta3=1.99,
    beta4=-0.30,
    beta5=-0.03,
    beta6=4.13,
    beta7=-1.97,
    sigma1_sq=0.63,
    sigma2_sq=1.79,
)

GEILO = ShortTermParams(
    mu=-5.88,
    beta0=0.72,
    beta1=1.74,
    beta2=-1.19,
    beta3=2.86,
    beta4=-0.25,
    beta5=-0.05,
    beta6=3.61,
    beta7=-0.75,
    sigma1_sq=1.04,
    sigma2_sq=2.83,
)

# A mild coastal-like climate: winters around -6, summers around +16.
TEMP_DEMO = TempParams(
    trend=FourierTrend(order=1, a0=5.0, a=(0.0,), b=(-11.0,)),
    ar=(0.75,),
    innovation_sd=2.6,
)

PRECIP_DEMO = PrecipParams(
    amount_trend=FourierTrend(order=1, a0=1.1, a=(0.0,), b=(0.15,)),
    amount_occ_lags=(0.3,),
    amount_temp_poly=(0.08,),
    amount_cv_shape=0.7,
    zero_trend=FourierTrend(order=1, a0=0.1, a=(0.0,), b=(0.0,)),
    zero_occ_lags=(-1.4,),
    zero_temp_poly=(0.02,),
    temp_center=5.0,
    temp_scale=8.0,
)

# A stable self-exciting depth model (subcritical lag feedback).
DIRECT_DEMO = DirectParams(
    trend=FourierTrend(order=2, a0=0.6, a=(0.3, 0.05), b=(1.95, -0.1)),
    occ_lags=(0.8,),
    depth_lags=(0.010, 0.002),
    zero_intercept=2.5,
    zero_slope=-1.2,
    sigma1_sq=0.8,
    sigma2_sq=1.5,
)

START_DATE = dt.date(2000, 7, 1)


def synth_station(
    n_days: int,
    seed: int,
    short: ShortTermParams = OSLO,
    temp: TempParams = TEMP_DEMO,
    precip: PrecipParams = PRECIP_DEMO,
    start: dt.date = START_DATE,
    station: str = "synth",
) -> Dataset:
    """Weather from the demo models, depth from the short-term model."""
    rng = np.random.default_rng(seed)
    dates, temps, precips = simulate_weather(temp, precip, start, n_days, rng)
    depths = simulate_depth_series(short, temps, precips, 0.0, rng)
    records = tuple(
        DailyRecord(d, float(t), float(r), float(s))
        for d, t, r, s in zip(dates, temps, precips, depths)
    )
    return Dataset(records=records, station_label=station)


@pytest.fixture(scope="session")
def small_station() -> Dataset:
    return synth_station(366 * 3, seed=101)


@pytest.fixture(scope="session")
def medium_station() -> Dataset:
    return synth_station(366 * 6, seed=202)
