"""Seasonal-trend AR temperature model and zero-inflated gamma precipitation model."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import expit, gammaln, log_expit

from .data import Dataset, contiguous_windows, season_day
from .zig import inverse_logit

#: Fourier period in days; fixed so that the trend repeats once per year.
SEASON_PERIOD = 366.0

#: Expected wet-day amounts are capped here (mm) to keep the log link finite.
AMOUNT_CAP = 1e6
_AMOUNT_PRED_CAP = math.log(AMOUNT_CAP)

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class FourierTrend:
    """Truncated Fourier series over the day of the year."""

    order: int
    a0: float
    a: tuple[float, ...] = ()
    b: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))
        if len(self.a) != self.order or len(self.b) != self.order:
            raise ValueError("coefficient sequences must match the Fourier order")


def fourier_eval(trend: FourierTrend, s: int | float) -> float:
    """Trend value at season day s (sin coefficients a_k, cos coefficients b_k)."""
    omega = 2.0 * math.pi / SEASON_PERIOD
    total = trend.a0
    for k in range(1, trend.order + 1):
        angle = k * omega * s
        total += trend.a[k - 1] * math.sin(angle) + trend.b[k - 1] * math.cos(angle)
    return total


def fourier_design(s: np.ndarray, order: int) -> np.ndarray:
    """Design matrix with columns [1, sin(k w s)..., cos(k w s)...]."""
    s = np.asarray(s, dtype=float)
    omega = 2.0 * math.pi / SEASON_PERIOD
    cols = [np.ones_like(s)]
    for k in range(1, order + 1):
        cols.append(np.sin(k * omega * s))
    for k in range(1, order + 1):
        cols.append(np.cos(k * omega * s))
    return np.column_stack(cols)


def trend_from_coefs(order: int, coefs: np.ndarray) -> FourierTrend:
    """Inverse of the fourier_design column layout."""
    return FourierTrend(
        order=order,
        a0=float(coefs[0]),
        a=tuple(float(c) for c in coefs[1 : order + 1]),
        b=tuple(float(c) for c in coefs[order + 1 : 2 * order + 1]),
    )


def trend_coefs(trend: FourierTrend) -> np.ndarray:
    return np.array([trend.a0, *trend.a, *trend.b], dtype=float)


@dataclass(frozen=True)
class TempParams:
    """AR(p) deviations around a seasonal mean, Gaussian innovations."""

    trend: FourierTrend
    ar: tuple[float, ...] = ()
    innovation_sd: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ar", tuple(self.ar))
        if not self.innovation_sd > 0:
            raise ValueError("innovation_sd must be positive")

    @property
    def ar_order(self) -> int:
        return len(self.ar)


@dataclass(frozen=True)
class PrecipParams:
    """Occurrence/amount precipitation model with a shared covariate basis.

    Both parts use a seasonal trend, lagged wet/dry indicators and a
    polynomial in standardized temperature; the positive part is gamma with
    constant shape (constant coefficient of variation).
    """

    amount_trend: FourierTrend
    amount_occ_lags: tuple[float, ...] = ()
    amount_temp_poly: tuple[float, ...] = ()
    amount_cv_shape: float = 1.0
    zero_trend: FourierTrend = field(default_factory=lambda: FourierTrend(order=0, a0=0.0))
    zero_occ_lags: tuple[float, ...] = ()
    zero_temp_poly: tuple[float, ...] = ()
    temp_center: float = 0.0
    temp_scale: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "amount_occ_lags", tuple(self.amount_occ_lags))
        object.__setattr__(self, "amount_temp_poly", tuple(self.amount_temp_poly))
        object.__setattr__(self, "zero_occ_lags", tuple(self.zero_occ_lags))
        object.__setattr__(self, "zero_temp_poly", tuple(self.zero_temp_poly))
        if not self.amount_cv_shape > 0:
            raise ValueError("amount_cv_shape must be positive")
        if not self.temp_scale > 0:
            raise ValueError("temp_scale must be positive")

    @property
    def max_lag(self) -> int:
        return max(len(self.amount_occ_lags), len(self.zero_occ_lags))


def _temp_powers(params: PrecipParams, temp: float, coefs: Sequence[float]) -> float:
    z = (temp - params.temp_center) / params.temp_scale
    total = 0.0
    power = 1.0
    for c in coefs:
        power *= z
        total += c * power
    return total


def _occ_sum(coefs: Sequence[float], occ_history: Sequence[int]) -> float:
    if len(occ_history) < len(coefs):
        raise ValueError(f"need {len(coefs)} lagged occurrence values, got {len(occ_history)}")
    return sum(c * occ_history[j] for j, c in enumerate(coefs))


def precip_amount_mean(
    params: PrecipParams, s: int, occ_history: Sequence[int], temp: float
) -> float:
    """Expected wet-day amount in mm; occ_history[0] is yesterday's indicator."""
    predictor = (
        fourier_eval(params.amount_trend, s)
        + _occ_sum(params.amount_occ_lags, occ_history)
        + _temp_powers(params, temp, params.amount_temp_poly)
    )
    return math.exp(min(predictor, _AMOUNT_PRED_CAP))


def precip_zero_probability(
    params: PrecipParams, s: int, occ_history: Sequence[int], temp: float
) -> float:
    """Probability of a dry day from the analogous logistic predictor."""
    predictor = (
        fourier_eval(params.zero_trend, s)
        + _occ_sum(params.zero_occ_lags, occ_history)
        + _temp_powers(params, temp, params.zero_temp_poly)
    )
    return inverse_logit(predictor)


def precip_simulate(
    params: PrecipParams,
    s: int,
    occ_history: Sequence[int],
    temp: float,
    rng: np.random.Generator,
) -> tuple[float, int]:
    """Draw (amount, occurred) for one day; dry days return (0.0, 0)."""
    p_dry = precip_zero_probability(params, s, occ_history, temp)
    if rng.random() < p_dry:
        return 0.0, 0
    mean = precip_amount_mean(params, s, occ_history, temp)
    k = params.amount_cv_shape
    return float(rng.gamma(k)) * (mean / k), 1


def temp_log_likelihood(params: TempParams, data: Dataset) -> float:
    """Gaussian likelihood of AR residuals, conditioning on the first p values
    of each gap-free temperature window."""
    arrays = _temp_arrays(data, params.ar_order)
    coefs = trend_coefs(params.trend)
    return _temp_loglik_arrays(coefs, np.asarray(params.ar), params.innovation_sd, arrays)


def _temp_arrays(data: Dataset, ar_order: int) -> dict[str, np.ndarray]:
    windows = contiguous_windows(data, ("temperature",), min_lag=ar_order)
    if not windows:
        raise ValueError("no usable temperature window")
    temps, sdays, targets = [], [], []
    offset = 0
    for a, b in windows:
        for t in range(a, b):
            temps.append(data[t].temperature)
            sdays.append(season_day(data[t].date))
        targets.extend(range(offset + ar_order, offset + (b - a)))
        offset += b - a
    return {
        "temps": np.asarray(temps, dtype=float),
        "sdays": np.asarray(sdays, dtype=float),
        "targets": np.asarray(targets, dtype=int),
    }


def _temp_loglik_arrays(
    trend_coef: np.ndarray, ar: np.ndarray, sd: float, arrays: dict[str, np.ndarray]
) -> float:
    design = arrays.get("design")
    if design is None or design.shape[1] != len(trend_coef):
        design = fourier_design(arrays["sdays"], (len(trend_coef) - 1) // 2)
        arrays["design"] = design
    dev = arrays["temps"] - design @ trend_coef
    idx = arrays["targets"]
    resid = dev[idx].copy()
    for j, alpha in enumerate(ar, start=1):
        resid -= alpha * dev[idx - j]
    n = resid.size
    return float(-0.5 * np.sum(np.square(resid / sd)) - n * math.log(sd) - 0.5 * n * _LOG_2PI)


def temp_simulate(
    params: TempParams,
    history: Sequence[tuple[dt.date, float]],
    horizon: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulate `horizon` days past the end of `history` (consecutive days)."""
    p = params.ar_order
    if len(history) < max(p, 1):
        raise ValueError(f"history must hold at least {max(p, 1)} days")
    dates = [d for d, _ in history]
    for prev, cur in zip(dates, dates[1:]):
        if (cur - prev).days != 1:
            raise ValueError("history dates must be consecutive")
    devs = [temp - fourier_eval(params.trend, season_day(date)) for date, temp in history]
    devs = devs[len(devs) - p :] if p else []
    last_date = dates[-1]
    out = np.empty(horizon)
    for i in range(horizon):
        date = last_date + dt.timedelta(days=i + 1)
        mean_dev = sum(a * devs[-j] for j, a in enumerate(params.ar, start=1))
        dev = mean_dev + params.innovation_sd * rng.standard_normal()
        out[i] = dev + fourier_eval(params.trend, season_day(date))
        if p:
            devs.append(dev)
            devs.pop(0)
    return out


def _precip_arrays(data: Dataset, q_max: int, s_max: int) -> dict[str, np.ndarray]:
    """Per-day covariates for the precipitation likelihood (lags from data)."""
    windows = contiguous_windows(data, ("precipitation", "temperature"), min_lag=q_max)
    if not windows:
        raise ValueError("no usable precipitation window")
    amounts, sdays, temps, occ_rows = [], [], [], []
    for a, b in windows:
        occ = [1 if data[t].precipitation > 0 else 0 for t in range(a, b)]
        for t in range(a + q_max, b):
            i = t - a
            amounts.append(data[t].precipitation)
            sdays.append(season_day(data[t].date))
            temps.append(data[t].temperature)
            occ_rows.append([occ[i - j] for j in range(1, q_max + 1)])
    occ_mat = np.asarray(occ_rows, dtype=float)
    if occ_mat.size == 0:
        occ_mat = occ_mat.reshape(len(amounts), 0)
    return {
        "amount": np.asarray(amounts, dtype=float),
        "sdays": np.asarray(sdays, dtype=float),
        "temp": np.asarray(temps, dtype=float),
        "occ": occ_mat,
    }


def _power_matrix(z: np.ndarray, s_max: int) -> np.ndarray:
    if s_max == 0:
        return np.empty((z.size, 0))
    return np.column_stack([z**j for j in range(1, s_max + 1)])


def _precip_loglik_arrays(params: PrecipParams, arrays: dict[str, np.ndarray]) -> float:
    amount = arrays["amount"]
    occ = arrays["occ"]
    q_a = len(params.amount_occ_lags)
    q_z = len(params.zero_occ_lags)
    s_a = len(params.amount_temp_poly)
    s_z = len(params.zero_temp_poly)

    key = ("std", params.temp_center, params.temp_scale, max(s_a, s_z))
    cached = arrays.get("powers")
    if cached is None or arrays.get("powers_key") != key:
        z = (arrays["temp"] - params.temp_center) / params.temp_scale
        cached = _power_matrix(z, max(s_a, s_z))
        arrays["powers"] = cached
        arrays["powers_key"] = key
    powers = cached

    design_a = arrays.get("design_amount")
    if design_a is None or design_a.shape[1] != 2 * params.amount_trend.order + 1:
        design_a = fourier_design(arrays["sdays"], params.amount_trend.order)
        arrays["design_amount"] = design_a
    design_z = arrays.get("design_zero")
    if design_z is None or design_z.shape[1] != 2 * params.zero_trend.order + 1:
        design_z = fourier_design(arrays["sdays"], params.zero_trend.order)
        arrays["design_zero"] = design_z

    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        pred_zero = design_z @ trend_coefs(params.zero_trend)
        if q_z:
            pred_zero = pred_zero + occ[:, :q_z] @ np.asarray(params.zero_occ_lags)
        if s_z:
            pred_zero = pred_zero + powers[:, :s_z] @ np.asarray(params.zero_temp_poly)

        wet = amount > 0
        total = float(np.sum(log_expit(pred_zero[~wet])))
        if np.any(wet):
            pred_amt = design_a @ trend_coefs(params.amount_trend)
            if q_a:
                pred_amt = pred_amt + occ[:, :q_a] @ np.asarray(params.amount_occ_lags)
            if s_a:
                pred_amt = pred_amt + powers[:, :s_a] @ np.asarray(params.amount_temp_poly)
            k = params.amount_cv_shape
            r = amount[wet]
            mean = np.exp(np.minimum(pred_amt[wet], _AMOUNT_PRED_CAP))
            total += float(
                np.sum(
                    log_expit(-pred_zero[wet])
                    + (k - 1.0) * np.log(r)
                    - r * k / mean
                    - k * np.log(mean / k)
                )
                - wet.sum() * gammaln(k)
            )
    return total if math.isfinite(total) else -math.inf


def precip_log_likelihood(params: PrecipParams, data: Dataset) -> float:
    """Zero-inflated gamma likelihood over all usable precipitation days."""
    s_max = max(len(params.amount_temp_poly), len(params.zero_temp_poly))
    arrays = _precip_arrays(data, params.max_lag, s_max)
    return _precip_loglik_arrays(params, arrays)


def simulate_weather(
    temp_params: TempParams,
    precip_params: PrecipParams,
    start_date: dt.date,
    days: int,
    rng: np.random.Generator,
) -> tuple[list[dt.date], np.ndarray, np.ndarray]:
    """Joint daily weather simulation; histories start neutral (trend values,
    dry). Draw order per day is fixed: temperature innovation, occurrence
    uniform, then the amount when wet."""
    p = temp_params.ar_order
    devs = [0.0] * p
    # Most-recent-first occurrence lags, the convention of precip_simulate.
    occ: list[int] = [0] * precip_params.max_lag
    dates, temps, precips = [], np.empty(days), np.empty(days)
    for i in range(days):
        date = start_date + dt.timedelta(days=i)
        s = season_day(date)
        mean_dev = sum(a * devs[-j] for j, a in enumerate(temp_params.ar, start=1))
        dev = mean_dev + temp_params.innovation_sd * rng.standard_normal()
        temp = dev + fourier_eval(temp_params.trend, s)
        if p:
            devs.append(dev)
            devs.pop(0)
        amount, occurred = precip_simulate(precip_params, s, occ, temp, rng)
        if precip_params.max_lag:
            occ.insert(0, occurred)
            occ.pop()
        dates.append(date)
        temps[i] = temp
        precips[i] = amount
    return dates, temps, precips
