"""Monte Carlo snow-depth forecasting: weather-driven leading days, model-driven
continuation, ensemble summaries and CSV export."""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit

from .data import Dataset, season_day
from .direct import MEAN_CAP, DirectParams
from .short_term import MEAN_FLOOR, ShortTermParams
from .weather import AMOUNT_CAP, PrecipParams, TempParams, fourier_eval

_MODEL_TAGS = ("none", "model1", "model2")


@dataclass(frozen=True)
class StartState:
    """Observed history ending at the forecast origin; index -1 is 'today'.

    Temperatures and precipitation may be NaN where unobserved; depths must be
    fully observed. Each engine checks that the lags it needs are finite.
    """

    dates: tuple[dt.date, ...]
    depths: tuple[float, ...]
    temps: tuple[float, ...]
    precips: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(self.dates)
        if n == 0:
            raise ValueError("start state needs at least one day")
        if not (len(self.depths) == len(self.temps) == len(self.precips) == n):
            raise ValueError("history fields must have equal length")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if (cur - prev).days != 1:
                raise ValueError("history dates must be consecutive")
        for d in self.depths:
            if not (math.isfinite(d) and d >= 0):
                raise ValueError("depth history must be observed and nonnegative")

    @classmethod
    def from_dataset(cls, data: Dataset, end_index: int | None = None, history: int = 10) -> "StartState":
        """Take the `history` rows ending at end_index (default: last row)."""
        end = len(data) - 1 if end_index is None else end_index
        if end < 0 or end >= len(data):
            raise ValueError("end_index out of range")
        lo = max(0, end - history + 1)
        rows = data.records[lo : end + 1]
        if any(r.snow_depth is None for r in rows):
            raise ValueError("snow depth missing inside the requested history")
        nan = float("nan")
        return cls(
            dates=tuple(r.date for r in rows),
            depths=tuple(r.snow_depth for r in rows),
            temps=tuple(nan if r.temperature is None else r.temperature for r in rows),
            precips=tuple(nan if r.precipitation is None else r.precipitation for r in rows),
        )


@dataclass(frozen=True)
class ForecastRequest:
    """One forecast task: origin state, known weather, horizon and model choice."""

    start: StartState
    weather_forecast: tuple[tuple[float, float], ...]
    horizon: int
    n_paths: int = 1000
    seed: int = 0
    long_term_model: str = "none"

    def __post_init__(self) -> None:
        object.__setattr__(self, "weather_forecast", tuple(tuple(w) for w in self.weather_forecast))
        if self.horizon < 1:
            raise ValueError("horizon must be at least one day")
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a nonnegative 64-bit integer")
        if self.long_term_model not in _MODEL_TAGS:
            raise ValueError(f"long_term_model must be one of {_MODEL_TAGS}")
        if self.delta > self.horizon:
            raise ValueError("weather forecast cannot be longer than the horizon")
        if self.delta < self.horizon and self.long_term_model == "none":
            raise ValueError("days beyond the weather forecast need a long-term model")
        for temp, precip in self.weather_forecast:
            if not (math.isfinite(temp) and math.isfinite(precip) and precip >= 0):
                raise ValueError("forecast weather must be finite with nonnegative precipitation")

    @property
    def delta(self) -> int:
        return len(self.weather_forecast)


@dataclass(frozen=True, eq=False)
class ForecastEnsemble:
    """Simulated paths (rows) by lead day (columns); weather rows are the
    supplied forecast up to delta and model-simulated (or NaN) after."""

    dates: tuple[dt.date, ...]
    depths: np.ndarray
    temps: np.ndarray
    precips: np.ndarray
    seed: int
    model: str
    delta: int

    @property
    def n_paths(self) -> int:
        return self.depths.shape[0]

    @property
    def horizon(self) -> int:
        return self.depths.shape[1]


@dataclass(frozen=True, eq=False)
class ForecastSummary:
    dates: tuple[dt.date, ...]
    mean: np.ndarray
    quantiles: dict[float, np.ndarray]


def _path_rngs(seed: int, n_paths: int) -> list[np.random.Generator]:
    # Counter-based substreams: path i depends only on (seed, i), so ensembles
    # are reproducible and path draws do not change with n_paths.
    return [
        np.random.Generator(np.random.Philox(key=(int(seed) << 64) + p))
        for p in range(n_paths)
    ]


def _shift(history: np.ndarray, newest: np.ndarray) -> np.ndarray:
    if history.shape[1] == 0:
        return history
    return np.column_stack([newest, history[:, :-1]])


def _draw_depths(
    mean: np.ndarray,
    var: np.ndarray,
    p_zero: np.ndarray,
    rngs: list[np.random.Generator],
) -> np.ndarray:
    mean = np.maximum(mean, MEAN_FLOOR)
    shape = mean * mean / var
    scale = var / mean
    out = np.empty(len(rngs))
    for i, rng in enumerate(rngs):
        if rng.random() < p_zero[i]:
            out[i] = 0.0
        else:
            out[i] = rng.gamma(shape[i]) * scale[i]
    return out


def _short_term_moments(
    params: ShortTermParams, temp: np.ndarray, precip: np.ndarray, prev: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = (
        math.exp(params.mu)
        + precip * params.beta0 * expit(params.beta1 + params.beta2 * temp)
        + prev * expit(params.beta3 + (params.beta4 + params.beta5 * precip) * temp)
    )
    var = params.sigma1_sq + params.sigma2_sq * np.square(mean - prev)
    p_zero = expit(params.beta6 + params.beta7 * mean)
    return mean, var, p_zero


def _check_history(values: Sequence[float], needed: int, label: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if needed and (arr.size < needed or not np.all(np.isfinite(arr[arr.size - needed :]))):
        raise ValueError(f"start state needs {needed} observed {label} days")
    return arr


def _run_paths(
    request: ForecastRequest,
    short: ShortTermParams | None,
    direct: DirectParams | None,
    temp_params: TempParams | None,
    precip_params: PrecipParams | None,
) -> ForecastEnsemble:
    start = request.start
    horizon, delta, n = request.horizon, request.delta, request.n_paths
    if delta > 0 and short is None:
        raise ValueError("weather-driven leading days need short-term parameters")
    origin = start.dates[-1]
    dates = tuple(origin + dt.timedelta(days=i + 1) for i in range(horizon))
    sdays = [season_day(d) for d in dates]
    rngs = _path_rngs(request.seed, n)

    depths = np.empty((n, horizon))
    temps_out = np.full((n, horizon), np.nan)
    precips_out = np.full((n, horizon), np.nan)
    prev_depth = np.full(n, start.depths[-1])

    if direct is not None:
        lag2 = max(direct.max_lag, 1)
        hist = _check_history(start.depths, lag2, "snow depth")
        depth_lags = np.tile(hist[::-1][:lag2], (n, 1))
    else:
        depth_lags = np.empty((n, 0))

    if temp_params is not None:
        p_t = temp_params.ar_order
        temps_hist = _check_history(start.temps, max(p_t, 1), "temperature")
        dev0 = [
            temps_hist[-1 - j] - fourier_eval(temp_params.trend, season_day(start.dates[-1 - j]))
            for j in range(p_t)
        ]
        temp_devs = np.tile(np.asarray(dev0), (n, 1))
        ar = np.asarray(temp_params.ar)
    else:
        temp_devs = np.empty((n, 0))
        ar = np.empty(0)

    if precip_params is not None:
        q_p = precip_params.max_lag
        prec_hist = _check_history(start.precips, q_p, "precipitation")
        occ0 = (prec_hist[::-1][:q_p] > 0).astype(float) if q_p else np.empty(0)
        precip_occ = np.tile(occ0, (n, 1))
    else:
        precip_occ = np.empty((n, 0))

    for i in range(horizon):
        s = sdays[i]
        if i < delta:
            t_i, r_i = request.weather_forecast[i]
            temp_vec = np.full(n, t_i)
            precip_vec = np.full(n, r_i)
        elif request.long_term_model == "model1":
            trend_val = fourier_eval(temp_params.trend, s)
            dev_mean = temp_devs @ ar if ar.size else np.zeros(n)
            eps = np.array([rng.standard_normal() for rng in rngs])
            dev = dev_mean + temp_params.innovation_sd * eps
            temp_vec = dev + trend_val
            z = (temp_vec - precip_params.temp_center) / precip_params.temp_scale
            pred_zero = np.full(n, fourier_eval(precip_params.zero_trend, s))
            pred_amt = np.full(n, fourier_eval(precip_params.amount_trend, s))
            if precip_params.zero_occ_lags:
                pred_zero += precip_occ[:, : len(precip_params.zero_occ_lags)] @ np.asarray(
                    precip_params.zero_occ_lags
                )
            if precip_params.amount_occ_lags:
                pred_amt += precip_occ[:, : len(precip_params.amount_occ_lags)] @ np.asarray(
                    precip_params.amount_occ_lags
                )
            n_pow = max(len(precip_params.zero_temp_poly), len(precip_params.amount_temp_poly))
            power = np.ones(n)
            for j in range(n_pow):
                power = power * z
                if j < len(precip_params.zero_temp_poly):
                    pred_zero += precip_params.zero_temp_poly[j] * power
                if j < len(precip_params.amount_temp_poly):
                    pred_amt += precip_params.amount_temp_poly[j] * power
            p_dry = expit(pred_zero)
            k = precip_params.amount_cv_shape
            amt_scale = np.minimum(np.exp(pred_amt), AMOUNT_CAP) / k
            precip_vec = np.empty(n)
            for p, rng in enumerate(rngs):
                if rng.random() < p_dry[p]:
                    precip_vec[p] = 0.0
                else:
                    precip_vec[p] = rng.gamma(k) * amt_scale[p]
            temp_devs = _shift(temp_devs, dev)
        else:  # model2 continuation: depth dynamics only
            pred = np.full(n, fourier_eval(direct.trend, s))
            if direct.occ_lags:
                occ = (depth_lags[:, : len(direct.occ_lags)] > 0).astype(float)
                pred += occ @ np.asarray(direct.occ_lags)
            if direct.depth_lags:
                pred += depth_lags[:, : len(direct.depth_lags)] @ np.asarray(direct.depth_lags)
            mean = np.maximum(np.minimum(np.exp(pred), MEAN_CAP), MEAN_FLOOR)
            ref = depth_lags[:, 0] if direct.depth_lags else 0.0
            var = direct.sigma1_sq + direct.sigma2_sq * np.square(mean - ref)
            p_zero = expit(direct.zero_intercept + direct.zero_slope * mean)
            new_depth = _draw_depths(mean, var, p_zero, rngs)
            depths[:, i] = new_depth
            prev_depth = new_depth
            depth_lags = _shift(depth_lags, new_depth)
            continue

        # Weather in hand (given or simulated): advance depth one day.
        temps_out[:, i] = temp_vec
        precips_out[:, i] = precip_vec
        mean, var, p_zero = _short_term_moments(short, temp_vec, precip_vec, prev_depth)
        new_depth = _draw_depths(mean, var, p_zero, rngs)
        depths[:, i] = new_depth
        prev_depth = new_depth
        depth_lags = _shift(depth_lags, new_depth)
        if i < delta and temp_params is not None:
            temp_devs = _shift(
                temp_devs, np.full(n, t_i - fourier_eval(temp_params.trend, s))
            )
        if precip_params is not None:
            precip_occ = _shift(precip_occ, (precip_vec > 0).astype(float))

    return ForecastEnsemble(
        dates=dates,
        depths=depths,
        temps=temps_out,
        precips=precips_out,
        seed=request.seed,
        model=request.long_term_model,
        delta=delta,
    )


def forecast_short(short_params: ShortTermParams, request: ForecastRequest) -> ForecastEnsemble:
    """Track depth through the horizon with a supplied weather forecast (delta = horizon)."""
    if request.delta != request.horizon:
        raise ValueError("forecast_short needs weather for every horizon day")
    return _run_paths(request, short=short_params, direct=None, temp_params=None, precip_params=None)


def forecast_long_model2(
    short_params: ShortTermParams | None,
    direct_params: DirectParams,
    request: ForecastRequest,
) -> ForecastEnsemble:
    """Weather-driven days up to delta, then the depth-lag model per path."""
    if request.long_term_model != "model2":
        raise ValueError("request.long_term_model must be 'model2'")
    return _run_paths(request, short=short_params, direct=direct_params, temp_params=None, precip_params=None)


def forecast_long_model1(
    short_params: ShortTermParams,
    temp_params: TempParams,
    precip_params: PrecipParams,
    request: ForecastRequest,
) -> ForecastEnsemble:
    """Weather-driven days up to delta, then simulated weather feeding the
    short-term depth transitions."""
    if request.long_term_model != "model1":
        raise ValueError("request.long_term_model must be 'model1'")
    return _run_paths(
        request, short=short_params, direct=None, temp_params=temp_params, precip_params=precip_params
    )


def summarize(
    ensemble: ForecastEnsemble, quantiles: Sequence[float] = (0.05, 0.95)
) -> ForecastSummary:
    """Per-day mean and order-statistic quantiles (linear interpolation)."""
    if ensemble.n_paths < 2:
        raise ValueError("summaries need at least two paths")
    for q in quantiles:
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"quantile {q} outside [0, 1]")
    mean = ensemble.depths.mean(axis=0)
    qs = {
        float(q): np.quantile(ensemble.depths, q, axis=0, method="linear")
        for q in quantiles
    }
    return ForecastSummary(dates=ensemble.dates, mean=mean, quantiles=qs)


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_ensemble_csv(ensemble: ForecastEnsemble, path: str | Path) -> None:
    """Long-format dump: one row per (path, day)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# seed={ensemble.seed} model={ensemble.model} delta={ensemble.delta}\n")
        fh.write("path,day,date,temp,precip,depth\n")
        for p in range(ensemble.n_paths):
            for d in range(ensemble.horizon):
                fh.write(
                    f"{p},{d + 1},{ensemble.dates[d].isoformat()},"
                    f"{_fmt(ensemble.temps[p, d])},{_fmt(ensemble.precips[p, d])},"
                    f"{_fmt(ensemble.depths[p, d])}\n"
                )


def write_summary_csv(
    ensemble: ForecastEnsemble,
    path: str | Path,
    quantiles: Sequence[float] = (0.05, 0.95),
) -> None:
    """Per-day mean and quantile bands, one row per lead day."""
    summary = summarize(ensemble, quantiles)
    labels = [f"q{round(q * 100):02d}" for q in quantiles]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# seed={ensemble.seed} model={ensemble.model} delta={ensemble.delta}\n")
        fh.write("day,date," + ",".join(["mean", *labels]) + "\n")
        for d in range(ensemble.horizon):
            cells = [repr(float(summary.mean[d]))]
            cells += [repr(float(summary.quantiles[float(q)][d])) for q in quantiles]
            fh.write(f"{d + 1},{ensemble.dates[d].isoformat()}," + ",".join(cells) + "\n")
