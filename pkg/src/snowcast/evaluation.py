"""Forecast verification: PIT goodness-of-fit and cross-validated MAE by lead day."""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtr

from . import short_term as short_mod
from .data import DailyRecord, Dataset, contiguous_windows, season_day
from .direct import DirectParams
from .direct import _moments as _direct_moments
from .estimation import FitConfig, fit_direct, fit_precipitation, fit_short_term, fit_temperature
from .forecast import ForecastRequest, StartState, _run_paths
from .short_term import ShortTermParams
from .weather import (
    PrecipParams,
    TempParams,
    fourier_eval,
    precip_amount_mean,
    precip_zero_probability,
)
from .zig import regularized_gamma_p

WINTER_MONTHS = (12, 1, 2)


@dataclass
class PitReport:
    """Probability integral transform values with a uniform-fit summary."""

    values: np.ndarray
    histogram: np.ndarray
    ks_statistic: float
    n: int


@dataclass
class SkillReport:
    """Cross-validated MAE per lead day for one (model, delta) configuration."""

    model: str
    delta: int
    months: tuple[int, ...]
    per_horizon_mae: np.ndarray
    normalized_mae: np.ndarray
    mean_depth: float
    n_forecasts: int


def mae(observed: Sequence[float], predicted: Sequence[float]) -> float:
    """Mean absolute difference between paired sequences."""
    obs = np.asarray(observed, dtype=float)
    pred = np.asarray(predicted, dtype=float)
    if obs.shape != pred.shape or obs.size == 0:
        raise ValueError("observed and predicted must be equally long and nonempty")
    return float(np.mean(np.abs(obs - pred)))


def ks_uniform_statistic(values: np.ndarray) -> float:
    """Kolmogorov-Smirnov distance of a sample from U[0, 1]."""
    u = np.sort(np.asarray(values, dtype=float))
    n = u.size
    if n == 0:
        raise ValueError("empty sample")
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n)))


def _zig_interval(p_zero: float, mean: float, var: float, obs: float) -> tuple[float, float]:
    # PIT interval [F(x-), F(x)]: the atom at zero maps to [0, p_zero].
    if obs == 0.0:
        return 0.0, p_zero
    mean = max(mean, short_mod.MEAN_FLOOR)
    shape = mean * mean / var
    scale = var / mean
    f = p_zero + (1.0 - p_zero) * regularized_gamma_p(shape, obs / scale)
    return f, f


def _pit_intervals_short(
    params: ShortTermParams, data: Dataset, months: tuple[int, ...] | None
) -> list[tuple[float, float]]:
    out = []
    for a, b in contiguous_windows(data, short_mod.TRANSITION_FIELDS, min_lag=1):
        for t in range(a + 1, b):
            rec = data[t]
            if months and rec.date.month not in months:
                continue
            m, v, p0 = short_mod._moments(
                params, rec.temperature, rec.precipitation, data[t - 1].snow_depth
            )
            out.append(_zig_interval(p0, m, v, rec.snow_depth))
    return out


def _pit_intervals_direct(
    params: DirectParams, data: Dataset, months: tuple[int, ...] | None
) -> list[tuple[float, float]]:
    lag = max(params.max_lag, 1)
    out = []
    for a, b in contiguous_windows(data, ("snow_depth",), min_lag=lag):
        depths = [data[t].snow_depth for t in range(a, b)]
        for t in range(a + lag, b):
            rec = data[t]
            if months and rec.date.month not in months:
                continue
            i = t - a
            hist = depths[i - lag : i][::-1]
            occ = [1 if d > 0 else 0 for d in hist]
            m, v, p0 = _direct_moments(params, season_day(rec.date), occ, hist)
            out.append(_zig_interval(p0, m, v, rec.snow_depth))
    return out


def _pit_intervals_precip(
    params: PrecipParams, data: Dataset, months: tuple[int, ...] | None
) -> list[tuple[float, float]]:
    lag = params.max_lag
    out = []
    for a, b in contiguous_windows(data, ("precipitation", "temperature"), min_lag=lag):
        occ_series = [1 if data[t].precipitation > 0 else 0 for t in range(a, b)]
        for t in range(a + lag, b):
            rec = data[t]
            if months and rec.date.month not in months:
                continue
            i = t - a
            occ = occ_series[i - lag : i][::-1] if lag else []
            s = season_day(rec.date)
            p0 = precip_zero_probability(params, s, occ, rec.temperature)
            if rec.precipitation == 0.0:
                out.append((0.0, p0))
            else:
                mean = precip_amount_mean(params, s, occ, rec.temperature)
                k = params.amount_cv_shape
                f = p0 + (1.0 - p0) * regularized_gamma_p(k, rec.precipitation * k / mean)
                out.append((f, f))
    return out


def _pit_intervals_temp(
    params: TempParams, data: Dataset, months: tuple[int, ...] | None
) -> list[tuple[float, float]]:
    p = params.ar_order
    out = []
    for a, b in contiguous_windows(data, ("temperature",), min_lag=p):
        devs = [
            data[t].temperature - fourier_eval(params.trend, season_day(data[t].date))
            for t in range(a, b)
        ]
        for t in range(a + p, b):
            rec = data[t]
            if months and rec.date.month not in months:
                continue
            i = t - a
            mean_dev = sum(alpha * devs[i - j] for j, alpha in enumerate(params.ar, start=1))
            f = float(ndtr((devs[i] - mean_dev) / params.innovation_sd))
            out.append((f, f))
    return out


def pit_series(
    params: ShortTermParams | DirectParams | PrecipParams | TempParams,
    data: Dataset,
    months: Iterable[int] | None = None,
    *,
    seed: int = 0,
    randomize: bool = True,
    bins: int = 20,
) -> PitReport:
    """One-step-ahead PIT values for every usable observation.

    Observations on a probability atom get a uniform draw over [F(x-), F(x)]
    (exactly uniform under a well-specified model); `randomize=False` takes
    the upper endpoint F(x) instead.
    """
    months = tuple(months) if months else None
    if isinstance(params, ShortTermParams):
        intervals = _pit_intervals_short(params, data, months)
    elif isinstance(params, DirectParams):
        intervals = _pit_intervals_direct(params, data, months)
    elif isinstance(params, PrecipParams):
        intervals = _pit_intervals_precip(params, data, months)
    elif isinstance(params, TempParams):
        intervals = _pit_intervals_temp(params, data, months)
    else:
        raise TypeError(f"no PIT evaluator for {type(params).__name__}")
    if not intervals:
        raise ValueError("no usable observations for PIT")
    lo = np.array([iv[0] for iv in intervals])
    hi = np.array([iv[1] for iv in intervals])
    if randomize:
        rng = np.random.default_rng(seed)
        values = lo + (hi - lo) * rng.random(lo.size)
    else:
        values = hi
    values = np.clip(values, 0.0, 1.0)
    hist, _ = np.histogram(values, bins=bins, range=(0.0, 1.0))
    return PitReport(
        values=values,
        histogram=hist,
        ks_statistic=ks_uniform_statistic(values),
        n=values.size,
    )


# -- cross validation ---------------------------------------------------------


def _mask_window(data: Dataset, start: dt.date, end: dt.date) -> Dataset:
    """Replace every record in [start, end] with an all-missing row."""
    records = tuple(
        DailyRecord(date=r.date) if start <= r.date <= end else r for r in data.records
    )
    return Dataset(records=records, station_label=data.station_label)


def _season_years(data: Dataset, months: tuple[int, ...]) -> list[int]:
    """July-to-June seasons (keyed by the July year) with winter depth data."""
    years = set()
    for rec in data.records:
        if rec.date.month in months and rec.snow_depth is not None:
            year = rec.date.year if rec.date.month >= 7 else rec.date.year - 1
            years.add(year)
    return sorted(years)


def _forecast_seed(master: int, season: int, origin: dt.date, code: int, delta: int) -> int:
    ss = np.random.SeedSequence([master, season, origin.toordinal(), code, delta])
    return int(ss.generate_state(1, np.uint64)[0])


_MODEL_CODES = {"model1": 1, "model2": 2, "model1_baseline": 3, "model2_baseline": 4}


def cross_validate(
    data: Dataset,
    *,
    models: Sequence[str] = ("model2",),
    deltas: Sequence[int] = (0, 5, 10),
    horizon: int = 21,
    months: Sequence[int] = WINTER_MONTHS,
    n_paths: int = 1000,
    seed: int = 0,
    direct_orders: tuple[int, int, int] = (3, 1, 5),
    temp_orders: tuple[int, int] = (2, 3),
    precip_orders: tuple[int, int, int, int, int, int] = (3, 5, 4, 3, 5, 4),
    fit_config: FitConfig | None = None,
    include_baseline: bool = True,
    progress: bool = False,
) -> list[SkillReport]:
    """Leave-one-season-out skill evaluation.

    For each held-out July-to-June season, every model is refitted on the
    remaining data (the held-out records are masked, never touched by the
    fits) and forecasts of `horizon` days are issued from every eligible
    winter day, using observed weather for the first delta days. Absolute
    errors of the ensemble-mean forecast are aggregated per lead day. The
    baseline is the same machinery with every lag/covariate order zero and
    delta = 0, so it knows only the seasonal cycle.
    """
    months = tuple(months)
    models = tuple(models)
    for m in models:
        if m not in ("model1", "model2"):
            raise ValueError(f"unknown model {m!r}")
    seasons = _season_years(data, months)
    if len(seasons) < 3:
        raise ValueError("cross validation needs at least three seasons with winter data")

    runs: list[tuple[str, int]] = [(m, d) for m in models for d in deltas]
    if include_baseline:
        runs += [(f"{m}_baseline", 0) for m in models]
    sums = {r: np.zeros(horizon) for r in runs}
    counts = {r: np.zeros(horizon, dtype=int) for r in runs}
    n_forecasts = {r: 0 for r in runs}

    need_short = any(d > 0 for d in deltas) or "model1" in models
    max_delta = max(deltas) if deltas else 0

    date_index = {rec.date: i for i, rec in enumerate(data.records)}

    for season in seasons:
        s_start, s_end = dt.date(season, 7, 1), dt.date(season + 1, 6, 30)
        training = _mask_window(data, s_start, s_end)
        if progress:
            print(f"[cv] season {season}-{season + 1}: fitting")
        try:
            fits: dict[str, object] = {}
            if need_short:
                fits["short"] = fit_short_term(training, fit_config).params
            if "model2" in models:
                fits["direct"] = fit_direct(training, direct_orders, fit_config).params
            if "model1" in models:
                fits["temp"] = fit_temperature(training, temp_orders, fit_config).params
                fits["precip"] = fit_precipitation(training, precip_orders, fit_config).params
            if include_baseline and "model2" in models:
                fits["direct_base"] = fit_direct(
                    training, (direct_orders[0], 0, 0), fit_config
                ).params
            if include_baseline and "model1" in models:
                fits["temp_base"] = fit_temperature(
                    training, (temp_orders[0], 0), fit_config
                ).params
                fits["precip_base"] = fit_precipitation(
                    training,
                    (precip_orders[0], 0, 0, precip_orders[3], 0, 0),
                    fit_config,
                ).params
        except ValueError as err:
            warnings.warn(f"season {season}-{season + 1} skipped: {err}")
            continue

        history_needed = 1
        if "model2" in models:
            history_needed = max(history_needed, max(direct_orders[1:]), 1)
        if "model1" in models:
            history_needed = max(
                history_needed, temp_orders[1], max(precip_orders[1], precip_orders[4])
            )

        for origin_date, t0 in date_index.items():
            if not (s_start <= origin_date <= s_end and origin_date.month in months):
                continue
            if t0 + 1 >= len(data) or t0 - history_needed + 1 < 0:
                continue
            hist_rows = data.records[t0 - history_needed + 1 : t0 + 1]
            if any(r.snow_depth is None for r in hist_rows):
                continue
            if "model1" in models and any(
                r.temperature is None or r.precipitation is None for r in hist_rows
            ):
                continue
            targets = [
                (lead, data[t0 + lead].snow_depth)
                for lead in range(1, horizon + 1)
                if t0 + lead < len(data) and data[t0 + lead].snow_depth is not None
            ]
            if not targets:
                continue
            start = StartState.from_dataset(data, end_index=t0, history=history_needed)

            weather: list[tuple[float, float]] = []
            for lead in range(1, max_delta + 1):
                if t0 + lead >= len(data):
                    break
                rec = data[t0 + lead]
                if rec.temperature is None or rec.precipitation is None:
                    break
                weather.append((rec.temperature, rec.precipitation))

            for run in runs:
                tag, delta = run
                if delta > len(weather):
                    continue
                base = tag.endswith("baseline")
                family = tag.split("_")[0]
                request = ForecastRequest(
                    start=start,
                    weather_forecast=tuple(weather[:delta]),
                    horizon=horizon,
                    n_paths=n_paths,
                    seed=_forecast_seed(seed, season, origin_date, _MODEL_CODES[tag], delta),
                    long_term_model=family,
                )
                if family == "model2":
                    ens = _run_paths(
                        request,
                        short=fits.get("short"),
                        direct=fits["direct_base"] if base else fits["direct"],
                        temp_params=None,
                        precip_params=None,
                    )
                else:
                    ens = _run_paths(
                        request,
                        short=fits["short"],
                        direct=None,
                        temp_params=fits["temp_base"] if base else fits["temp"],
                        precip_params=fits["precip_base"] if base else fits["precip"],
                    )
                pred = ens.depths.mean(axis=0)
                for lead, obs in targets:
                    sums[run][lead - 1] += abs(pred[lead - 1] - obs)
                    counts[run][lead - 1] += 1
                n_forecasts[run] += 1

    winter_depths = [
        rec.snow_depth
        for rec in data.records
        if rec.date.month in months and rec.snow_depth is not None
    ]
    mean_depth = float(np.mean(winter_depths)) if winter_depths else float("nan")

    reports = []
    for run in runs:
        tag, delta = run
        with np.errstate(invalid="ignore", divide="ignore"):
            curve = np.where(counts[run] > 0, sums[run] / np.maximum(counts[run], 1), np.nan)
            normalized = curve / mean_depth if mean_depth and mean_depth > 0 else curve * np.nan
        reports.append(
            SkillReport(
                model=tag,
                delta=delta,
                months=months,
                per_horizon_mae=curve,
                normalized_mae=normalized,
                mean_depth=mean_depth,
                n_forecasts=n_forecasts[run],
            )
        )
    return reports
