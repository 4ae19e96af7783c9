"""Snow-depth time-series model driven by its own lags and a seasonal trend.

Shares the zero-inflated gamma transition machinery of the short-term model,
but the conditional mean is log-linear in lagged depths, lagged snow-cover
indicators and a Fourier trend, so no weather inputs are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln, log_expit

from .data import Dataset, contiguous_windows, season_day
from .short_term import MEAN_FLOOR
from .weather import FourierTrend, fourier_design, fourier_eval, trend_coefs
from .zig import ZeroInflatedSpec, gamma_from_moments, inverse_logit, zig_sample

#: Conditional means are capped here (cm) so that extreme lag/coefficient
#: combinations stay finite instead of overflowing the log link.
MEAN_CAP = 1e6
_PRED_CAP = math.log(MEAN_CAP)


@dataclass(frozen=True)
class DirectParams:
    """Coefficients of the depth-lag model; histories are most-recent-first."""

    trend: FourierTrend
    occ_lags: tuple[float, ...] = ()
    depth_lags: tuple[float, ...] = ()
    zero_intercept: float = 0.0
    zero_slope: float = 0.0
    sigma1_sq: float = 1.0
    sigma2_sq: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "occ_lags", tuple(self.occ_lags))
        object.__setattr__(self, "depth_lags", tuple(self.depth_lags))
        if not (self.sigma1_sq > 0 and self.sigma2_sq > 0):
            raise ValueError("variance coefficients must be positive")

    @property
    def max_lag(self) -> int:
        return max(len(self.occ_lags), len(self.depth_lags))


def direct_mean(
    params: DirectParams,
    s: int,
    occ_history: Sequence[int],
    depth_history: Sequence[float],
) -> float:
    """Expected positive-part depth; occ_history[0] / depth_history[0] are lag 1."""
    if len(occ_history) < len(params.occ_lags):
        raise ValueError(f"need {len(params.occ_lags)} occurrence lags")
    if len(depth_history) < len(params.depth_lags):
        raise ValueError(f"need {len(params.depth_lags)} depth lags")
    predictor = fourier_eval(params.trend, s)
    predictor += sum(c * occ_history[j] for j, c in enumerate(params.occ_lags))
    predictor += sum(c * depth_history[j] for j, c in enumerate(params.depth_lags))
    return math.exp(min(predictor, _PRED_CAP))


def _moments(
    params: DirectParams,
    s: int,
    occ_history: Sequence[int],
    depth_history: Sequence[float],
) -> tuple[float, float, float]:
    mean = direct_mean(params, s, occ_history, depth_history)
    # Without a depth lag in the mean, the variance deviates from 0 instead.
    ref = depth_history[0] if params.depth_lags else 0.0
    change = mean - ref
    var = params.sigma1_sq + params.sigma2_sq * change * change
    p_zero = inverse_logit(params.zero_intercept + params.zero_slope * mean)
    return mean, var, p_zero


def direct_transition_spec(
    params: DirectParams,
    s: int,
    occ_history: Sequence[int],
    depth_history: Sequence[float],
) -> ZeroInflatedSpec:
    """Zero-inflated gamma for today's depth given the histories."""
    mean, var, p_zero = _moments(params, s, occ_history, depth_history)
    mean = max(mean, MEAN_FLOOR)
    return ZeroInflatedSpec(p_zero=p_zero, positive_part=gamma_from_moments(mean, var))


def direct_simulate_step(
    params: DirectParams,
    s: int,
    occ_history: Sequence[int],
    depth_history: Sequence[float],
    rng: np.random.Generator,
) -> float:
    """One draw of today's depth; the caller shifts the histories with it."""
    return zig_sample(direct_transition_spec(params, s, occ_history, depth_history), rng)


def _depth_arrays(data: Dataset, q: int, s_lags: int) -> dict[str, np.ndarray]:
    """Targets plus lag matrices from every usable gap-free depth stretch."""
    max_lag = max(q, s_lags)
    windows = contiguous_windows(data, ("snow_depth",), min_lag=max_lag)
    if not windows:
        raise ValueError("no usable snow depth window")
    depth, sdays, occ_rows, lag_rows = [], [], [], []
    for a, b in windows:
        d = [data[t].snow_depth for t in range(a, b)]
        for t in range(a + max_lag, b):
            i = t - a
            depth.append(d[i])
            sdays.append(season_day(data[t].date))
            occ_rows.append([1.0 if d[i - j] > 0 else 0.0 for j in range(1, q + 1)])
            lag_rows.append([d[i - j] for j in range(1, s_lags + 1)])
    n = len(depth)
    return {
        "depth": np.asarray(depth, dtype=float),
        "sdays": np.asarray(sdays, dtype=float),
        "occ": np.asarray(occ_rows, dtype=float).reshape(n, q),
        "lags": np.asarray(lag_rows, dtype=float).reshape(n, s_lags),
    }


def _loglik_arrays(params: DirectParams, arrays: dict[str, np.ndarray]) -> float:
    depth = arrays["depth"]
    q = len(params.occ_lags)
    s_lags = len(params.depth_lags)

    design = arrays.get("design")
    if design is None or design.shape[1] != 2 * params.trend.order + 1:
        design = fourier_design(arrays["sdays"], params.trend.order)
        arrays["design"] = design

    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        predictor = design @ trend_coefs(params.trend)
        if q:
            predictor = predictor + arrays["occ"][:, :q] @ np.asarray(params.occ_lags)
        if s_lags:
            predictor = predictor + arrays["lags"][:, :s_lags] @ np.asarray(params.depth_lags)
        mean = np.maximum(np.exp(np.minimum(predictor, _PRED_CAP)), MEAN_FLOOR)
        ref = arrays["lags"][:, 0] if s_lags else 0.0
        var = params.sigma1_sq + params.sigma2_sq * np.square(mean - ref)
        shape = mean * mean / var
        scale = var / mean
        z = params.zero_intercept + params.zero_slope * mean

        positive = depth > 0
        total = float(np.sum(log_expit(z[~positive])))
        if np.any(positive):
            d = depth[positive]
            k = shape[positive]
            th = scale[positive]
            total += float(
                np.sum(
                    log_expit(-z[positive])
                    + (k - 1.0) * np.log(d)
                    - d / th
                    - k * np.log(th)
                    - gammaln(k)
                )
            )
    return total if math.isfinite(total) else -math.inf


def direct_log_likelihood(params: DirectParams, data: Dataset) -> float:
    """Sum of conditional log densities over all usable depth observations."""
    arrays = _depth_arrays(data, len(params.occ_lags), len(params.depth_lags))
    return _loglik_arrays(params, arrays)
