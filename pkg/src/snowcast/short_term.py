"""Next-day snow depth conditioned on weather: the short-horizon transition model.

The conditional mean combines a snowfall term (precipitation converted to snow
through a temperature sigmoid) with a retention term (fraction of yesterday's
pack that survives); variance grows with the expected change in depth, and the
probability of a snow-free day shrinks with the expected depth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaln, log_expit

from .data import Dataset, contiguous_windows
from .zig import ZeroInflatedSpec, gamma_from_moments, inverse_logit, zig_sample

#: Conditional means are floored here before moment matching so that the
#: gamma shape/scale never divide by zero (snow-free, dry days give e^mu).
MEAN_FLOOR = 1e-12

TRANSITION_FIELDS = ("temperature", "precipitation", "snow_depth")


@dataclass(frozen=True)
class ShortTermParams:
    """Coefficients of the conditional snow-depth model (natural scale)."""

    mu: float
    beta0: float
    beta1: float
    beta2: float
    beta3: float
    beta4: float
    beta5: float
    beta6: float
    beta7: float
    sigma1_sq: float
    sigma2_sq: float

    def __post_init__(self) -> None:
        if self.beta0 < 0:
            raise ValueError("beta0 must be nonnegative")
        if not (self.sigma1_sq > 0 and self.sigma2_sq > 0):
            raise ValueError("variance coefficients must be positive")


@dataclass(frozen=True)
class DayInputs:
    """Covariates for one transition: today's weather and yesterday's depth."""

    temp: float
    precip: float
    prev_depth: float

    def __post_init__(self) -> None:
        if self.precip < 0:
            raise ValueError("precip must be nonnegative")
        if self.prev_depth < 0:
            raise ValueError("prev_depth must be nonnegative")


def snowfall_term(params: ShortTermParams, temp: float, precip: float) -> float:
    """Expected cm of new snow from `precip` mm at temperature `temp`."""
    return precip * params.beta0 * inverse_logit(params.beta1 + params.beta2 * temp)


def retention_term(
    params: ShortTermParams, temp: float, precip: float, prev_depth: float
) -> float:
    """Expected cm of yesterday's pack that survives today (always < prev_depth)."""
    rate = inverse_logit(params.beta3 + (params.beta4 + params.beta5 * precip) * temp)
    return prev_depth * rate


def conditional_mean(params: ShortTermParams, inputs: DayInputs) -> float:
    """Expected positive-part depth: e^mu + snowfall + retained pack."""
    return (
        math.exp(params.mu)
        + snowfall_term(params, inputs.temp, inputs.precip)
        + retention_term(params, inputs.temp, inputs.precip, inputs.prev_depth)
    )


def conditional_variance(params: ShortTermParams, inputs: DayInputs) -> float:
    """Base variance plus a term quadratic in the expected change of depth."""
    change = conditional_mean(params, inputs) - inputs.prev_depth
    return params.sigma1_sq + params.sigma2_sq * change * change


def zero_probability(params: ShortTermParams, inputs: DayInputs) -> float:
    """Probability of a snow-free day, driven by the conditional mean."""
    return inverse_logit(params.beta6 + params.beta7 * conditional_mean(params, inputs))


def _moments(
    params: ShortTermParams, temp: float, precip: float, prev_depth: float
) -> tuple[float, float, float]:
    # One pass for (mean, variance, p_zero); the hot path for simulation.
    mean = (
        math.exp(params.mu)
        + precip * params.beta0 * inverse_logit(params.beta1 + params.beta2 * temp)
        + prev_depth
        * inverse_logit(params.beta3 + (params.beta4 + params.beta5 * precip) * temp)
    )
    change = mean - prev_depth
    var = params.sigma1_sq + params.sigma2_sq * change * change
    p_zero = inverse_logit(params.beta6 + params.beta7 * mean)
    return mean, var, p_zero


def transition_spec(params: ShortTermParams, inputs: DayInputs) -> ZeroInflatedSpec:
    """Zero-inflated gamma for tomorrow's depth given today's state."""
    mean, var, p_zero = _moments(params, inputs.temp, inputs.precip, inputs.prev_depth)
    mean = max(mean, MEAN_FLOOR)
    return ZeroInflatedSpec(p_zero=p_zero, positive_part=gamma_from_moments(mean, var))


def _transition_arrays(data: Dataset) -> dict[str, np.ndarray]:
    """Stack all usable transitions into flat covariate/target arrays."""
    windows = contiguous_windows(data, TRANSITION_FIELDS, min_lag=1)
    if not windows:
        raise ValueError("no usable transitions")
    temp, precip, prev, cur = [], [], [], []
    for a, b in windows:
        for t in range(a + 1, b):
            rec, rec_prev = data[t], data[t - 1]
            temp.append(rec.temperature)
            precip.append(rec.precipitation)
            prev.append(rec_prev.snow_depth)
            cur.append(rec.snow_depth)
    return {
        "temp": np.asarray(temp, dtype=float),
        "precip": np.asarray(precip, dtype=float),
        "prev_depth": np.asarray(prev, dtype=float),
        "depth": np.asarray(cur, dtype=float),
    }


def _loglik_arrays(
    mu: float,
    beta0: float,
    beta1: float,
    beta2: float,
    beta3: float,
    beta4: float,
    beta5: float,
    beta6: float,
    beta7: float,
    sigma1_sq: float,
    sigma2_sq: float,
    arrays: dict[str, np.ndarray],
) -> float:
    """Vectorized log likelihood over precomputed transition arrays."""
    temp = arrays["temp"]
    precip = arrays["precip"]
    prev = arrays["prev_depth"]
    depth = arrays["depth"]

    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        mean = (
            math.exp(mu)
            + precip * beta0 * expit(beta1 + beta2 * temp)
            + prev * expit(beta3 + (beta4 + beta5 * precip) * temp)
        )
        var = sigma1_sq + sigma2_sq * np.square(mean - prev)
        mean = np.maximum(mean, MEAN_FLOOR)
        shape = mean * mean / var
        scale = var / mean
        z = beta6 + beta7 * mean

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


def _params_tuple(params: ShortTermParams) -> tuple[float, ...]:
    return (
        params.mu,
        params.beta0,
        params.beta1,
        params.beta2,
        params.beta3,
        params.beta4,
        params.beta5,
        params.beta6,
        params.beta7,
        params.sigma1_sq,
        params.sigma2_sq,
    )


def log_likelihood(params: ShortTermParams, data: Dataset) -> float:
    """Sum of transition log densities over every gap-free stretch of data."""
    arrays = _transition_arrays(data)
    return _loglik_arrays(*_params_tuple(params), arrays)


def simulate_depth_series(
    params: ShortTermParams,
    temps: np.ndarray,
    precips: np.ndarray,
    initial_depth: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Roll the transition model forward over a given weather series."""
    if len(temps) != len(precips):
        raise ValueError("temps and precips must have equal length")
    depths = np.empty(len(temps))
    prev = float(initial_depth)
    for i, (t, r) in enumerate(zip(temps, precips)):
        spec = transition_spec(params, DayInputs(temp=float(t), precip=float(r), prev_depth=prev))
        prev = zig_sample(spec, rng)
        depths[i] = prev
    return depths
