"""Maximum-likelihood fitting by gradient ascent plus stepwise AIC order selection."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import direct as direct_mod
from . import short_term as short_mod
from . import weather as weather_mod
from .data import Dataset
from .direct import DirectParams
from .short_term import ShortTermParams
from .weather import PrecipParams, TempParams, trend_from_coefs

#: Iterations between refreshes of the diagonal curvature preconditioner.
_RESCALE_EVERY = 25
_MAX_BACKTRACKS = 60
_LR_CAP = 64.0
#: Cap on any single coordinate of the (unit learning rate) ascent direction.
_MAX_COORD_STEP = 5.0
_AIC_TIE = 1e-9


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings; defaults match the CLI defaults."""

    max_iterations: int = 5000
    gradient_step: float = 1e-5
    initial_learning_rate: float = 1e-2
    convergence_tol: float = 1e-9
    backtrack_factor: float = 0.5

    def __post_init__(self) -> None:
        if self.max_iterations <= 0 or self.gradient_step <= 0:
            raise ValueError("max_iterations and gradient_step must be positive")
        if self.initial_learning_rate <= 0 or self.convergence_tol <= 0:
            raise ValueError("learning rate and convergence tolerance must be positive")
        if not 0.0 < self.backtrack_factor < 1.0:
            raise ValueError("backtrack_factor must lie in (0, 1)")


@dataclass
class MaximizeResult:
    x: np.ndarray
    trace: list[float]
    converged: bool
    iterations: int


@dataclass
class FitResult:
    """A fitted model with its likelihood, AIC and optimizer diagnostics."""

    params: object
    log_likelihood: float
    aic: float
    iterations: int
    converged: bool
    n_params: int
    trace: list[float] = field(default_factory=list, repr=False)


def _fd_gradient(objective: Callable, x: np.ndarray, rel_step: float) -> np.ndarray:
    """Central differences with per-coordinate step rel_step * max(1, |x_i|)."""
    g = np.zeros_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = objective(xp)
        fm = objective(xm)
        if math.isfinite(fp) and math.isfinite(fm):
            g[i] = (fp - fm) / (2.0 * h)
    return g


def _diag_curvature(objective: Callable, x: np.ndarray, f0: float) -> np.ndarray:
    """Per-coordinate |second derivative|, floored so the dynamic range of the
    resulting step scaling stays bounded."""
    c = np.zeros_like(x)
    for i in range(x.size):
        h = 1e-3 * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = objective(xp)
        fm = objective(xm)
        if math.isfinite(fp) and math.isfinite(fm):
            c[i] = abs(fp - 2.0 * f0 + fm) / (h * h)
    return np.maximum(c, 1e-12)


def maximize(
    objective: Callable[[np.ndarray], float],
    initial: Sequence[float],
    config: FitConfig | None = None,
    scale: Sequence[float] | None = None,
) -> MaximizeResult:
    """Gradient ascent with backtracking line search.

    Gradients are central finite differences; the ascent direction is the
    gradient rescaled per coordinate (an estimated inverse-curvature diagonal
    unless `scale` is given). Accepted steps never decrease the objective;
    iteration stops when the relative objective change drops below the
    configured tolerance, the gradient vanishes, or the line search stalls.
    """
    config = config or FitConfig()
    x = np.asarray(initial, dtype=float).copy()
    f = objective(x)
    if not math.isfinite(f):
        raise ValueError("objective must be finite at the initial point")
    trace = [f]

    if scale is not None:
        scale_sq = np.square(np.asarray(scale, dtype=float))
        auto_scale = False
    else:
        scale_sq = 1.0 / _diag_curvature(objective, x, f)
        auto_scale = True

    def grad_tol(value: float) -> float:
        return 10.0 * config.convergence_tol * max(1.0, abs(value))

    def backtrack(direction: np.ndarray, step: float):
        for k in range(_MAX_BACKTRACKS):
            x_new = x + step * direction
            f_new = objective(x_new)
            if math.isfinite(f_new) and f_new > f:
                return x_new, f_new, step, k
            step *= config.backtrack_factor
        return None

    lr = config.initial_learning_rate
    converged = False
    iterations = 0
    for it in range(1, config.max_iterations + 1):
        if auto_scale and it > 1 and (it - 1) % _RESCALE_EVERY == 0:
            scale_sq = 1.0 / _diag_curvature(objective, x, f)
        g = _fd_gradient(objective, x, config.gradient_step)
        g_max = float(np.max(np.abs(g), initial=0.0))
        if g_max <= grad_tol(f):
            converged = True
            break

        direction = np.clip(scale_sq * g, -_MAX_COORD_STEP, _MAX_COORD_STEP)
        found = backtrack(direction, lr)
        fallback = found is None
        if fallback:
            # The preconditioned direction failed every step size; the raw
            # gradient always ascends for a small enough step.
            found = backtrack(g / g_max, 1.0)
        if found is None:
            break
        x_new, f_new, step, n_back = found
        improvement = f_new - f
        x, f = x_new, f_new
        trace.append(f)
        iterations = it

        if fallback:
            # The curvature estimate was evidently stale: refresh it.
            lr = config.initial_learning_rate
            if auto_scale:
                scale_sq = 1.0 / _diag_curvature(objective, x, f)
            continue
        lr = min(step / config.backtrack_factor if n_back == 0 else step, _LR_CAP)
        if improvement <= config.convergence_tol * max(1.0, abs(f)):
            g = _fd_gradient(objective, x, config.gradient_step)
            converged = float(np.max(np.abs(g), initial=0.0)) <= grad_tol(f)
            break

    return MaximizeResult(x=x, trace=trace, converged=converged, iterations=iterations)


def _softplus(x: float) -> float:
    return x if x > 30.0 else math.log1p(math.exp(x))


def _softplus_inv(y: float) -> float:
    if y <= 0:
        raise ValueError("softplus inverse needs a positive argument")
    return y if y > 30.0 else y + math.log(-math.expm1(-y))


def _result(params: object, res: MaximizeResult, n_params: int) -> FitResult:
    ll = res.trace[-1]
    return FitResult(
        params=params,
        log_likelihood=ll,
        aic=2.0 * n_params - 2.0 * ll,
        iterations=res.iterations,
        converged=res.converged,
        n_params=n_params,
        trace=res.trace,
    )


# -- short-term model ---------------------------------------------------------

_SHORT_INIT = ShortTermParams(
    mu=-5.0,
    beta0=10.0,
    beta1=1.0,
    beta2=-1.0,
    beta3=2.0,
    beta4=0.0,
    beta5=0.0,
    beta6=3.0,
    beta7=-1.0,
    sigma1_sq=1.0,
    sigma2_sq=1.0,
)


def short_term_to_vector(params: ShortTermParams) -> np.ndarray:
    """Natural -> unconstrained: softplus for beta0, log for the variances."""
    return np.array(
        [
            params.mu,
            _softplus_inv(params.beta0) if params.beta0 > 0 else -30.0,
            params.beta1,
            params.beta2,
            params.beta3,
            params.beta4,
            params.beta5,
            params.beta6,
            params.beta7,
            math.log(params.sigma1_sq),
            math.log(params.sigma2_sq),
        ]
    )


def short_term_from_vector(v: np.ndarray) -> ShortTermParams:
    return ShortTermParams(
        mu=float(v[0]),
        beta0=_softplus(float(v[1])),
        beta1=float(v[2]),
        beta2=float(v[3]),
        beta3=float(v[4]),
        beta4=float(v[5]),
        beta5=float(v[6]),
        beta6=float(v[7]),
        beta7=float(v[8]),
        sigma1_sq=math.exp(float(v[9])),
        sigma2_sq=math.exp(float(v[10])),
    )


def fit_short_term(data: Dataset, config: FitConfig | None = None) -> FitResult:
    """Fit all 11 parameters of the short-term snow-depth model."""
    arrays = short_mod._transition_arrays(data)

    def objective(v: np.ndarray) -> float:
        try:
            p = short_term_from_vector(v)
        except (ValueError, OverflowError):
            return -math.inf
        return short_mod._loglik_arrays(*short_mod._params_tuple(p), arrays)

    res = maximize(objective, short_term_to_vector(_SHORT_INIT), config)
    return _result(short_term_from_vector(res.x), res, n_params=11)


# -- temperature model --------------------------------------------------------


def _lstsq_or_zeros(x: np.ndarray, y: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Least squares warm start; a small ridge (intercept exempt) keeps the
    solution tame where the design has thin support."""
    if y.size <= x.shape[1]:
        coefs = np.zeros(x.shape[1])
        if y.size:
            coefs[0] = float(np.mean(y))
        return coefs
    if ridge > 0.0:
        penalty = np.full(x.shape[1], math.sqrt(ridge))
        penalty[0] = 0.0
        x = np.vstack([x, np.diag(penalty)])
        y = np.concatenate([y, np.zeros(x.shape[1])])
    return np.linalg.lstsq(x, y, rcond=None)[0]


def fit_temperature(
    data: Dataset,
    orders: tuple[int, int],
    config: FitConfig | None = None,
    *,
    burn_in: int | None = None,
) -> FitResult:
    """Fit the seasonal AR model at Fourier/AR orders (m, p).

    burn_in fixes the number of leading days dropped per window, so fits at
    different orders can share one conditioning set during order selection.
    """
    m, p = orders
    burn = p if burn_in is None else burn_in
    if burn < p:
        raise ValueError("burn_in must cover the AR order")
    arrays = weather_mod._temp_arrays(data, burn)
    n_trend = 2 * m + 1

    def objective(v: np.ndarray) -> float:
        try:
            sd = math.exp(v[-1])
        except OverflowError:
            return -math.inf
        if sd <= 0:
            return -math.inf
        return weather_mod._temp_loglik_arrays(
            v[:n_trend], v[n_trend : n_trend + p], sd, arrays
        )

    # Least-squares warm start: trend by OLS, AR on trend residuals.
    temps = arrays["temps"]
    design = weather_mod.fourier_design(arrays["sdays"], m)
    trend0 = _lstsq_or_zeros(design, temps)
    dev = temps - design @ trend0
    idx = arrays["targets"]
    if p and idx.size > p:
        lag_mat = np.column_stack([dev[idx - j] for j in range(1, p + 1)])
        ar0 = np.linalg.lstsq(lag_mat, dev[idx], rcond=None)[0]
        resid = dev[idx] - lag_mat @ ar0
    else:
        ar0 = np.zeros(p)
        resid = dev[idx]
    init = np.concatenate([trend0, ar0, [math.log(max(float(np.std(resid)), 1e-3))]])
    res = maximize(objective, init, config)
    params = TempParams(
        trend=trend_from_coefs(m, res.x[:n_trend]),
        ar=tuple(float(a) for a in res.x[n_trend : n_trend + p]),
        innovation_sd=math.exp(float(res.x[-1])),
    )
    return _result(params, res, n_params=n_trend + p + 1)


# -- precipitation model ------------------------------------------------------


def _precip_from_vector(
    v: np.ndarray,
    orders: tuple[int, int, int, int, int, int],
    center: float,
    scale: float,
) -> PrecipParams:
    m_r, q_r, s_r, m_z, q_z, s_z = orders
    n_a = 2 * m_r + 1
    i = n_a
    g_r = tuple(float(c) for c in v[i : i + q_r])
    i += q_r
    k_r = tuple(float(c) for c in v[i : i + s_r])
    i += s_r
    shape = math.exp(float(v[i]))
    i += 1
    n_z = 2 * m_z + 1
    zero_coefs = v[i : i + n_z]
    i += n_z
    g_z = tuple(float(c) for c in v[i : i + q_z])
    i += q_z
    k_z = tuple(float(c) for c in v[i : i + s_z])
    return PrecipParams(
        amount_trend=trend_from_coefs(m_r, v[:n_a]),
        amount_occ_lags=g_r,
        amount_temp_poly=k_r,
        amount_cv_shape=shape,
        zero_trend=trend_from_coefs(m_z, zero_coefs),
        zero_occ_lags=g_z,
        zero_temp_poly=k_z,
        temp_center=center,
        temp_scale=scale,
    )


def fit_precipitation(
    data: Dataset,
    orders: tuple[int, int, int, int, int, int],
    config: FitConfig | None = None,
    *,
    burn_in: int | None = None,
) -> FitResult:
    """Fit the occurrence/amount model at orders (m_R, q_R, s_R, m_R0, q_R0, s_R0)."""
    m_r, q_r, s_r, m_z, q_z, s_z = orders
    q_max = max(q_r, q_z)
    burn = q_max if burn_in is None else burn_in
    if burn < q_max:
        raise ValueError("burn_in must cover the occurrence lag order")
    arrays = weather_mod._precip_arrays(data, burn, max(s_r, s_z))

    center = float(np.mean(arrays["temp"]))
    scale = max(float(np.std(arrays["temp"])), 1e-6)
    wet = arrays["amount"] > 0
    n_wet = int(wet.sum())
    degenerate = n_wet == 0 or n_wet == wet.size

    def objective(v: np.ndarray) -> float:
        try:
            params = _precip_from_vector(v, orders, center, scale)
        except (ValueError, OverflowError):
            return -math.inf
        return weather_mod._precip_loglik_arrays(params, arrays)

    n_amount = (2 * m_r + 1) + q_r + s_r
    n_free = n_amount + 1 + (2 * m_z + 1) + q_z + s_z
    init = np.zeros(n_free)
    if n_wet:
        # Warm-start the amount part by OLS on log amounts; the shape comes
        # from the residual coefficient of variation.
        z = (arrays["temp"] - center) / scale
        cols = [weather_mod.fourier_design(arrays["sdays"], m_r)]
        if q_r:
            cols.append(arrays["occ"][:, :q_r])
        if s_r:
            cols.append(weather_mod._power_matrix(z, s_r))
        design = np.column_stack(cols)[wet]
        coefs = _lstsq_or_zeros(design, np.log(arrays["amount"][wet]))
        init[:n_amount] = coefs
        ratio = arrays["amount"][wet] / np.maximum(np.exp(design @ coefs), 1e-12)
        cv_sq = float(np.var(ratio))
        init[n_amount] = math.log(min(max(1.0 / max(cv_sq, 1e-6), 0.05), 50.0))
    dry_frac = min(max(1.0 - n_wet / wet.size, 0.01), 0.99)
    init[n_amount + 1] = math.log(dry_frac / (1.0 - dry_frac))
    res = maximize(objective, init, config)
    if degenerate:
        warnings.warn("all-dry or all-wet precipitation data: occurrence part saturates")
        res.converged = False
    return _result(_precip_from_vector(res.x, orders, center, scale), res, n_params=n_free)


# -- direct snow depth model --------------------------------------------------


def _direct_from_vector(v: np.ndarray, orders: tuple[int, int, int]) -> DirectParams:
    m, q, s = orders
    n_t = 2 * m + 1
    return DirectParams(
        trend=trend_from_coefs(m, v[:n_t]),
        occ_lags=tuple(float(c) for c in v[n_t : n_t + q]),
        depth_lags=tuple(float(c) for c in v[n_t + q : n_t + q + s]),
        zero_intercept=float(v[n_t + q + s]),
        zero_slope=float(v[n_t + q + s + 1]),
        sigma1_sq=math.exp(float(v[n_t + q + s + 2])),
        sigma2_sq=math.exp(float(v[n_t + q + s + 3])),
    )


def fit_direct(
    data: Dataset,
    orders: tuple[int, int, int],
    config: FitConfig | None = None,
    *,
    burn_in: int | None = None,
) -> FitResult:
    """Fit the depth-lag model at orders (m_D, q_D, s_D)."""
    m, q, s = orders
    lag_max = max(q, s)
    burn = lag_max if burn_in is None else burn_in
    if burn < lag_max:
        raise ValueError("burn_in must cover the lag orders")
    if s == 0:
        warnings.warn("no depth lag in the mean: variance deviates from 0, not D(t-1)")
    # Lag matrices are built burn wide; the likelihood slices what it needs.
    arrays = direct_mod._depth_arrays(data, burn, burn)

    def make_objective(sub_orders: tuple[int, int, int]) -> Callable:
        def objective(v: np.ndarray) -> float:
            try:
                params = _direct_from_vector(v, sub_orders)
            except (ValueError, OverflowError):
                return -math.inf
            return direct_mod._loglik_arrays(params, arrays)

        return objective

    depth = arrays["depth"]
    positive = depth > 0
    zero_frac = min(max(float(np.mean(depth == 0)), 0.01), 0.99)
    mean_pos = float(np.mean(depth[positive])) if np.any(positive) else 1.0

    def moment_sigmas(mean_vec: np.ndarray) -> tuple[float, float]:
        # Regress squared residuals on squared expected change; the slope and
        # intercept seed the two variance coefficients.
        ref = arrays["lags"][positive, 0] if s else np.zeros(int(positive.sum()))
        resid_sq = np.square(depth[positive] - mean_vec)
        change_sq = np.square(mean_vec - ref)
        spread = float(np.var(change_sq))
        if spread > 1e-12:
            s2 = float(np.cov(resid_sq, change_sq)[0, 1]) / spread
        else:
            s2 = 1.0
        s2 = min(max(s2, 0.05), 1e3)
        s1 = float(np.mean(resid_sq)) - s2 * float(np.mean(change_sq))
        s1 = min(max(s1, 0.1), 1e4)
        return s1, s2

    n_trend = 2 * m + 1
    flat = np.zeros(n_trend + 4)
    flat[0] = math.log(mean_pos) if np.any(positive) else 0.0
    flat[n_trend] = math.log(zero_frac / (1.0 - zero_frac))
    if np.any(positive):
        s1, s2 = moment_sigmas(np.full(int(positive.sum()), mean_pos))
        flat[n_trend + 2] = math.log(s1)
        flat[n_trend + 3] = math.log(s2)

    config = config or FitConfig()
    n_mean = n_trend + q + s
    n_free = n_mean + 4
    inits = []
    if q or s:
        wide = np.zeros(n_free)
        wide[:n_trend] = flat[:n_trend]
        wide[n_free - 4 :] = flat[n_trend:]
        inits.append(wide)
    else:
        inits.append(flat)
    if (q or s) and np.any(positive):
        # Staged alternative: learn trend and zero part on the periodic-only
        # model first, then add weak lag tracking. Either cold start can stick
        # in a poor basin depending on the data, so both are tried below.
        warm_cfg = FitConfig(
            max_iterations=min(300, config.max_iterations),
            gradient_step=config.gradient_step,
            initial_learning_rate=config.initial_learning_rate,
            convergence_tol=config.convergence_tol,
            backtrack_factor=config.backtrack_factor,
        )
        warm = maximize(make_objective((m, 0, 0)), flat, warm_cfg)
        staged = np.zeros(n_free)
        staged[:n_trend] = warm.x[:n_trend]
        staged[n_free - 4 : n_free - 2] = warm.x[n_trend : n_trend + 2]
        if q:
            staged[n_trend] = 0.2
        if s:
            staged[n_trend + q] = 0.5 / max(mean_pos, 1.0)
        design = weather_mod.fourier_design(arrays["sdays"], m)
        pred = design @ staged[:n_trend]
        if q:
            pred = pred + staged[n_trend] * arrays["occ"][:, 0]
        if s:
            pred = pred + staged[n_trend + q] * arrays["lags"][:, 0]
        mean_vec = np.exp(np.clip(pred, -20.0, 20.0))[positive]
        s1, s2 = moment_sigmas(mean_vec)
        staged[n_free - 2] = math.log(s1)
        staged[n_free - 1] = math.log(s2)
        inits.append(staged)

    objective = make_objective(orders)
    res = None
    for init in inits:
        candidate = maximize(objective, init, config)
        if res is None or candidate.trace[-1] > res.trace[-1]:
            res = candidate
    return _result(_direct_from_vector(res.x, orders), res, n_params=n_free)


# -- stepwise order selection -------------------------------------------------

_FAMILIES: dict[str, tuple[int, Callable, Callable[[Sequence[int]], int]]] = {
    "temperature": (2, fit_temperature, lambda mo: mo[1]),
    "precipitation": (6, fit_precipitation, lambda mo: max(mo[1], mo[4])),
    "direct": (3, fit_direct, lambda mo: max(mo[1], mo[2])),
}


def stepwise_select(
    data: Dataset,
    family: str,
    max_orders: Sequence[int],
    config: FitConfig | None = None,
) -> tuple[tuple[int, ...], FitResult]:
    """Round-robin forward selection: cycle over the order dimensions, keep an
    increment only when AIC strictly decreases, stop after a fruitless cycle.

    All candidate fits share one conditioning set (burn-in at the maximum lag
    order) so their AICs are computed over the same observations.
    """
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(_FAMILIES)}")
    ndim, fitter, burn_of = _FAMILIES[family]
    max_orders = tuple(int(v) for v in max_orders)
    if len(max_orders) != ndim:
        raise ValueError(f"{family} needs {ndim} order limits")
    if any(v < 0 for v in max_orders):
        raise ValueError("order limits must be nonnegative")

    burn = burn_of(max_orders)
    orders = [0] * ndim
    best = fitter(data, tuple(orders), config, burn_in=burn)
    improved = True
    while improved:
        improved = False
        for i in range(ndim):
            if orders[i] >= max_orders[i]:
                continue
            candidate = orders.copy()
            candidate[i] += 1
            res = fitter(data, tuple(candidate), config, burn_in=burn)
            if res.aic < best.aic - _AIC_TIE:
                orders, best = candidate, res
                improved = True
    return tuple(orders), best
