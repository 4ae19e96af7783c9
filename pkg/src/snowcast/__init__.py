"""Probabilistic short- and long-term snow depth forecasting."""

from .data import DailyRecord, Dataset, contiguous_windows, load_csv, season_day, write_csv
from .direct import (
    DirectParams,
    direct_log_likelihood,
    direct_mean,
    direct_simulate_step,
    direct_transition_spec,
)
from .estimation import (
    FitConfig,
    FitResult,
    fit_direct,
    fit_precipitation,
    fit_short_term,
    fit_temperature,
    maximize,
    stepwise_select,
)
from .evaluation import PitReport, SkillReport, cross_validate, mae, pit_series
from .forecast import (
    ForecastEnsemble,
    ForecastRequest,
    StartState,
    forecast_long_model1,
    forecast_long_model2,
    forecast_short,
    summarize,
    write_ensemble_csv,
    write_summary_csv,
)
from .persist import load_params, save_params
from .short_term import (
    DayInputs,
    ShortTermParams,
    conditional_mean,
    conditional_variance,
    log_likelihood,
    retention_term,
    simulate_depth_series,
    snowfall_term,
    transition_spec,
    zero_probability,
)
from .weather import (
    FourierTrend,
    PrecipParams,
    TempParams,
    fourier_eval,
    precip_amount_mean,
    precip_log_likelihood,
    precip_simulate,
    precip_zero_probability,
    simulate_weather,
    temp_log_likelihood,
    temp_simulate,
)
from .zig import (
    GammaSpec,
    ZeroInflatedSpec,
    gamma_from_moments,
    inverse_logit,
    regularized_gamma_p,
    zig_cdf,
    zig_log_density,
    zig_sample,
)

__version__ = "0.1.0"
