"""JSON persistence for fitted parameters, tagged by model family."""

from __future__ import annotations

import json
from pathlib import Path

from .direct import DirectParams
from .short_term import ShortTermParams
from .weather import FourierTrend, PrecipParams, TempParams

_SHORT_FIELDS = (
    "mu",
    "beta0",
    "beta1",
    "beta2",
    "beta3",
    "beta4",
    "beta5",
    "beta6",
    "beta7",
    "sigma1_sq",
    "sigma2_sq",
)


def _trend_to_dict(trend: FourierTrend, prefix: str = "") -> dict:
    return {
        f"{prefix}fourier_order": trend.order,
        f"{prefix}a0": trend.a0,
        f"{prefix}sin": list(trend.a),
        f"{prefix}cos": list(trend.b),
    }


def _trend_from_dict(d: dict, prefix: str = "") -> FourierTrend:
    return FourierTrend(
        order=int(d[f"{prefix}fourier_order"]),
        a0=float(d[f"{prefix}a0"]),
        a=tuple(float(v) for v in d[f"{prefix}sin"]),
        b=tuple(float(v) for v in d[f"{prefix}cos"]),
    )


def params_to_dict(params, station: str = "") -> dict:
    """Flat JSON-ready mapping with a `model` tag and the station label."""
    if isinstance(params, ShortTermParams):
        out = {"model": "short_term", "station": station}
        out.update({f: getattr(params, f) for f in _SHORT_FIELDS})
        return out
    if isinstance(params, TempParams):
        out = {"model": "temperature", "station": station}
        out.update(_trend_to_dict(params.trend))
        out["ar"] = list(params.ar)
        out["innovation_sd"] = params.innovation_sd
        return out
    if isinstance(params, PrecipParams):
        out = {"model": "precipitation", "station": station}
        out.update(_trend_to_dict(params.amount_trend, "amount_"))
        out.update(_trend_to_dict(params.zero_trend, "zero_"))
        out["amount_occ_lags"] = list(params.amount_occ_lags)
        out["amount_temp_poly"] = list(params.amount_temp_poly)
        out["amount_cv_shape"] = params.amount_cv_shape
        out["zero_occ_lags"] = list(params.zero_occ_lags)
        out["zero_temp_poly"] = list(params.zero_temp_poly)
        out["temp_center"] = params.temp_center
        out["temp_scale"] = params.temp_scale
        return out
    if isinstance(params, DirectParams):
        out = {"model": "direct", "station": station}
        out.update(_trend_to_dict(params.trend))
        out["occ_lags"] = list(params.occ_lags)
        out["depth_lags"] = list(params.depth_lags)
        out["zero_intercept"] = params.zero_intercept
        out["zero_slope"] = params.zero_slope
        out["sigma1_sq"] = params.sigma1_sq
        out["sigma2_sq"] = params.sigma2_sq
        return out
    raise TypeError(f"cannot persist {type(params).__name__}")


def params_from_dict(d: dict):
    """Rebuild (params, station) from a mapping written by params_to_dict."""
    tag = d.get("model")
    station = d.get("station", "")
    if tag == "short_term":
        return ShortTermParams(**{f: float(d[f]) for f in _SHORT_FIELDS}), station
    if tag == "temperature":
        return (
            TempParams(
                trend=_trend_from_dict(d),
                ar=tuple(float(v) for v in d["ar"]),
                innovation_sd=float(d["innovation_sd"]),
            ),
            station,
        )
    if tag == "precipitation":
        return (
            PrecipParams(
                amount_trend=_trend_from_dict(d, "amount_"),
                amount_occ_lags=tuple(float(v) for v in d["amount_occ_lags"]),
                amount_temp_poly=tuple(float(v) for v in d["amount_temp_poly"]),
                amount_cv_shape=float(d["amount_cv_shape"]),
                zero_trend=_trend_from_dict(d, "zero_"),
                zero_occ_lags=tuple(float(v) for v in d["zero_occ_lags"]),
                zero_temp_poly=tuple(float(v) for v in d["zero_temp_poly"]),
                temp_center=float(d["temp_center"]),
                temp_scale=float(d["temp_scale"]),
            ),
            station,
        )
    if tag == "direct":
        return (
            DirectParams(
                trend=_trend_from_dict(d),
                occ_lags=tuple(float(v) for v in d["occ_lags"]),
                depth_lags=tuple(float(v) for v in d["depth_lags"]),
                zero_intercept=float(d["zero_intercept"]),
                zero_slope=float(d["zero_slope"]),
                sigma1_sq=float(d["sigma1_sq"]),
                sigma2_sq=float(d["sigma2_sq"]),
            ),
            station,
        )
    raise ValueError(f"unknown or missing model tag: {tag!r}")


def save_params(path: str | Path, params, station: str = "") -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(params_to_dict(params, station), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_params(path: str | Path):
    """Load (params, station) from a parameter JSON file."""
    with Path(path).open("r", encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))
