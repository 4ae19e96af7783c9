"""Command-line interface: fit, forecast, gof, evaluate and simulate subcommands."""

from __future__ import annotations

import argparse
import datetime as dt
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import Dataset, load_csv, write_csv, DailyRecord
from .estimation import (
    FitConfig,
    fit_direct,
    fit_precipitation,
    fit_short_term,
    fit_temperature,
    stepwise_select,
)
from .evaluation import cross_validate, pit_series
from .forecast import (
    ForecastRequest,
    StartState,
    _run_paths,
    write_ensemble_csv,
    write_summary_csv,
)
from .persist import load_params, save_params
from .short_term import ShortTermParams, simulate_depth_series
from .weather import PrecipParams, TempParams, simulate_weather

_DEFAULT_ORDERS = {
    "temperature": (2, 3),
    "precipitation": (3, 5, 4, 3, 5, 4),
    "direct": (3, 1, 5),
}
_DEFAULT_MAX_ORDERS = {
    "temperature": (6, 6),
    "precipitation": (4, 6, 4, 4, 6, 4),
    "direct": (4, 3, 6),
}


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _resolve_seed(seed: int | None) -> int:
    return int.from_bytes(os.urandom(8), "little") >> 1 if seed is None else seed


def _fit_config(args: argparse.Namespace) -> FitConfig:
    return FitConfig(
        max_iterations=args.max_iterations,
        gradient_step=args.gradient_step,
        initial_learning_rate=args.learning_rate,
        convergence_tol=args.tol,
        backtrack_factor=args.backtrack,
    )


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("optimizer")
    group.add_argument("--max-iterations", type=int, default=5000)
    group.add_argument("--gradient-step", type=float, default=1e-5)
    group.add_argument("--learning-rate", type=float, default=1e-2)
    group.add_argument("--tol", type=float, default=1e-9)
    group.add_argument("--backtrack", type=float, default=0.5)


def _write_manifest(path: Path, command: str, args: argparse.Namespace, seed: int | None, extra=None) -> None:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "inputs": {k: str(v) for k, v in vars(args).items() if v is not None and k != "func"},
        "seed": seed,
        "version": __version__,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(),
    }
    if extra:
        manifest.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_dataset(path: str) -> Dataset:
    try:
        return load_csv(path)
    except ValueError as err:
        if "fewer than two data rows" in str(err):
            raise ValueError("no usable transitions") from None
        raise


def cmd_fit(args: argparse.Namespace) -> int:
    data = _load_dataset(args.data)
    config = _fit_config(args)
    family = args.family
    if family == "short_term":
        if args.select:
            raise ValueError("--select applies only to models with order choices")
        result = fit_short_term(data, config)
        orders = None
    elif args.select:
        max_orders = args.max_orders or _DEFAULT_MAX_ORDERS[family]
        orders, result = stepwise_select(data, family, max_orders, config)
    else:
        orders = args.orders or _DEFAULT_ORDERS[family]
        fitter = {
            "temperature": fit_temperature,
            "precipitation": fit_precipitation,
            "direct": fit_direct,
        }[family]
        result = fitter(data, orders, config)

    station = args.station or data.station_label
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_params(out, result.params, station)
    print(f"family {family}")
    if orders is not None:
        print(f"orders {','.join(str(v) for v in orders)}")
    print(f"log_likelihood {result.log_likelihood:.6f}")
    print(f"aic {result.aic:.6f}")
    print(f"iterations {result.iterations}")
    print(f"converged {str(result.converged).lower()}")
    _write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        "fit",
        args,
        None,
        extra={"orders": list(orders) if orders else None, "aic": result.aic},
    )
    return 0


def _load_weather_csv(path: str) -> list[tuple[float, float]]:
    rows = []
    with open(path, encoding="utf-8-sig") as fh:
        header = fh.readline().strip().split(",")
        if header[:3] != ["date", "temp_c", "precip_mm"]:
            raise ValueError("weather forecast CSV needs header date,temp_c,precip_mm")
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) < 3 or not cells[0]:
                continue
            rows.append((float(cells[1]), float(cells[2])))
    return rows


def cmd_forecast(args: argparse.Namespace) -> int:
    data = _load_dataset(args.data)
    delta = args.delta
    horizon = args.horizon
    if delta > horizon:
        raise ValueError("--delta cannot exceed --horizon")
    seed = _resolve_seed(args.seed)

    short = direct = temp = precip = None
    if args.short_params:
        short, _ = load_params(args.short_params)
    if args.direct_params:
        direct, _ = load_params(args.direct_params)
    if args.temp_params:
        temp, _ = load_params(args.temp_params)
    if args.precip_params:
        precip, _ = load_params(args.precip_params)

    model = args.model or "none"
    if delta < horizon and model == "none":
        raise ValueError("--model is required when --delta < --horizon")
    if delta > 0 and short is None:
        raise ValueError("missing parameter family: short_term (needed when --delta > 0)")
    if model == "model2" and direct is None:
        raise ValueError("missing parameter family: direct")
    if model == "model1" and (temp is None or precip is None or short is None):
        missing = [
            name
            for name, p in (("temperature", temp), ("precipitation", precip), ("short_term", short))
            if p is None
        ]
        raise ValueError(f"missing parameter family: {', '.join(missing)}")

    weather: list[tuple[float, float]] = []
    if delta > 0:
        if not args.weather_forecast:
            raise ValueError("--weather-forecast is required when --delta > 0")
        weather = _load_weather_csv(args.weather_forecast)
        if len(weather) < delta:
            raise ValueError(f"weather forecast has {len(weather)} days, need {delta}")
        weather = weather[:delta]

    history = 1
    if model == "model2":
        history = max(history, max(direct.max_lag, 1))
    if model == "model1":
        history = max(history, temp.ar_order, precip.max_lag)
    start = StartState.from_dataset(data, history=history)

    request = ForecastRequest(
        start=start,
        weather_forecast=tuple(weather),
        horizon=horizon,
        n_paths=args.paths,
        seed=seed,
        long_term_model=model,
    )
    ensemble = _run_paths(
        request,
        short=short,
        direct=direct if model == "model2" else None,
        temp_params=temp if model == "model1" else None,
        precip_params=precip if model == "model1" else None,
    )
    prefix = Path(args.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    ens_path = prefix.with_name(prefix.name + "_ensemble.csv")
    sum_path = prefix.with_name(prefix.name + "_summary.csv")
    write_ensemble_csv(ensemble, ens_path)
    write_summary_csv(ensemble, sum_path, quantiles=(0.05, 0.95))
    print(f"wrote {ens_path} and {sum_path} (seed {seed})")
    _write_manifest(
        prefix.with_name(prefix.name + ".manifest.json"), "forecast", args, seed
    )
    return 0


def cmd_gof(args: argparse.Namespace) -> int:
    data = _load_dataset(args.data)
    params, _ = load_params(args.params)
    if args.months is not None:
        months = args.months
    elif isinstance(params, (TempParams, PrecipParams)):
        months = None  # weather models: all year
    else:
        months = (12, 1, 2)  # snow models: winter
    seed = _resolve_seed(args.seed)
    report = pit_series(
        params, data, months, seed=seed, randomize=not args.fixed_atom, bins=args.bins
    )
    prefix = Path(args.output)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    pit_path = prefix.with_name(prefix.name + "_pit.csv")
    hist_path = prefix.with_name(prefix.name + "_histogram.csv")
    with pit_path.open("w", encoding="utf-8") as fh:
        fh.write("pit\n")
        for v in report.values:
            fh.write(f"{v!r}\n")
    edges = np.linspace(0.0, 1.0, args.bins + 1)
    with hist_path.open("w", encoding="utf-8") as fh:
        fh.write("bin_left,bin_right,count\n")
        for i, count in enumerate(report.histogram):
            fh.write(f"{edges[i]!r},{edges[i + 1]!r},{count}\n")
    print(f"n {report.n}")
    print(f"ks_statistic {report.ks_statistic:.6f}")
    _write_manifest(prefix.with_name(prefix.name + ".manifest.json"), "gof", args, seed)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    data = _load_dataset(args.data)
    seed = _resolve_seed(args.seed)
    reports = cross_validate(
        data,
        models=tuple(args.models.split(",")),
        deltas=args.deltas,
        horizon=args.horizon,
        months=args.months,
        n_paths=args.paths,
        seed=seed,
        direct_orders=args.direct_orders,
        temp_orders=args.temp_orders,
        precip_orders=args.precip_orders,
        fit_config=_fit_config(args),
        include_baseline=not args.no_baseline,
        progress=args.progress,
    )
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    summary = []
    for rep in reports:
        name = f"mae_{rep.model}.csv" if rep.model.endswith("baseline") else f"mae_{rep.model}_delta{rep.delta}.csv"
        with (outdir / name).open("w", encoding="utf-8") as fh:
            fh.write("lead,mae_cm,normalized_mae\n")
            for lead in range(len(rep.per_horizon_mae)):
                fh.write(
                    f"{lead + 1},{rep.per_horizon_mae[lead]!r},{rep.normalized_mae[lead]!r}\n"
                )
        summary.append(
            {
                "model": rep.model,
                "delta": rep.delta,
                "months": list(rep.months),
                "mean_depth": rep.mean_depth,
                "n_forecasts": rep.n_forecasts,
                "mae": [float(v) for v in rep.per_horizon_mae],
                "normalized_mae": [float(v) for v in rep.normalized_mae],
                "file": name,
            }
        )
        print(f"{rep.model} delta={rep.delta}: lead-1 MAE "
              f"{rep.per_horizon_mae[0]:.3f} cm, lead-{len(rep.per_horizon_mae)} MAE "
              f"{rep.per_horizon_mae[-1]:.3f} cm over {rep.n_forecasts} forecasts")
    with (outdir / "skill.json").open("w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(outdir / "manifest.json", "evaluate", args, seed)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    short, station = load_params(args.short_params)
    temp, _ = load_params(args.temp_params)
    precip, _ = load_params(args.precip_params)
    if not isinstance(short, ShortTermParams):
        raise ValueError("--short-params must hold a short_term parameter file")
    if not isinstance(temp, TempParams) or not isinstance(precip, PrecipParams):
        raise ValueError("--temp-params/--precip-params must hold weather parameter files")
    seed = _resolve_seed(args.seed)
    rng = np.random.default_rng(seed)
    start = dt.date.fromisoformat(args.start_date)
    dates, temps, precips = simulate_weather(temp, precip, start, args.days, rng)
    depths = simulate_depth_series(short, temps, precips, args.initial_depth, rng)
    records = [
        DailyRecord(
            date=d,
            temperature=float(t),
            precipitation=float(r),
            snow_depth=float(sd),
        )
        for d, t, r, sd in zip(dates, temps, precips, depths)
    ]
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(Dataset(records=tuple(records), station_label=args.station or station), out)
    print(f"wrote {out} ({args.days} days, seed {seed})")
    _write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "simulate", args, seed)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snowcast",
        description="Fit snow-depth models, forecast ensembles and evaluate skill.",
    )
    parser.add_argument("--version", action="version", version=f"snowcast {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a model family to a data CSV")
    p_fit.add_argument("data", help="input CSV (date,temp_c,precip_mm,snow_cm)")
    p_fit.add_argument("--family", required=True,
                       choices=["short_term", "temperature", "precipitation", "direct"])
    p_fit.add_argument("--orders", type=_int_list, default=None,
                       help="comma-separated order list for the family")
    p_fit.add_argument("--select", action="store_true",
                       help="forward stepwise AIC order selection")
    p_fit.add_argument("--max-orders", type=_int_list, default=None,
                       help="order ceilings for --select")
    p_fit.add_argument("--station", default=None)
    p_fit.add_argument("-o", "--output", required=True, help="parameter JSON path")
    _add_config_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_fc = sub.add_parser("forecast", help="Monte Carlo depth forecast from the end of a CSV")
    p_fc.add_argument("data")
    p_fc.add_argument("--horizon", type=int, required=True)
    p_fc.add_argument("--delta", type=int, default=0,
                      help="days covered by the supplied weather forecast")
    p_fc.add_argument("--paths", type=int, default=1000)
    p_fc.add_argument("--seed", type=int, default=None)
    p_fc.add_argument("--model", choices=["model1", "model2"], default=None)
    p_fc.add_argument("--short-params")
    p_fc.add_argument("--direct-params")
    p_fc.add_argument("--temp-params")
    p_fc.add_argument("--precip-params")
    p_fc.add_argument("--weather-forecast", help="CSV date,temp_c,precip_mm for days 1..delta")
    p_fc.add_argument("-o", "--output", required=True, help="output prefix")
    p_fc.set_defaults(func=cmd_forecast)

    p_gof = sub.add_parser("gof", help="PIT goodness-of-fit for a fitted model")
    p_gof.add_argument("data")
    p_gof.add_argument("--params", required=True)
    p_gof.add_argument("--months", type=_int_list, default=None,
                       help="months filter (default: DJF for snow models, all for weather)")
    p_gof.add_argument("--bins", type=int, default=20)
    p_gof.add_argument("--seed", type=int, default=None)
    p_gof.add_argument("--fixed-atom", action="store_true",
                       help="use F(0) at zero observations instead of a randomized PIT")
    p_gof.add_argument("-o", "--output", required=True, help="output prefix")
    p_gof.set_defaults(func=cmd_gof)

    p_ev = sub.add_parser("evaluate", help="leave-one-season-out forecast skill")
    p_ev.add_argument("data")
    p_ev.add_argument("--deltas", type=_int_list, default=(0, 5, 10))
    p_ev.add_argument("--horizon", type=int, default=21)
    p_ev.add_argument("--models", default="model2", help="comma list: model1,model2")
    p_ev.add_argument("--months", type=_int_list, default=(12, 1, 2))
    p_ev.add_argument("--paths", type=int, default=1000)
    p_ev.add_argument("--seed", type=int, default=None)
    p_ev.add_argument("--direct-orders", type=_int_list, default=(3, 1, 5))
    p_ev.add_argument("--temp-orders", type=_int_list, default=(2, 3))
    p_ev.add_argument("--precip-orders", type=_int_list, default=(3, 5, 4, 3, 5, 4))
    p_ev.add_argument("--no-baseline", action="store_true")
    p_ev.add_argument("--progress", action="store_true")
    p_ev.add_argument("-o", "--output", required=True, help="output directory")
    _add_config_flags(p_ev)
    p_ev.set_defaults(func=cmd_evaluate)

    p_sim = sub.add_parser("simulate", help="generate a synthetic station CSV")
    p_sim.add_argument("--short-params", required=True)
    p_sim.add_argument("--temp-params", required=True)
    p_sim.add_argument("--precip-params", required=True)
    p_sim.add_argument("--days", type=int, required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--start-date", default="2000-07-01")
    p_sim.add_argument("--initial-depth", type=float, default=0.0)
    p_sim.add_argument("--station", default=None)
    p_sim.add_argument("-o", "--output", required=True, help="output CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
