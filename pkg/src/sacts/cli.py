"""Command line interface: ``sacts train|forecast|benchmark|sweep``.

Configuration precedence: built-in defaults, then a ``key = value`` config
file (``--config``), then explicit flags, then the ``SACTS_SEED``
environment variable for the seed.  Every command writes a ``manifest.json``
echoing each resolved parameter so a run can be reproduced exactly.
Diagnostics go to stderr, summaries to stdout; any sacts error exits with
code 2.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import MISSING_POLICIES, check_min_lengths, load_dataset, split_train_test
from .errors import SactsError
from .forecaster import STRUCTURAL_PARAMS, SacForecaster
from .metrics import comparison_table, evaluate_forecasts, report_csv
from .pipeline import naive_forecast

SEED_ENV_VAR = "SACTS_SEED"

# flag/config key (hyphenated) -> SacForecaster constructor argument
PARAM_FLAGS = {
    "window-size": ("window_size", int),
    "out-factor": ("out_factor", int),
    "stages": ("n_stages", int),
    "h-kernel": ("h_kernel", int),
    "v-kernel": ("v_kernel", int),
    "cbaa-size": ("cbaa_size", int),
    "dilation": ("dilation", int),
    "hidden-dim": ("hidden_dim", int),
    "epochs": ("epochs", int),
    "batch-size": ("batch_size", int),
    "lr": ("learning_rate", float),
    "seed": ("seed", int),
}

FLAG_HELP = {
    "window-size": "sliding window size over the difference sequence",
    "out-factor": "channel lifting factor of the first conv stage",
    "stages": "number of semi-asymmetric conv stages",
    "h-kernel": "horizontal kernel width",
    "v-kernel": "vertical kernel height",
    "cbaa-size": "tap count of the center-outward dilated filter",
    "dilation": "dilation of the center-outward filter",
    "hidden-dim": "hidden width of the regression head",
    "epochs": "training epochs",
    "batch-size": "training batch size",
    "lr": "learning rate",
    "seed": "random seed (SACTS_SEED overrides)",
}


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("dataset", help=".tsf or .csv dataset file")
    parser.add_argument("--output-dir", default=None, help="artifact directory (default: sacts-run)")
    parser.add_argument("--config", default=None, help="key = value config file; flags win")
    parser.add_argument("--missing-policy", choices=MISSING_POLICIES, default=None,
                        help="how to resolve '?' values (default: forward-fill)")
    parser.add_argument("--horizon", type=int, default=None,
                        help="forecast horizon; defaults to the dataset metadata")
    for flag, (_, kind) in PARAM_FLAGS.items():
        parser.add_argument(f"--{flag}", type=kind, default=None, help=FLAG_HELP[flag])
    parser.add_argument("--cbaa-independent-sides", action="store_true", default=None,
                        help="learn separate left/right filters in the dilated step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sacts",
        description="Semi-asymmetric convolutional time series forecasting",
    )
    parser.add_argument("--version", action="version", version=f"sacts {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit a model and write a checkpoint")
    _add_common_flags(p_train)
    p_train.add_argument("--no-holdout", action="store_true",
                         help="train on the full series instead of holding out the horizon")
    p_train.add_argument("--dump-encoded", action="store_true",
                         help="also dump the encoded training windows as CSV")

    p_fc = sub.add_parser("forecast", help="forecast each series from a checkpoint")
    _add_common_flags(p_fc)
    p_fc.add_argument("--checkpoint", required=True, help="checkpoint written by train")

    p_bench = sub.add_parser("benchmark",
                             help="hold out the horizon, score naive and model forecasts")
    _add_common_flags(p_bench)
    p_bench.add_argument("--naive-only", action="store_true",
                         help="score the naive baseline without training the model")

    p_sweep = sub.add_parser("sweep", help="grid over window size and lifting factor")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--grid-window", default="3,5,7,9",
                         help="comma list of window sizes")
    p_sweep.add_argument("--grid-out", default="1,2,4",
                         help="comma list of lifting factors")
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="parallel training workers for grid points")
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SactsError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        values[key.strip().lower().replace("_", "-")] = value.strip()
    return values


def resolve_params(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, flags and SACTS_SEED into one dict."""
    params = SacForecaster().get_params()
    extras = {"missing_policy": "forward-fill"}

    if args.config:
        file_values = _read_config_file(args.config)
        for key, raw in file_values.items():
            if key in PARAM_FLAGS:
                name, kind = PARAM_FLAGS[key]
                params[name] = kind(raw)
            elif key == "cbaa-independent-sides":
                params["cbaa_independent_sides"] = raw.lower() in ("true", "1", "yes")
            elif key == "missing-policy":
                extras["missing_policy"] = raw
            elif key == "horizon":
                extras["horizon"] = int(raw)
            else:
                raise SactsError(f"unknown config key {key!r}")

    explicit = {}
    for flag, (name, _) in PARAM_FLAGS.items():
        value = getattr(args, flag.replace("-", "_"))
        if value is not None:
            params[name] = value
            explicit[name] = value
    if args.cbaa_independent_sides is not None:
        params["cbaa_independent_sides"] = True
        explicit["cbaa_independent_sides"] = True
    if args.missing_policy is not None:
        extras["missing_policy"] = args.missing_policy
    if args.horizon is not None:
        extras["horizon"] = args.horizon

    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        params["seed"] = int(env_seed)
        explicit.pop("seed", None)

    params["_explicit"] = explicit
    params.update(extras)
    return params


def _out_dir(args: argparse.Namespace) -> Path:
    out = Path(args.output_dir or "sacts-run")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, args: argparse.Namespace,
                    params: dict, artifacts: list[str], **extra) -> None:
    manifest = {
        "command": command,
        "package_version": __version__,
        "dataset": str(args.dataset),
        "parameters": {k: v for k, v in params.items() if k != "_explicit"},
        "artifacts": artifacts,
    }
    manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _estimator(params: dict) -> SacForecaster:
    kwargs = {k: v for k, v in params.items()
              if k in SacForecaster().get_params()}
    return SacForecaster(**kwargs)


def _load(args: argparse.Namespace, params: dict):
    ds = load_dataset(args.dataset, params["missing_policy"], params.get("horizon"))
    if params.get("horizon") is not None and ds.horizon != params["horizon"]:
        ds = dataclasses.replace(ds, horizon=params["horizon"])
    return ds


def _write_loss_curve(path: Path, est: SacForecaster) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,loss,lr\n")
        for epoch, (loss, lr) in enumerate(zip(est.loss_curve_, est.lr_curve_), start=1):
            fh.write(f"{epoch},{loss!r},{lr!r}\n")


def _write_forecasts(path: Path, forecasts: dict[str, np.ndarray]) -> None:
    with open(path, "w") as fh:
        fh.write("series,step,value\n")
        for sid, values in forecasts.items():
            for step, value in enumerate(values, start=1):
                fh.write(f"{sid},{step},{float(value)!r}\n")


def _dump_encoded(path: Path, est: SacForecaster) -> None:
    from .pipeline import difference, make_windows

    with open(path, "w") as fh:
        width = est.encoder_.width_
        fh.write("series,window,row," + ",".join(f"c{i}" for i in range(width)) + "\n")
        for sid in est.series_ids_:
            values = est.series_values_[sid]
            if len(values) < est.window_size + 1:
                continue
            ws = make_windows(difference(values, sid), est.window_size)
            encoded = est.encoder_.transform(ws.windows)
            for j, window in enumerate(encoded):
                for r, row in enumerate(window):
                    cells = ",".join(repr(float(v)) for v in row)
                    fh.write(f"{sid},{j},{r},{cells}\n")


def cmd_train(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    out = _out_dir(args)
    ds = _load(args, params)
    if not args.no_holdout:
        ds, _ = split_train_test(check_min_lengths(ds))
    est = _estimator(params)
    est.fit(ds)
    est.save(out / "model.ckpt")
    _write_loss_curve(out / "loss_curve.csv", est)
    artifacts = ["model.ckpt", "loss_curve.csv", "manifest.json"]
    if args.dump_encoded:
        _dump_encoded(out / "encoded_windows.csv", est)
        artifacts.append("encoded_windows.csv")
    _write_manifest(out, "train", args, params, artifacts,
                    holdout=not args.no_holdout,
                    n_training_windows=est.n_training_windows_,
                    final_loss=est.loss_curve_[-1])
    print(f"trained {est.n_training_windows_} windows for {len(est.loss_curve_)} epochs; "
          f"final L1 {est.loss_curve_[-1]:.6g}")
    print(f"artifacts in {out}")
    return 0


def cmd_forecast(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    out = _out_dir(args)
    est = SacForecaster.load(args.checkpoint)
    est.check_compatible({k: v for k, v in params["_explicit"].items()
                          if k in STRUCTURAL_PARAMS})
    ds = _load(args, params)
    horizon = params.get("horizon", ds.horizon)
    forecasts = {s.id: est.forecast(s.values, horizon) for s in ds.series}
    _write_forecasts(out / "forecasts.csv", forecasts)
    _write_manifest(out, "forecast", args, params,
                    ["forecasts.csv", "manifest.json"],
                    checkpoint=str(args.checkpoint), horizon=horizon)
    print(f"forecast {len(forecasts)} series x {horizon} steps -> {out / 'forecasts.csv'}")
    return 0


def cmd_benchmark(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    out = _out_dir(args)
    ds = _load(args, params)
    train_ds, test_ds = split_train_test(check_min_lengths(ds))
    actuals = {s.id: s.values for s in test_ds.series}

    naive = {s.id: naive_forecast(s.values, ds.horizon) for s in train_ds.series}
    naive_report = evaluate_forecasts(ds.name, "naive", naive, actuals)
    (out / "naive_metrics.csv").write_text(report_csv([naive_report]))

    if args.naive_only:
        _write_manifest(out, "benchmark", args, params,
                        ["naive_metrics.csv", "manifest.json"],
                        horizon=ds.horizon, naive_only=True,
                        naive={"mae": naive_report.mae, "rmse": naive_report.rmse})
        print(comparison_table([naive_report]))
        return 0

    est = _estimator(params)
    est.fit(train_ds)
    est.save(out / "model.ckpt")
    model = {s.id: est.forecast(s.values, ds.horizon) for s in train_ds.series}
    model_report = evaluate_forecasts(ds.name, "sacts", model, actuals)

    (out / "model_metrics.csv").write_text(report_csv([model_report]))
    _write_manifest(out, "benchmark", args, params,
                    ["naive_metrics.csv", "model_metrics.csv", "model.ckpt",
                     "manifest.json"],
                    horizon=ds.horizon, naive_only=False,
                    naive={"mae": naive_report.mae, "rmse": naive_report.rmse},
                    model={"mae": model_report.mae, "rmse": model_report.rmse})
    print(comparison_table([naive_report, model_report]))
    return 0


def _sweep_point(args_tuple):
    index, w, out_factor, params, train_ds, test_ds = args_tuple
    point = dict(params)
    point["window_size"] = w
    point["out_factor"] = out_factor
    point["seed"] = params["seed"] + index
    est = _estimator(point)
    est.fit(train_ds)
    actuals = {s.id: s.values for s in test_ds.series}
    forecasts = {s.id: est.forecast(s.values, train_ds.horizon) for s in train_ds.series}
    report = evaluate_forecasts(train_ds.name, "sacts", forecasts, actuals)
    return index, w, out_factor, point["seed"], report.mae


def cmd_sweep(args: argparse.Namespace) -> int:
    params = resolve_params(args)
    out = _out_dir(args)
    grid_w = [int(tok) for tok in args.grid_window.split(",") if tok.strip()]
    grid_out = [int(tok) for tok in args.grid_out.split(",") if tok.strip()]
    if not grid_w or not grid_out:
        raise SactsError("sweep grid is empty")
    ds = _load(args, params)
    train_ds, test_ds = split_train_test(check_min_lengths(ds))

    points = [
        (i, w, o, params, train_ds, test_ds)
        for i, (w, o) in enumerate((w, o) for w in grid_w for o in grid_out)
    ]
    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_point, points))
    else:
        results = [_sweep_point(p) for p in points]
    results.sort(key=lambda r: r[0])

    with open(out / "sweep.csv", "w") as fh:
        fh.write("window_size,out_factor,seed,mae\n")
        for _, w, o, seed, point_mae in results:
            fh.write(f"{w},{o},{seed},{point_mae!r}\n")
    _write_manifest(out, "sweep", args, params, ["sweep.csv", "manifest.json"],
                    grid_window=grid_w, grid_out=grid_out, workers=args.workers)
    print(f"swept {len(results)} points -> {out / 'sweep.csv'}")
    return 0


COMMANDS = {
    "train": cmd_train,
    "forecast": cmd_forecast,
    "benchmark": cmd_benchmark,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SactsError, OSError) as exc:
        print(f"sacts {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
