"""Time series forecasting with a semi-asymmetric convolutional network
over globally position-encoded difference windows."""

from .datasets import (
    Dataset,
    TimeSeries,
    apply_missing_policy,
    load_dataset,
    parse_csv,
    parse_tsf,
    split_train_test,
    write_tsf,
)
from .encoder import Universe, WindowEncoder, build_universe, cbaa
from .forecaster import SacForecaster
from .metrics import MetricReport, evaluate_forecasts, mae, nemenyi_cd, rank_models, rmse
from .pipeline import (
    DiffSeries,
    WindowSet,
    difference,
    forecast_recursive,
    make_windows,
    naive_forecast,
    restore,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DiffSeries",
    "MetricReport",
    "SacForecaster",
    "TimeSeries",
    "Universe",
    "WindowEncoder",
    "WindowSet",
    "apply_missing_policy",
    "build_universe",
    "cbaa",
    "difference",
    "evaluate_forecasts",
    "forecast_recursive",
    "load_dataset",
    "mae",
    "make_windows",
    "naive_forecast",
    "nemenyi_cd",
    "parse_csv",
    "parse_tsf",
    "rank_models",
    "restore",
    "rmse",
    "split_train_test",
    "write_tsf",
]
