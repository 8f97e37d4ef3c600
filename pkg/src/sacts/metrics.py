"""Forecast accuracy metrics and the cross-model rank comparison.

Dataset-level numbers are unweighted means over series, matching the
archive convention of reporting "mean MAE" / "mean RMSE" per dataset.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import IncompleteMatrix, MetricError, UnsupportedK

# Critical values of the studentized range statistic divided by sqrt(2),
# two-tailed at alpha = 0.05, for k = 2..20 compared models.  These are the
# constants tabulated for the Nemenyi post-hoc test (Demsar 2006, table 5a,
# as extended in the common open-source implementations).
NEMENYI_Q_05 = {
    2: 1.959964,
    3: 2.343701,
    4: 2.569032,
    5: 2.727774,
    6: 2.849705,
    7: 2.948320,
    8: 3.030879,
    9: 3.101730,
    10: 3.163684,
    11: 3.218654,
    12: 3.268004,
    13: 3.312739,
    14: 3.353618,
    15: 3.391230,
    16: 3.426041,
    17: 3.458425,
    18: 3.488685,
    19: 3.517073,
    20: 3.543799,
}


def _check_pair(pred, actual) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise MetricError(f"length mismatch: {pred.shape} vs {actual.shape}")
    if pred.size == 0:
        raise MetricError("empty forecast")
    return pred, actual


def mae(pred, actual) -> float:
    """Mean absolute error."""
    pred, actual = _check_pair(pred, actual)
    return float(np.mean(np.abs(pred - actual)))


def rmse(pred, actual) -> float:
    """Root mean square error."""
    pred, actual = _check_pair(pred, actual)
    return float(math.sqrt(np.mean((pred - actual) ** 2)))


@dataclass(frozen=True)
class MetricReport:
    """Per-dataset accuracy of one model: dataset mean plus per-series rows."""

    dataset: str
    model: str
    mae: float
    rmse: float
    per_series: list[tuple[str, float, float]]


def evaluate_forecasts(dataset: str, model: str,
                       forecasts: dict[str, np.ndarray],
                       actuals: dict[str, np.ndarray]) -> MetricReport:
    """Score per-series forecasts against held-out actuals."""
    if set(forecasts) != set(actuals):
        missing = set(forecasts) ^ set(actuals)
        raise MetricError(f"forecast/actual series mismatch: {sorted(missing)}")
    if not forecasts:
        raise MetricError("no series to evaluate")
    rows = [
        (sid, mae(forecasts[sid], actuals[sid]), rmse(forecasts[sid], actuals[sid]))
        for sid in sorted(forecasts)
    ]
    return MetricReport(
        dataset=dataset,
        model=model,
        mae=float(np.mean([r[1] for r in rows])),
        rmse=float(np.mean([r[2] for r in rows])),
        per_series=rows,
    )


def nemenyi_cd(k: int, n_datasets: int, alpha: float = 0.05) -> float:
    """Critical mean-rank difference for the Nemenyi post-hoc test.

    ``CD = q_alpha * sqrt(k * (k + 1) / (6 * n_datasets))``.

    Raises
    ------
    UnsupportedK
        ``k`` outside the embedded table (2..20) or unsupported alpha.
    """
    if alpha != 0.05:
        raise UnsupportedK(f"only alpha = 0.05 is tabulated, got {alpha}")
    if k not in NEMENYI_Q_05:
        raise UnsupportedK(f"model count {k} outside tabulated range 2..20")
    if n_datasets < 2:
        raise MetricError(f"need at least 2 datasets, got {n_datasets}")
    return NEMENYI_Q_05[k] * math.sqrt(k * (k + 1) / (6.0 * n_datasets))


def _average_ranks(column: np.ndarray) -> np.ndarray:
    """Ranks with ties averaged; rank 1 is the smallest value."""
    below = (column[:, None] > column[None, :]).sum(axis=1)
    equal = (column[:, None] == column[None, :]).sum(axis=1)
    return below + (equal + 1) / 2.0


@dataclass(frozen=True)
class RankSummary:
    models: list[str]
    mean_ranks: np.ndarray
    cd: float
    significant_pairs: list[tuple[str, str]]


def rank_models(values: np.ndarray, models: list[str],
                datasets: list[str]) -> RankSummary:
    """Mean ranks over datasets plus Nemenyi verdicts for every model pair.

    ``values[i, j]`` is model ``i``'s metric on dataset ``j``; smaller is
    better.  Every cell must be present (the comparison groups models so
    that no cell is missing).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (len(models), len(datasets)):
        raise MetricError(
            f"matrix shape {values.shape} does not match {len(models)} models "
            f"x {len(datasets)} datasets"
        )
    bad = np.argwhere(np.isnan(values))
    if len(bad):
        i, j = bad[0]
        raise IncompleteMatrix(
            f"missing result for model {models[i]!r} on dataset {datasets[j]!r}"
        )
    ranks = np.column_stack(
        [_average_ranks(values[:, j]) for j in range(len(datasets))]
    )
    mean_ranks = ranks.mean(axis=1)
    cd = nemenyi_cd(len(models), len(datasets))
    pairs = [
        (models[a], models[b])
        for a in range(len(models))
        for b in range(a + 1, len(models))
        if abs(mean_ranks[a] - mean_ranks[b]) > cd
    ]
    return RankSummary(
        models=list(models), mean_ranks=mean_ranks, cd=cd, significant_pairs=pairs
    )


def report_csv(reports: list[MetricReport]) -> str:
    """Per-series rows plus a MEAN row per (dataset, model), as CSV text."""
    out = io.StringIO()
    out.write("dataset,model,series,mae,rmse\n")
    for rep in reports:
        for sid, series_mae, series_rmse in rep.per_series:
            out.write(f"{rep.dataset},{rep.model},{sid},{series_mae!r},{series_rmse!r}\n")
        out.write(f"{rep.dataset},{rep.model},MEAN,{rep.mae!r},{rep.rmse!r}\n")
    return out.getvalue()


def comparison_table(reports: list[MetricReport]) -> str:
    """Aligned text table: datasets down, models across, MAE and RMSE blocks."""
    datasets = sorted({r.dataset for r in reports})
    models = sorted({r.model for r in reports})
    cells = {(r.dataset, r.model): r for r in reports}

    def block(title: str, attr: str) -> list[str]:
        width = max(12, *(len(m) for m in models)) + 2
        name_w = max(8, *(len(d) for d in datasets)) + 2
        lines = [title, "-" * (name_w + width * len(models))]
        lines.append("".join(["dataset".ljust(name_w)] + [m.rjust(width) for m in models]))
        for ds in datasets:
            row = [ds.ljust(name_w)]
            for m in models:
                rep = cells.get((ds, m))
                row.append(("-" if rep is None else f"{getattr(rep, attr):.2f}").rjust(width))
            lines.append("".join(row))
        return lines

    return "\n".join(block("MEAN MAE", "mae") + [""] + block("MEAN RMSE", "rmse")) + "\n"
