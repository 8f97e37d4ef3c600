"""Difference-sequence pipeline: differencing, sliding windows, restoration.

The model never sees raw observations.  A series ``z_1..z_n`` becomes its
first-order difference sequence ``a_i = z_{i+1} - z_i`` (length ``h = n-1``),
is segmented by a stride-1 sliding window of size ``W`` into ``c = h - W + 1``
windows, and predictions made in difference space are restored by adding them
back onto the last known level.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateSeries, InvalidWindow, NumericError, WindowTooLarge


@dataclass(frozen=True)
class DiffSeries:
    """First-order differences of one series plus its final observed level."""

    alphas: np.ndarray
    last_observed: float
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=np.float64))

    def __len__(self) -> int:
        return len(self.alphas)


@dataclass(frozen=True)
class WindowSet:
    """Stride-1 windows over a difference sequence.

    ``windows`` has shape ``(c, W)`` where window ``j`` (0-based) covers
    ``alphas[j : j+W]``.  ``targets`` holds the next difference after each
    window, defined for the first ``c - 1`` windows only; the final window
    is the inference window.
    """

    windows: np.ndarray
    targets: np.ndarray
    window_size: int

    @property
    def count(self) -> int:
        return len(self.windows)

    def target_of(self, j: int) -> float:
        """Training target of window ``j``; the last window has none."""
        if not 0 <= j < self.count - 1:
            raise IndexError(f"window {j} has no target (count={self.count})")
        return float(self.targets[j])


def difference(values: Sequence[float] | np.ndarray, source_id: str = "") -> DiffSeries:
    """Transform a series into its first-order difference sequence.

    Raises
    ------
    DegenerateSeries
        Fewer than two observations.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or len(values) < 2:
        raise DegenerateSeries(
            f"need at least 2 points to difference, got {values.size}"
        )
    if not np.isfinite(values).all():
        raise NumericError(f"series {source_id!r} contains non-finite values")
    return DiffSeries(
        alphas=np.diff(values), last_observed=float(values[-1]), source_id=source_id
    )


def cumulative_restore(first_value: float, alphas: np.ndarray) -> np.ndarray:
    """Invert :func:`difference`: rebuild the series from its first value."""
    alphas = np.asarray(alphas, dtype=np.float64)
    out = np.empty(len(alphas) + 1, dtype=np.float64)
    out[0] = first_value
    np.cumsum(alphas, out=out[1:])
    out[1:] += first_value
    return out


def make_windows(diff: DiffSeries, window_size: int) -> WindowSet:
    """Segment a difference sequence with a stride-1 window of size ``W``.

    Raises
    ------
    InvalidWindow
        ``W < 2``.
    WindowTooLarge
        ``W`` exceeds the number of differences.
    """
    w = int(window_size)
    h = len(diff)
    if w < 2:
        raise InvalidWindow(f"window size must be >= 2, got {w}")
    if w > h:
        raise WindowTooLarge(f"window size {w} exceeds {h} differences")
    windows = np.lib.stride_tricks.sliding_window_view(diff.alphas, w).copy()
    return WindowSet(windows=windows, targets=diff.alphas[w:].copy(), window_size=w)


def restore(prev_value: float, q: float) -> float:
    """Add a predicted difference back onto the last known level."""
    if not (np.isfinite(prev_value) and np.isfinite(q)):
        raise NumericError(f"restore received non-finite input ({prev_value}, {q})")
    return float(prev_value) + float(q)


def naive_forecast(values: Sequence[float] | np.ndarray, horizon: int) -> np.ndarray:
    """Repeat the last observed value ``horizon`` times.

    Raises
    ------
    DegenerateSeries
        Empty series.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise DegenerateSeries("cannot naive-forecast an empty series")
    return np.full(int(horizon), values[-1], dtype=np.float64)


def forecast_recursive(
    predict_q: Callable[[np.ndarray], float],
    values: Sequence[float] | np.ndarray,
    horizon: int,
    window_size: int,
) -> np.ndarray:
    """Iterated one-step forecasting.

    ``predict_q`` maps the last ``W`` differences to a predicted next
    difference.  Step 1 restores that prediction onto the last observation;
    each later step appends the previous prediction (whose difference equals
    the emitted Q), slides the window, and repeats.
    """
    diff = difference(values)
    w = int(window_size)
    if w > len(diff):
        raise WindowTooLarge(
            f"window size {w} exceeds {len(diff)} differences of series "
            f"{diff.source_id!r}"
        )
    tail = list(diff.alphas[-w:])
    level = diff.last_observed
    out = np.empty(int(horizon), dtype=np.float64)
    for step in range(int(horizon)):
        q = float(predict_q(np.asarray(tail, dtype=np.float64)))
        level = restore(level, q)
        out[step] = level
        tail.append(q)
        del tail[0]
    return out
