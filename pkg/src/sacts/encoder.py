"""Sliding-window encoder with global interval-position context.

Each difference window is rebuilt against the partitioned universe of
discourse of the whole training difference sequence:

1. every window element is inserted among the universe's interval boundaries
   at its own slot (``integrate``),
2. every inserted slot is overwritten by the window's last element, keeping
   only positional information of the earlier ones (``replace_with_last``),
3. rows are padded on their short side so the replaced element sits exactly
   in the middle, then cropped to a common odd width (``pad_and_crop``),
4. a dilated filter walks outward from the center of each row in both
   directions, preserving the center value (``cbaa``).

The result gives every local value a global positional context.
:class:`WindowEncoder` wraps steps 1-3 behind a fit/transform interface; the
dilated step lives in the network because its filter weights are learned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .errors import FilterTooLarge, NotFittedError, NumericError, SeriesTooShort

PHI_FLOOR = 1e-8


@dataclass(frozen=True)
class Universe:
    """Partitioned universe of discourse over a training difference sequence."""

    beta_l: float
    beta_u: float
    xi: float
    n_intervals: int
    phi: float

    @property
    def boundaries(self) -> np.ndarray:
        """The ``n_intervals + 1`` ascending interval boundaries.

        The last boundary is pinned to ``beta_u`` exactly so the chain and
        the stored bound never disagree by a rounding ulp.
        """
        bounds = self.beta_l + self.xi * np.arange(self.n_intervals + 1)
        bounds[-1] = self.beta_u
        return bounds


@dataclass(frozen=True)
class EncodedWindow:
    """One window after integration, replacement, padding and cropping.

    ``rows`` is ``W x S`` with ``S`` odd; every entry of column
    ``center_col`` equals ``center_value`` (the window's last element).
    ``positions`` records, per row, the index of the boundary immediately
    left of the original slot (-1 when the element fell below the universe).
    """

    rows: np.ndarray
    center_col: int
    center_value: float
    positions: np.ndarray


@dataclass(frozen=True)
class CbaaFeatures:
    """Center-preserving bidirectional dilated-convolution features."""

    rows: np.ndarray
    center_col: int


def universe_stats(alphas: np.ndarray, phi_floor: float = PHI_FLOOR) -> tuple[float, float, float]:
    """Population std (floored) and the resulting universe bounds."""
    alphas = np.asarray(alphas, dtype=np.float64)
    if not np.isfinite(alphas).all():
        raise NumericError("difference sequence contains non-finite values")
    phi = float(alphas.std())
    if phi < phi_floor:
        phi = phi_floor
    return phi, float(alphas.min()) - phi, float(alphas.max()) + phi


def interval_count(h: int) -> int:
    """Number of partition intervals for a difference sequence of length ``h``."""
    return max(1, int(math.floor(math.log2(h))) - 1)


def build_universe(alphas: Sequence[float] | np.ndarray,
                   phi_floor: float = PHI_FLOOR) -> Universe:
    """Build the partitioned universe from a training difference sequence.

    Raises
    ------
    SeriesTooShort
        Fewer than 4 differences.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    h = len(alphas)
    if h < 4:
        raise SeriesTooShort(f"need at least 4 differences, got {h}")
    phi, lo, hi = universe_stats(alphas, phi_floor)
    n = interval_count(h)
    return Universe(
        beta_l=lo, beta_u=hi, xi=(hi - lo) / n, n_intervals=n, phi=phi
    )


def slot_positions(values: np.ndarray, u: Universe) -> np.ndarray:
    """Boundary index immediately left of each value's insertion slot.

    Intervals are left-closed: a value equal to an interior boundary is
    inserted after it; a value equal to the upper bound falls in the last
    interval.  Values outside the universe clamp to the outermost slots
    (-1 below, ``n_intervals`` above).
    """
    values = np.asarray(values, dtype=np.float64)
    kappa = np.searchsorted(u.boundaries, values, side="right") - 1
    kappa = np.where(values == u.beta_u, u.n_intervals - 1, kappa)
    return kappa.astype(np.int64)


def integrate(window: Sequence[float] | np.ndarray, u: Universe) -> tuple[list[list[float]], np.ndarray]:
    """Insert each window element among the universe boundaries.

    Returns the raw rows (each of length ``n_intervals + 2``) and the
    per-row slot positions.
    """
    window = np.asarray(window, dtype=np.float64)
    bounds = u.boundaries.tolist()
    positions = slot_positions(window, u)
    rows = [
        bounds[: k + 1] + [float(a)] + bounds[k + 1:]
        for a, k in zip(window, positions)
    ]
    return rows, positions


def replace_with_last(rows: list[list[float]], positions: np.ndarray,
                      center_value: float) -> list[list[float]]:
    """Overwrite every inserted slot with the window's last element."""
    out = []
    for row, k in zip(rows, positions):
        row = list(row)
        row[k + 1] = float(center_value)
        out.append(row)
    return out


def pad_and_crop(rows: list[list[float]], positions: np.ndarray, u: Universe,
                 target_width: int | None = None) -> EncodedWindow:
    """Balance each row around its slot, then bring all rows to one odd width.

    Each row is padded on its shorter side with copies of the universe bound
    (lower bound on the left, upper on the right) until the slot is
    equidistant from both ends.  Rows are then cropped symmetrically to the
    shortest padded length among them, or to ``target_width`` when given
    (extending symmetrically if a padded row is narrower than the target).
    """
    positions = np.asarray(positions, dtype=np.int64)
    padded = []
    for row, k in zip(rows, positions):
        left = k + 1
        right = len(row) - 1 - left
        need = max(left, right)
        row = [u.beta_l] * (need - left) + list(row) + [u.beta_u] * (need - right)
        padded.append(row)

    width = min(len(row) for row in padded) if target_width is None else int(target_width)
    half = (width - 1) // 2
    out = np.empty((len(padded), width), dtype=np.float64)
    for i, row in enumerate(padded):
        center = (len(row) - 1) // 2
        m = center - half
        if m >= 0:
            out[i] = row[m : m + width]
        else:
            out[i] = [u.beta_l] * (-m) + row + [u.beta_u] * (-m)
    center_value = float(rows[-1][positions[-1] + 1])
    return EncodedWindow(
        rows=out, center_col=half, center_value=center_value, positions=positions
    )


def encode_window(window: Sequence[float] | np.ndarray, u: Universe,
                  target_width: int | None = None) -> EncodedWindow:
    """Integrate, replace and pad/crop a single window."""
    window = np.asarray(window, dtype=np.float64)
    rows, positions = integrate(window, u)
    rows = replace_with_last(rows, positions, window[-1])
    return pad_and_crop(rows, positions, u, target_width)


def padded_widths(positions: np.ndarray, u: Universe) -> np.ndarray:
    """Row width after balancing, as a function of slot position alone."""
    positions = np.asarray(positions, dtype=np.int64)
    left = positions + 1
    right = u.n_intervals + 1 - left
    return 2 * np.maximum(left, right) + 1


def encode_windows(windows: np.ndarray, u: Universe, width: int) -> np.ndarray:
    """Vectorized integrate+replace+pad/crop of many windows to one width.

    Equivalent to :func:`encode_window` row by row; used for training-scale
    encoding.  ``windows`` has shape ``(n, W)``; the result ``(n, W, width)``.
    """
    windows = np.asarray(windows, dtype=np.float64)
    n, w = windows.shape
    half = (width - 1) // 2
    kappa = slot_positions(windows.reshape(-1), u).reshape(n, w)
    bounds = u.boundaries

    out = np.empty((n, w, width), dtype=np.float64)
    out[:, :, half] = windows[:, -1][:, None]
    offsets = np.arange(1, half + 1)
    # Right of center: boundaries kappa+t, clamped to the upper bound.
    right_idx = np.clip(kappa[:, :, None] + offsets, 0, u.n_intervals)
    out[:, :, half + 1 :] = bounds[right_idx]
    # Left of center: boundaries kappa+1-t, clamped to the lower bound.
    left_idx = np.clip(kappa[:, :, None] + 1 - offsets, 0, u.n_intervals)
    out[:, :, half - 1 :: -1] = bounds[left_idx]
    return out


def min_cbaa_width(filter_size: int, dilation: int) -> int:
    """Smallest odd row width on which the dilated filter fits."""
    return 2 * ((filter_size - 1) * dilation + 1) + 1


def cbaa_apply(rows: np.ndarray, filt_right: np.ndarray, dilation: int,
               filt_left: np.ndarray | None = None) -> np.ndarray:
    """Run the center-outward dilated filter over both halves of each row.

    ``rows`` is ``(..., S)`` with odd ``S``.  The filter walks from the
    column next to the center outward, on the right half directly and on the
    mirrored left half; left features are emitted back in left-to-right
    spatial order.  Output shape is ``(..., 2*Lc + 1)`` with the center value
    untouched at column ``Lc``.

    Raises
    ------
    FilterTooLarge
        The dilated filter does not fit in a half-row.
    """
    rows = np.asarray(rows, dtype=np.float64)
    filt_right = np.asarray(filt_right, dtype=np.float64)
    filt_left = filt_right if filt_left is None else np.asarray(filt_left, dtype=np.float64)
    v = len(filt_right)
    d = int(dilation)
    s = rows.shape[-1]
    half = (s - 1) // 2
    out_len = half - (v - 1) * d
    if out_len < 1:
        raise FilterTooLarge(
            f"filter size {v} at dilation {d} does not fit in half-row of {half}",
            min_width=min_cbaa_width(v, d),
        )

    center = rows[..., half]
    right = rows[..., half + 1 :]
    left = rows[..., half - 1 :: -1]

    def side(x: np.ndarray, f: np.ndarray) -> np.ndarray:
        acc = f[0] * x[..., :out_len]
        for g in range(1, v):
            acc = acc + f[g] * x[..., g * d : g * d + out_len]
        return acc

    return np.concatenate(
        [side(left, filt_left)[..., ::-1], center[..., None], side(right, filt_right)],
        axis=-1,
    )


def cbaa(win: EncodedWindow, filt: np.ndarray, dilation: int = 1,
         filt_left: np.ndarray | None = None) -> CbaaFeatures:
    """Apply the center-outward dilated step to one encoded window."""
    rows = cbaa_apply(win.rows, filt, dilation, filt_left)
    return CbaaFeatures(rows=rows, center_col=(rows.shape[-1] - 1) // 2)


class WindowEncoder(TransformerMixin, BaseEstimator):
    """Fit the universe and common row width on training differences,
    then encode difference windows into ``(n, W, S)`` matrices.

    Parameters
    ----------
    window_size : int
        Sliding-window size ``W``.
    phi_floor : float
        Lower bound on the universe margin so the interval width stays
        positive on constant sequences.
    """

    def __init__(self, window_size: int = 9, phi_floor: float = PHI_FLOOR):
        self.window_size = window_size
        self.phi_floor = phi_floor

    def fit(self, X, y=None):
        """Build the universe and row width from training difference arrays.

        ``X`` is a single 1-D difference array or a list of them (one per
        series); the universe pools them all.
        """
        diff_arrays = self._as_diff_list(X)
        pooled = np.concatenate(diff_arrays)
        self.universe_ = build_universe(pooled, self.phi_floor)
        eligible = [a for a in diff_arrays if len(a) >= self.window_size]
        if not eligible:
            raise SeriesTooShort(
                f"no series has {self.window_size} differences to window"
            )
        widths = [
            padded_widths(slot_positions(a, self.universe_), self.universe_)
            for a in eligible
        ]
        self.width_ = int(min(w.min() for w in widths))
        return self

    def transform(self, X) -> np.ndarray:
        """Encode windows of shape ``(n, W)`` into ``(n, W, width_)``."""
        self._check_fitted()
        windows = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if windows.shape[1] != self.window_size:
            raise ValueError(
                f"windows have {windows.shape[1]} columns, expected "
                f"{self.window_size}"
            )
        return encode_windows(windows, self.universe_, self.width_)

    def encode_window(self, window) -> EncodedWindow:
        """Encode a single window through the step-by-step path."""
        self._check_fitted()
        return encode_window(window, self.universe_, self.width_)

    def _check_fitted(self):
        if not hasattr(self, "universe_"):
            raise NotFittedError("WindowEncoder used before fit")

    @staticmethod
    def _as_diff_list(X) -> list[np.ndarray]:
        if isinstance(X, np.ndarray) and X.ndim == 1:
            return [np.asarray(X, dtype=np.float64)]
        return [np.asarray(a, dtype=np.float64) for a in X]
