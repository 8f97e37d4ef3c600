"""Network layers with hand-derived adjoints.

Every layer caches what its backward pass needs during ``forward`` and
raises :class:`StateError` when ``backward`` runs first.  All math is
float64; parameter gradients land in each layer's ``grads`` dict keyed like
``params``.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..encoder import cbaa_apply
from ..errors import EmptyBatch, ShapeError, StateError


class CbaaLayer:
    """Learnable center-outward dilated filter over encoded rows.

    The encoded rows are data, not activations, so backward produces filter
    gradients only.  Both directions share one filter unless
    ``independent_sides`` is set.
    """

    def __init__(self, filter_size: int, dilation: int = 1,
                 independent_sides: bool = False):
        self.filter_size = int(filter_size)
        self.dilation = int(dilation)
        self.independent_sides = bool(independent_sides)
        init = np.full(self.filter_size, 1.0 / self.filter_size)
        if independent_sides:
            self.params = {"filter_left": init.copy(), "filter_right": init.copy()}
        else:
            self.params = {"filter": init}
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._cache = None

    def out_width(self, width: int) -> int:
        half = (width - 1) // 2
        return 2 * (half - (self.filter_size - 1) * self.dilation) + 1

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.independent_sides:
            f_left, f_right = self.params["filter_left"], self.params["filter_right"]
        else:
            f_left = f_right = self.params["filter"]
        out = cbaa_apply(x, f_right, self.dilation, f_left)
        self._cache = x
        return out

    def backward(self, dout: np.ndarray) -> None:
        if self._cache is None:
            raise StateError("CbaaLayer.backward before forward")
        x = self._cache
        s = x.shape[-1]
        half = (s - 1) // 2
        v, d = self.filter_size, self.dilation
        out_len = half - (v - 1) * d

        right = x[..., half + 1 :]
        left = x[..., half - 1 :: -1]
        d_right = dout[..., out_len + 1 :]
        d_left = dout[..., out_len - 1 :: -1]

        def filter_grad(side: np.ndarray, dside: np.ndarray) -> np.ndarray:
            return np.array(
                [np.sum(dside * side[..., g * d : g * d + out_len]) for g in range(v)]
            )

        g_left = filter_grad(left, d_left)
        g_right = filter_grad(right, d_right)
        if self.independent_sides:
            self.grads["filter_left"] = g_left
            self.grads["filter_right"] = g_right
        else:
            self.grads["filter"] = g_left + g_right


class BatchNorm:
    """Channel batch normalization over batch and spatial dimensions.

    Normalizes with biased batch statistics in training mode and updates
    running statistics for eval mode:  ``(x - mean) / sqrt(var + eps) * gamma
    + delta``.
    """

    def __init__(self, num_channels: int, eps: float = 1e-5, momentum: float = 0.1):
        self.eps = float(eps)
        self.momentum = float(momentum)
        self.params = {
            "gamma": np.ones(num_channels),
            "delta": np.zeros(num_channels),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self.running_mean = np.zeros(num_channels)
        self.running_var = np.ones(num_channels)
        self._cache = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        if x.shape[0] == 0:
            raise EmptyBatch("batch normalization over an empty batch")
        axes = (0, 2, 3)
        shape = (1, -1, 1, 1)
        if training:
            m = x.shape[0] * x.shape[2] * x.shape[3]
            if m < 2:
                raise EmptyBatch(
                    "training-mode batch normalization needs >= 2 values per channel"
                )
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
        self._cache = (xhat, inv_std, training)
        return xhat * self.params["gamma"].reshape(shape) + self.params["delta"].reshape(shape)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError("BatchNorm.backward before forward")
        xhat, inv_std, training = self._cache
        axes = (0, 2, 3)
        shape = (1, -1, 1, 1)
        self.grads["gamma"] = np.sum(dout * xhat, axis=axes)
        self.grads["delta"] = np.sum(dout, axis=axes)
        dxhat = dout * self.params["gamma"].reshape(shape)
        if not training:
            return dxhat * inv_std.reshape(shape)
        return inv_std.reshape(shape) * (
            dxhat
            - dxhat.mean(axis=axes).reshape(shape)
            - xhat * (dxhat * xhat).mean(axis=axes).reshape(shape)
        )


class SepConvStage:
    """One semi-asymmetric stage: a 1xH bank then a Vx1 bank, both valid.

    The horizontal bank lifts ``in_channels`` to ``out_channels``; the
    vertical bank mixes ``out_channels`` to ``out_channels``.  With ``V == H``
    the stage is an ordinary separable square-kernel convolution.
    """

    def __init__(self, in_channels: int, out_channels: int, h_size: int,
                 v_size: int, rng: np.random.Generator, name: str = "stage"):
        self.name = name
        self.h_size = int(h_size)
        self.v_size = int(v_size)
        h_bound = 1.0 / np.sqrt(in_channels * h_size)
        v_bound = 1.0 / np.sqrt(out_channels * v_size)
        self.params = {
            "horizontal": rng.uniform(-h_bound, h_bound, (out_channels, in_channels, h_size)),
            "vertical": rng.uniform(-v_bound, v_bound, (out_channels, out_channels, v_size)),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._cache = None

    def out_shape(self, rows: int, cols: int) -> tuple[int, int]:
        if cols < self.h_size or rows < self.v_size:
            raise ShapeError(
                f"{self.name}: feature map {rows}x{cols} smaller than kernels "
                f"({self.v_size}x1, 1x{self.h_size})"
            )
        return rows - self.v_size + 1, cols - self.h_size + 1

    def forward(self, x: np.ndarray) -> np.ndarray:
        self.out_shape(x.shape[2], x.shape[3])
        wh, wv = self.params["horizontal"], self.params["vertical"]
        xw = sliding_window_view(x, self.h_size, axis=3)
        mid = np.einsum("bcrjh,och->borj", xw, wh)
        mw = sliding_window_view(mid, self.v_size, axis=2)
        out = np.einsum("borjv,pov->bprj", mw, wv)
        self._cache = (xw, mid, mw)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError(f"{self.name}.backward before forward")
        xw, mid, mw = self._cache
        wh, wv = self.params["horizontal"], self.params["vertical"]

        self.grads["vertical"] = np.einsum("bprj,borjv->pov", dout, mw)
        dmid = np.zeros_like(mid)
        rows_out = dout.shape[2]
        for v in range(self.v_size):
            dmid[:, :, v : v + rows_out, :] += np.einsum(
                "bprj,po->borj", dout, wv[:, :, v]
            )

        self.grads["horizontal"] = np.einsum("borj,bcrjh->och", dmid, xw)
        b, c = xw.shape[0], xw.shape[1]
        dx = np.zeros((b, c, xw.shape[2], xw.shape[3] + self.h_size - 1))
        cols_out = dmid.shape[3]
        for h in range(self.h_size):
            dx[:, :, :, h : h + cols_out] += np.einsum(
                "borj,oc->bcrj", dmid, wh[:, :, h]
            )
        return dx


class Linear:
    """Affine map ``x @ w.T + b``."""

    def __init__(self, in_features: int, out_features: int,
                 rng: np.random.Generator, name: str = "linear"):
        self.name = name
        bound = 1.0 / np.sqrt(in_features)
        self.params = {
            "weight": rng.uniform(-bound, bound, (out_features, in_features)),
            "bias": rng.uniform(-bound, bound, out_features),
        }
        self.grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.shape[1] != self.params["weight"].shape[1]:
            raise ShapeError(
                f"{self.name}: input extent {x.shape[1]} does not match "
                f"weight extent {self.params['weight'].shape[1]}"
            )
        self._cache = x
        return x @ self.params["weight"].T + self.params["bias"]

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise StateError(f"{self.name}.backward before forward")
        x = self._cache
        self.grads["weight"] = dout.T @ x
        self.grads["bias"] = dout.sum(axis=0)
        return dout @ self.params["weight"]


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise StateError("ReLU.backward before forward")
        return np.where(self._mask, dout, 0.0)


def l1_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean absolute error and its subgradient w.r.t. ``pred``.

    The subgradient at exact ties is 0.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeError(f"loss extents differ: {pred.shape} vs {target.shape}")
    if pred.size == 0:
        raise ShapeError("loss over an empty batch")
    diff = pred - target
    return float(np.mean(np.abs(diff))), np.sign(diff) / pred.size
