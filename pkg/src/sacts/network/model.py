"""The semi-asymmetric convolutional network over encoded windows.

Data flow for one batch of encoded windows ``(B, W, S)``:

    dilated center-outward filter  -> (B, W, S')
    as one channel                 -> (B, 1, W, S')
    batch normalization
    L semi-asymmetric stages       -> (B, X, W - L*(V-1), S' - L*(H-1))
    flatten, affine, ReLU, affine  -> (B,) predicted next differences

The first stage lifts the single input channel to ``X = out_factor``
channels; later stages keep the channel count.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ShapeError, StateError
from .layers import BatchNorm, CbaaLayer, Linear, ReLU, SepConvStage


@dataclass(frozen=True)
class NetworkSpec:
    """Everything needed to rebuild the network's structure."""

    window_size: int
    encoded_width: int
    cbaa_size: int = 2
    dilation: int = 1
    cbaa_independent_sides: bool = False
    n_stages: int = 2
    h_kernel: int = 3
    v_kernel: int = 2
    out_factor: int = 4
    hidden_dim: int = 64
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    def to_dict(self) -> dict:
        return asdict(self)


class SacNetwork:
    def __init__(self, spec: NetworkSpec, rng: np.random.Generator | None = None):
        rng = rng if rng is not None else np.random.default_rng(0)
        self.spec = spec
        self.cbaa = CbaaLayer(spec.cbaa_size, spec.dilation, spec.cbaa_independent_sides)
        self.bn = BatchNorm(1, eps=spec.bn_eps, momentum=spec.bn_momentum)
        self.stages = []
        in_ch = 1
        rows, cols = spec.window_size, self.cbaa.out_width(spec.encoded_width)
        if cols < 3:
            raise ShapeError(
                f"encoded width {spec.encoded_width} collapses to {cols} columns "
                f"after the dilated filter"
            )
        for i in range(spec.n_stages):
            stage = SepConvStage(
                in_ch, spec.out_factor, spec.h_kernel, spec.v_kernel, rng,
                name=f"stage{i + 1}",
            )
            rows, cols = stage.out_shape(rows, cols)
            self.stages.append(stage)
            in_ch = spec.out_factor
        self.flat_dim = spec.out_factor * rows * cols
        self.head1 = Linear(self.flat_dim, spec.hidden_dim, rng, name="head1")
        self.relu = ReLU()
        self.head2 = Linear(spec.hidden_dim, 1, rng, name="head2")
        self._batch_shape = None

    def _components(self):
        yield "cbaa", self.cbaa
        yield "bn", self.bn
        for stage in self.stages:
            yield stage.name, stage
        yield "head1", self.head1
        yield "head2", self.head2

    def params(self) -> dict[str, np.ndarray]:
        """Live views of every learnable array, keyed ``component.param``."""
        return {
            f"{name}.{key}": arr
            for name, comp in self._components()
            for key, arr in comp.params.items()
        }

    def grads(self) -> dict[str, np.ndarray]:
        return {
            f"{name}.{key}": arr
            for name, comp in self._components()
            for key, arr in comp.grads.items()
        }

    def set_params(self, values: dict[str, np.ndarray]) -> None:
        for name, arr in self.params().items():
            arr[...] = values[name]

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        """Predict the next difference for each encoded window in ``x``."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3:
            raise ShapeError(f"expected (batch, W, S) input, got shape {x.shape}")
        if x.shape[1] != self.spec.window_size or x.shape[2] != self.spec.encoded_width:
            raise ShapeError(
                f"encoded windows {x.shape[1]}x{x.shape[2]} do not match the "
                f"network's {self.spec.window_size}x{self.spec.encoded_width}"
            )
        out = self.cbaa.forward(x)
        out = out[:, None, :, :]
        out = self.bn.forward(out, training)
        for stage in self.stages:
            out = stage.forward(out)
        self._batch_shape = out.shape
        out = out.reshape(out.shape[0], -1)
        out = self.head1.forward(out)
        out = self.relu.forward(out)
        out = self.head2.forward(out)
        return out[:, 0]

    def backward(self, dpred: np.ndarray) -> dict[str, np.ndarray]:
        """Propagate loss gradients back to every parameter."""
        if self._batch_shape is None:
            raise StateError("backward before forward")
        dout = np.asarray(dpred, dtype=np.float64)[:, None]
        dout = self.head2.backward(dout)
        dout = self.relu.backward(dout)
        dout = self.head1.backward(dout)
        dout = dout.reshape(self._batch_shape)
        for stage in reversed(self.stages):
            dout = stage.backward(dout)
        dout = self.bn.backward(dout)
        self.cbaa.backward(dout[:, 0, :, :])
        return self.grads()

    def buffers(self) -> dict[str, np.ndarray]:
        """Non-learnable state (running batch-norm statistics)."""
        return {
            "bn.running_mean": self.bn.running_mean,
            "bn.running_var": self.bn.running_var,
        }

    def set_buffers(self, values: dict[str, np.ndarray]) -> None:
        self.bn.running_mean = values["bn.running_mean"].copy()
        self.bn.running_var = values["bn.running_var"].copy()
