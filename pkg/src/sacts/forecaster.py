"""The forecaster estimator: difference, encode, train, forecast.

``SacForecaster`` follows the scikit-learn estimator contract: constructor
arguments are hyperparameters (``get_params``/``set_params``/``clone`` work),
``fit`` learns from one or many series, fitted state lives in
trailing-underscore attributes.  One model is trained per dataset over the
pooled windows of all its series (a global model); each series is still
forecast independently and recursively.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from . import checkpoint as ckpt
from .datasets import Dataset, TimeSeries
from .encoder import Universe, WindowEncoder
from .errors import (
    CheckpointError,
    CheckpointMismatch,
    EmptyTrainingSet,
    NotFittedError,
    NumericError,
)
from .network import NAdam, NetworkSpec, SacNetwork, TrainConfig, train_network
from .pipeline import difference, forecast_recursive, make_windows

CHECKPOINT_VERSION = 1

# Constructor arguments that shape the encoder and network; a checkpoint is
# only interchangeable with a configuration that agrees on all of them.
STRUCTURAL_PARAMS = (
    "window_size",
    "out_factor",
    "n_stages",
    "h_kernel",
    "v_kernel",
    "cbaa_size",
    "dilation",
    "cbaa_independent_sides",
    "hidden_dim",
    "phi_floor",
)


def _as_series_list(X) -> list[tuple[str, np.ndarray]]:
    """Normalize fit/forecast input to ``(id, values)`` pairs."""
    if isinstance(X, Dataset):
        items = [(s.id, s.values) for s in X.series]
    elif isinstance(X, TimeSeries):
        items = [(X.id, X.values)]
    elif isinstance(X, np.ndarray) and X.ndim == 1:
        items = [("T1", X)]
    elif isinstance(X, (list, tuple)) and X and isinstance(X[0], TimeSeries):
        items = [(s.id, s.values) for s in X]
    elif isinstance(X, (list, tuple)):
        items = [(f"T{i + 1}", np.asarray(v)) for i, v in enumerate(X)]
    else:
        raise TypeError(
            "expected a 1-D array, a list of 1-D arrays, TimeSeries or Dataset"
        )
    out = []
    for sid, values in items:
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError(f"series {sid!r} is not one-dimensional")
        if not np.isfinite(values).all():
            raise NumericError(
                f"series {sid!r} contains NaN or infinity; resolve missing "
                f"values before fitting"
            )
        out.append((sid, values))
    return out


class SacForecaster(BaseEstimator):
    """Forecast univariate series with the semi-asymmetric convolutional model.

    Parameters mirror the training recipe: a sliding window of
    ``window_size`` differences is encoded against the training universe of
    discourse, passed through a learnable center-outward dilated filter of
    ``cbaa_size`` taps at ``dilation``, batch-normalized, convolved by
    ``n_stages`` semi-asymmetric stages (1 x ``h_kernel`` then
    ``v_kernel`` x 1, first stage lifting to ``out_factor`` channels) and
    regressed to the next difference through a two-layer head.  Training
    runs ``epochs`` epochs of L1 loss under NAdam with reduce-on-plateau
    scheduling, deterministically per ``seed``.
    """

    def __init__(self, window_size: int = 9, out_factor: int = 4,
                 n_stages: int = 2, h_kernel: int = 3, v_kernel: int = 2,
                 cbaa_size: int = 2, dilation: int = 1,
                 cbaa_independent_sides: bool = False, hidden_dim: int = 64,
                 epochs: int = 500, batch_size: int = 256,
                 learning_rate: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, opt_eps: float = 1e-8,
                 momentum_decay: float = 0.004, scheduler_factor: float = 0.5,
                 scheduler_patience: int = 5, scheduler_threshold: float = 1e-5,
                 scheduler_eps: float = 1e-5, bn_eps: float = 1e-5,
                 bn_momentum: float = 0.1, phi_floor: float = 1e-8,
                 seed: int = 0):
        self.window_size = window_size
        self.out_factor = out_factor
        self.n_stages = n_stages
        self.h_kernel = h_kernel
        self.v_kernel = v_kernel
        self.cbaa_size = cbaa_size
        self.dilation = dilation
        self.cbaa_independent_sides = cbaa_independent_sides
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.opt_eps = opt_eps
        self.momentum_decay = momentum_decay
        self.scheduler_factor = scheduler_factor
        self.scheduler_patience = scheduler_patience
        self.scheduler_threshold = scheduler_threshold
        self.scheduler_eps = scheduler_eps
        self.bn_eps = bn_eps
        self.bn_momentum = bn_momentum
        self.phi_floor = phi_floor
        self.seed = seed

    # ------------------------------------------------------------- fitting

    def fit(self, X, y=None):
        """Fit the encoder and network on one or many series.

        ``X`` may be a 1-D array, a list of 1-D arrays, a list of
        :class:`TimeSeries` or a :class:`Dataset`.  Series too short to form
        a training window are still pooled into the universe but contribute
        no windows.
        """
        series = _as_series_list(X)
        diffs = {}
        for i, (sid, values) in enumerate(series):
            if len(values) >= 2:
                diffs[(sid, i)] = difference(values, source_id=sid)
        if not any(len(d) >= self.window_size + 1 for d in diffs.values()):
            raise EmptyTrainingSet(
                f"no series yields a window of {self.window_size} differences "
                f"with a training target"
            )

        encoder = WindowEncoder(self.window_size, self.phi_floor)
        encoder.fit([d.alphas for d in diffs.values()])

        window_blocks, target_blocks = [], []
        for key in sorted(diffs):
            d = diffs[key]
            if len(d) < self.window_size + 1:
                continue  # no window with an in-sample target
            ws = make_windows(d, self.window_size)
            window_blocks.append(ws.windows[:-1])
            target_blocks.append(ws.targets)
        windows = np.concatenate(window_blocks)
        targets = np.concatenate(target_blocks)

        spec = NetworkSpec(
            window_size=self.window_size,
            encoded_width=encoder.width_,
            cbaa_size=self.cbaa_size,
            dilation=self.dilation,
            cbaa_independent_sides=self.cbaa_independent_sides,
            n_stages=self.n_stages,
            h_kernel=self.h_kernel,
            v_kernel=self.v_kernel,
            out_factor=self.out_factor,
            hidden_dim=self.hidden_dim,
            bn_eps=self.bn_eps,
            bn_momentum=self.bn_momentum,
        )
        init_seed, shuffle_seed = np.random.SeedSequence(self.seed).spawn(2)
        net = SacNetwork(spec, np.random.default_rng(init_seed))
        cfg = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            opt_eps=self.opt_eps,
            momentum_decay=self.momentum_decay,
            scheduler_factor=self.scheduler_factor,
            scheduler_patience=self.scheduler_patience,
            scheduler_threshold=self.scheduler_threshold,
            scheduler_eps=self.scheduler_eps,
            seed=self.seed,
        )
        result, optimizer = train_network(
            net, encoder.transform(windows), targets, cfg,
            rng=np.random.default_rng(shuffle_seed),
        )

        self.encoder_ = encoder
        self.network_ = net
        self.optimizer_ = optimizer
        self.loss_curve_ = result.losses
        self.lr_curve_ = result.rates
        self.series_ids_ = [sid for sid, _ in series]
        self.series_values_ = {sid: values for sid, values in series}
        self.n_training_windows_ = len(targets)
        return self

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise NotFittedError("SacForecaster used before fit")

    # --------------------------------------------------------- forecasting

    def predict_window(self, window: np.ndarray) -> float:
        """Predicted next difference for one window of ``window_size`` diffs."""
        self._check_fitted()
        encoded = self.encoder_.transform(np.asarray(window, dtype=np.float64)[None, :])
        return float(self.network_.forward(encoded, training=False)[0])

    def forecast(self, values, horizon: int) -> np.ndarray:
        """Forecast ``horizon`` steps beyond the end of ``values``."""
        self._check_fitted()
        values = np.asarray(values, dtype=np.float64)
        return forecast_recursive(self.predict_window, values, horizon, self.window_size)

    def predict(self, horizon: int) -> np.ndarray:
        """Forecast every fitted series; returns ``(n_series, horizon)``."""
        self._check_fitted()
        return np.stack(
            [self.forecast(self.series_values_[sid], horizon) for sid in self.series_ids_]
        )

    # --------------------------------------------------------- persistence

    def save(self, path) -> None:
        """Write a checkpoint that restores this estimator bit for bit."""
        self._check_fitted()
        u = self.encoder_.universe_
        meta = {
            "format": CHECKPOINT_VERSION,
            "hyper": self.get_params(),
            "encoder": {
                "beta_l": u.beta_l,
                "beta_u": u.beta_u,
                "xi": u.xi,
                "n_intervals": u.n_intervals,
                "phi": u.phi,
                "width": self.encoder_.width_,
            },
        }
        arrays = {f"param.{k}": v for k, v in self.network_.params().items()}
        arrays.update({f"buffer.{k}": v for k, v in self.network_.buffers().items()})
        arrays.update(self.optimizer_.state_arrays())
        ckpt.save_checkpoint(path, meta, arrays)

    @classmethod
    def load(cls, path) -> "SacForecaster":
        """Rebuild a fitted estimator from :meth:`save` output."""
        meta, arrays = ckpt.load_checkpoint(path)
        if meta.get("format") != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format {meta.get('format')!r}")
        est = cls(**meta["hyper"])

        enc_meta = meta["encoder"]
        encoder = WindowEncoder(est.window_size, est.phi_floor)
        encoder.universe_ = Universe(
            beta_l=enc_meta["beta_l"],
            beta_u=enc_meta["beta_u"],
            xi=enc_meta["xi"],
            n_intervals=enc_meta["n_intervals"],
            phi=enc_meta["phi"],
        )
        encoder.width_ = int(enc_meta["width"])

        spec = NetworkSpec(
            window_size=est.window_size,
            encoded_width=encoder.width_,
            cbaa_size=est.cbaa_size,
            dilation=est.dilation,
            cbaa_independent_sides=est.cbaa_independent_sides,
            n_stages=est.n_stages,
            h_kernel=est.h_kernel,
            v_kernel=est.v_kernel,
            out_factor=est.out_factor,
            hidden_dim=est.hidden_dim,
            bn_eps=est.bn_eps,
            bn_momentum=est.bn_momentum,
        )
        net = SacNetwork(spec, np.random.default_rng(0))
        net.set_params({k[len("param."):]: v for k, v in arrays.items()
                        if k.startswith("param.")})
        net.set_buffers({k[len("buffer."):]: v for k, v in arrays.items()
                         if k.startswith("buffer.")})
        optimizer = NAdam(
            net.params(), lr=est.learning_rate, beta1=est.beta1, beta2=est.beta2,
            eps=est.opt_eps, momentum_decay=est.momentum_decay,
        )
        optimizer.load_state_arrays(arrays)

        est.encoder_ = encoder
        est.network_ = net
        est.optimizer_ = optimizer
        est.loss_curve_ = []
        est.lr_curve_ = []
        est.series_ids_ = []
        est.series_values_ = {}
        est.n_training_windows_ = 0
        return est

    def check_compatible(self, overrides: dict) -> None:
        """Reject structural hyperparameters that contradict this model.

        Raises
        ------
        CheckpointMismatch
            Any explicitly requested structural parameter differs from the
            checkpointed one.
        """
        for key in STRUCTURAL_PARAMS:
            if key in overrides and overrides[key] != getattr(self, key):
                raise CheckpointMismatch(
                    f"checkpoint was trained with {key}={getattr(self, key)!r}, "
                    f"requested {overrides[key]!r}"
                )
