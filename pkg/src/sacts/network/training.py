"""Training loop: shuffled mini-batches, L1 loss, NAdam, plateau scheduling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyTrainingSet
from .layers import l1_loss
from .model import SacNetwork
from .optim import NAdam, ReduceLROnPlateau


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 500
    batch_size: int = 256
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    opt_eps: float = 1e-8
    momentum_decay: float = 0.004
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    scheduler_threshold: float = 1e-5
    scheduler_eps: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.scheduler_factor < 1.0:
            raise ValueError(
                f"scheduler factor must be in (0, 1), got {self.scheduler_factor}"
            )
        if self.scheduler_patience < 1:
            raise ValueError(
                f"scheduler patience must be >= 1, got {self.scheduler_patience}"
            )
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")


@dataclass
class TrainResult:
    losses: list[float] = field(default_factory=list)
    rates: list[float] = field(default_factory=list)


def train_network(
    net: SacNetwork,
    encoded: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    optimizer: NAdam | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[TrainResult, NAdam]:
    """Fit ``net`` on encoded windows and their next-difference targets.

    Shuffling is driven by ``rng`` (default: a generator seeded from
    ``cfg.seed``) alone, so identical inputs and config reproduce identical
    parameters.  Returns the per-epoch loss curve and the optimizer (whose
    state a checkpoint can carry).
    """
    encoded = np.asarray(encoded, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = len(targets)
    if n == 0:
        raise EmptyTrainingSet("no training window carries a target")
    if optimizer is None:
        optimizer = NAdam(
            net.params(),
            lr=cfg.learning_rate,
            beta1=cfg.beta1,
            beta2=cfg.beta2,
            eps=cfg.opt_eps,
            momentum_decay=cfg.momentum_decay,
        )
    scheduler = ReduceLROnPlateau(
        optimizer,
        factor=cfg.scheduler_factor,
        patience=cfg.scheduler_patience,
        threshold=cfg.scheduler_threshold,
        eps=cfg.scheduler_eps,
    )
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    result = TrainResult()

    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        abs_err = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            preds = net.forward(encoded[batch], training=True)
            loss, dpred = l1_loss(preds, targets[batch])
            grads = net.backward(dpred)
            optimizer.step(grads)
            abs_err += loss * len(batch)
        epoch_loss = abs_err / n
        result.losses.append(epoch_loss)
        result.rates.append(scheduler.step(epoch_loss))
    return result, optimizer
