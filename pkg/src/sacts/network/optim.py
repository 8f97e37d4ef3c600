"""NAdam and reduce-on-plateau learning-rate scheduling.

NAdam follows Dozat's published recurrence with the 0.96-power momentum
schedule:

    mu_t      = beta1 * (1 - 0.5 * 0.96**(t * psi))
    mu_{t+1}  = beta1 * (1 - 0.5 * 0.96**((t+1) * psi))
    Pi_t      = Pi_{t-1} * mu_t
    m_t       = beta1 * m_{t-1} + (1 - beta1) * g
    v_t       = beta2 * v_{t-1} + (1 - beta2) * g**2
    m_bar     = (1 - mu_t) * g / (1 - Pi_t) + mu_{t+1} * m_t / (1 - Pi_t * mu_{t+1})
    v_hat     = v_t / (1 - beta2**t)
    theta    -= lr * m_bar / (sqrt(v_hat) + eps)

Parameters are updated in place so the owning network sees every step.
"""

from __future__ import annotations

import numpy as np


class NAdam:
    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 momentum_decay: float = 0.004):
        self.params = params
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.momentum_decay = float(momentum_decay)
        self.t = 0
        self.mu_product = 1.0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def _mu(self, t: int) -> float:
        return self.beta1 * (1.0 - 0.5 * 0.96 ** (t * self.momentum_decay))

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        mu_t = self._mu(self.t)
        mu_next = self._mu(self.t + 1)
        self.mu_product *= mu_t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_bar = (1.0 - mu_t) * g / (1.0 - self.mu_product) + mu_next * m / (
                1.0 - self.mu_product * mu_next
            )
            p -= self.lr * m_bar / (np.sqrt(v / bias2) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Optimizer state as named arrays, for checkpoints."""
        state = {f"opt.m.{k}": v for k, v in self.m.items()}
        state.update({f"opt.v.{k}": v for k, v in self.v.items()})
        state["opt.scalars"] = np.array([float(self.t), self.mu_product, self.lr])
        return state

    def load_state_arrays(self, state: dict[str, np.ndarray]) -> None:
        for k in self.m:
            self.m[k] = state[f"opt.m.{k}"].copy()
            self.v[k] = state[f"opt.v.{k}"].copy()
        t, mu_product, lr = state["opt.scalars"]
        self.t = int(t)
        self.mu_product = float(mu_product)
        self.lr = float(lr)


class ReduceLROnPlateau:
    """Halve the learning rate when the epoch loss stops improving.

    Relative threshold mode: an epoch improves when its loss is below
    ``best * (1 - threshold)``.  After ``patience`` consecutive
    non-improving epochs the rate is multiplied by ``factor``, but only when
    the reduction itself exceeds ``eps``; improvement resets the counter.
    """

    def __init__(self, optimizer: NAdam, factor: float = 0.5, patience: int = 5,
                 threshold: float = 1e-5, eps: float = 1e-5):
        if not 0.0 < factor < 1.0:
            raise ValueError(f"factor must be in (0, 1), got {factor}")
        if patience < 1:
            raise ValueError(f"patience must be >= 1, got {patience}")
        self.optimizer = optimizer
        self.factor = float(factor)
        self.patience = int(patience)
        self.threshold = float(threshold)
        self.eps = float(eps)
        self.best = np.inf
        self.bad_epochs = 0

    def step(self, epoch_loss: float) -> float:
        """Record one epoch's loss; returns the (possibly reduced) rate."""
        if epoch_loss < self.best * (1.0 - self.threshold):
            self.best = epoch_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                new_lr = self.optimizer.lr * self.factor
                if self.optimizer.lr - new_lr > self.eps:
                    self.optimizer.lr = new_lr
                self.bad_epochs = 0
        return self.optimizer.lr
