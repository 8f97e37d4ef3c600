"""Independent oracles shared by unit and acceptance tests.

Everything here is deliberately naive (explicit loops) so it cannot share a
bug with the vectorized implementations it checks.
"""

import numpy as np

from sacts.network import SacNetwork, l1_loss


def conv2d_valid_brute(image: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Plain 2-D valid cross-correlation by explicit loops."""
    kv, kh = kernel.shape
    rows = image.shape[0] - kv + 1
    cols = image.shape[1] - kh + 1
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            out[i, j] = np.sum(image[i : i + kv, j : j + kh] * kernel)
    return out


def finite_difference_check(net: SacNetwork, x: np.ndarray, y: np.ndarray,
                            step: float = 1e-6) -> tuple[float, str]:
    """Worst relative error between analytic and central-difference gradients.

    Relative error is ``|analytic - numeric| / max(1, |numeric|)``, taken
    over every entry of every parameter.
    """

    def loss_value() -> float:
        return l1_loss(net.forward(x, training=True), y)[0]

    loss, dpred = l1_loss(net.forward(x, training=True), y)
    analytic = {k: v.copy() for k, v in net.backward(dpred).items()}

    worst, worst_name = 0.0, ""
    for name, param in net.params().items():
        flat = param.reshape(-1)
        grad = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            h = step * max(1.0, abs(original))
            flat[i] = original + h
            up = loss_value()
            flat[i] = original - h
            down = loss_value()
            flat[i] = original
            numeric = (up - down) / (2.0 * h)
            rel = abs(grad[i] - numeric) / max(1.0, abs(numeric))
            if rel > worst:
                worst, worst_name = rel, f"{name}[{i}]"
    return worst, worst_name
