import numpy as np
import pytest

from sacts.network import NAdam, ReduceLROnPlateau


def reference_nadam_trajectory(grads, lr=1e-3, beta1=0.9, beta2=0.999,
                               eps=1e-8, psi=0.004, theta0=1.0):
    """Scalar re-derivation of the published recurrence, used as an oracle."""
    theta, m, v, mu_product = theta0, 0.0, 0.0, 1.0
    out = []
    for t, g in enumerate(grads, start=1):
        mu_t = beta1 * (1 - 0.5 * 0.96 ** (t * psi))
        mu_next = beta1 * (1 - 0.5 * 0.96 ** ((t + 1) * psi))
        mu_product *= mu_t
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_bar = (1 - mu_t) * g / (1 - mu_product) + mu_next * m / (1 - mu_product * mu_next)
        v_hat = v / (1 - beta2 ** t)
        theta = theta - lr * m_bar / (np.sqrt(v_hat) + eps)
        out.append(theta)
    return out


class TestNAdam:
    def test_zero_gradient_keeps_params(self):
        p = {"w": np.array([1.5, -2.0])}
        opt = NAdam(p)
        for _ in range(10):
            opt.step({"w": np.zeros(2)})
        assert np.array_equal(p["w"], [1.5, -2.0])

    def test_single_step_hand_unrolled(self):
        p = {"w": np.array([1.0])}
        NAdam(p, lr=1e-3).step({"w": np.array([1.0])})
        expected = reference_nadam_trajectory([1.0])[0]
        assert p["w"][0] == expected

    def test_trajectory_matches_reference(self):
        rng = np.random.default_rng(0)
        grads = rng.normal(0, 1, 20)
        p = {"w": np.array([0.3])}
        opt = NAdam(p, lr=0.01, beta1=0.8, beta2=0.99)
        seen = []
        for g in grads:
            opt.step({"w": np.array([g])})
            seen.append(p["w"][0])
        expected = reference_nadam_trajectory(
            grads, lr=0.01, beta1=0.8, beta2=0.99, theta0=0.3
        )
        assert np.allclose(seen, expected, rtol=0, atol=0)

    def test_identical_runs_are_bitwise_identical(self):
        rng = np.random.default_rng(1)
        grads = [rng.normal(0, 1, 4) for _ in range(15)]
        results = []
        for _ in range(2):
            p = {"w": np.linspace(-1, 1, 4)}
            opt = NAdam(p)
            for g in grads:
                opt.step({"w": g})
            results.append(p["w"].copy())
        assert np.array_equal(results[0], results[1])

    def test_beta1_zero_momentum_equals_raw_gradient(self):
        p = {"w": np.array([2.0])}
        opt = NAdam(p, lr=1e-3, beta1=0.0)
        g = np.array([0.7])
        before = p["w"].copy()
        opt.step({"w": g})
        assert np.array_equal(opt.m["w"], g)
        v_hat = (1 - 0.999) * g * g / (1 - 0.999)
        expected = before - 1e-3 * g / (np.sqrt(v_hat) + 1e-8)
        assert np.allclose(p["w"], expected, atol=0)

    def test_state_round_trip(self):
        p = {"w": np.array([1.0, 2.0])}
        opt = NAdam(p)
        for t in range(5):
            opt.step({"w": np.array([0.1 * t, -0.2])})
        state = {k: v.copy() for k, v in opt.state_arrays().items()}

        p2 = {"w": p["w"].copy()}
        opt2 = NAdam(p2)
        opt2.load_state_arrays(state)
        g = np.array([0.5, 0.5])
        opt.step({"w": g})
        opt2.step({"w": g})
        assert np.array_equal(p["w"], p2["w"])


class TestReduceLROnPlateau:
    def make(self, lr=1e-3, **kwargs) -> tuple[NAdam, ReduceLROnPlateau]:
        opt = NAdam({"w": np.zeros(1)}, lr=lr)
        return opt, ReduceLROnPlateau(opt, **kwargs)

    def test_decreasing_loss_never_changes_lr(self):
        opt, sched = self.make()
        for loss in np.linspace(1.0, 0.1, 50):
            sched.step(loss)
        assert opt.lr == 1e-3

    def test_constant_loss_halves_after_six_epochs(self):
        # epoch 1 sets the best; epochs 2-6 are five stalls = patience
        opt, sched = self.make()
        rates = [sched.step(1.0) for _ in range(6)]
        assert rates[:5] == [1e-3] * 5
        assert rates[5] == 5e-4

    def test_eps_gates_tiny_reductions(self):
        opt, sched = self.make(lr=1e-5)
        for _ in range(20):
            sched.step(1.0)
        assert opt.lr == 1e-5  # 5e-6 reduction never exceeds eps 1e-5

    def test_improvement_resets_counter(self):
        opt, sched = self.make()
        for loss in [1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5, 0.5]:
            sched.step(loss)
        # counter reset at the 0.5 improvement; only 4 stalls since
        assert opt.lr == 1e-3
        sched.step(0.5)
        assert opt.lr == 5e-4

    def test_relative_threshold(self):
        # a drop smaller than best * threshold does not count as improvement
        opt, sched = self.make(threshold=0.1)
        sched.step(1.0)
        for _ in range(5):
            sched.step(0.95)
        assert opt.lr == 5e-4

    def test_validation(self):
        opt = NAdam({"w": np.zeros(1)})
        with pytest.raises(ValueError):
            ReduceLROnPlateau(opt, factor=1.5)
        with pytest.raises(ValueError):
            ReduceLROnPlateau(opt, patience=0)
