import math

import numpy as np
import pytest

from mecoffload.nn import (MlpParams, adam_step,
                           finite_difference_check, init_adam, init_mlp,
                           load_params, mlp_forward, mlp_gradient,
                           save_params)


def scalar_net(w1=1.0, b1=0.0, w2=1.0, b2=0.0):
    return MlpParams(w1=np.array([[w1]]), b1=np.array([b1]),
                     w2=np.array([[w2]]), b2=np.array([b2]))


class TestForward:
    def test_zero_params_give_output_bias(self):
        params = MlpParams(w1=np.zeros((8, 3)), b1=np.zeros(8),
                           w2=np.zeros((4, 8)), b2=np.zeros(4))
        np.testing.assert_array_equal(mlp_forward(params, np.ones(3)),
                                      np.zeros(4))

    def test_scalar_identity_net(self):
        out = mlp_forward(scalar_net(), np.array([0.5]))
        assert out[0] == pytest.approx(0.46211715726000974, rel=1e-15)

    def test_zero_input_kills_weight_path(self):
        rng = np.random.default_rng(0)
        params = init_mlp(5, 16, 3, rng)
        expected = params.w2 @ np.tanh(params.b1) + params.b2
        np.testing.assert_allclose(mlp_forward(params, np.zeros(5)), expected,
                                   rtol=1e-15)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(1)
        params = init_mlp(6, 10, 4, rng)
        xs = rng.normal(size=(7, 6))
        batch = mlp_forward(params, xs)
        for i in range(7):
            np.testing.assert_allclose(batch[i], mlp_forward(params, xs[i]),
                                       rtol=1e-15)


class TestGradient:
    def test_zero_error_gives_zero_gradient(self):
        rng = np.random.default_rng(2)
        params = init_mlp(4, 8, 3, rng)
        g = mlp_gradient(params, rng.normal(size=4), np.zeros(3))
        for f in ("w1", "b1", "w2", "b2"):
            assert not np.any(getattr(g, f))

    def test_output_bias_gradient_is_error_signal(self):
        rng = np.random.default_rng(3)
        params = init_mlp(4, 8, 3, rng)
        err = rng.normal(size=3)
        g = mlp_gradient(params, rng.normal(size=4), err)
        np.testing.assert_allclose(g.b2, err, rtol=1e-15)

    def test_finite_difference_small_net(self):
        rng = np.random.default_rng(4)
        params = init_mlp(5, 9, 4, rng)
        rel = finite_difference_check(params, rng.normal(size=5),
                                      rng.normal(size=4))
        assert rel < 1e-6

    def test_batch_gradient_is_sum_of_singles(self):
        rng = np.random.default_rng(5)
        params = init_mlp(3, 6, 2, rng)
        xs = rng.normal(size=(4, 3))
        errs = rng.normal(size=(4, 2))
        batch = mlp_gradient(params, xs, errs)
        total = np.zeros_like(batch.w1)
        for i in range(4):
            total += mlp_gradient(params, xs[i], errs[i]).w1
        np.testing.assert_allclose(batch.w1, total, rtol=1e-12)

    def test_shape_mismatch_rejected(self):
        rng = np.random.default_rng(6)
        params = init_mlp(3, 6, 2, rng)
        with pytest.raises(ValueError):
            mlp_gradient(params, np.zeros(3), np.zeros(5))


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        rng = np.random.default_rng(7)
        params = init_mlp(3, 5, 2, rng)
        state = init_adam(params)
        zero = MlpParams(np.zeros_like(params.w1), np.zeros_like(params.b1),
                         np.zeros_like(params.w2), np.zeros_like(params.b2))
        updated, state2 = adam_step(params, state, zero)
        for f in ("w1", "b1", "w2", "b2"):
            np.testing.assert_array_equal(getattr(updated, f), getattr(params, f))
        assert state2.step == 1

    def test_first_step_magnitude(self):
        # bias correction makes the first step almost exactly the step size
        params = scalar_net(w1=0.3)
        state = init_adam(params, lr=1e-3)
        ones = MlpParams(np.ones((1, 1)), np.zeros(1), np.zeros((1, 1)), np.zeros(1))
        updated, _ = adam_step(params, state, ones)
        delta = params.w1[0, 0] - updated.w1[0, 0]
        assert abs(delta - 1e-3) < 1e-10

    def test_purity_and_determinism(self):
        rng = np.random.default_rng(8)
        params = init_mlp(3, 5, 2, rng)
        state = init_adam(params)
        grads = mlp_gradient(params, rng.normal(size=3), rng.normal(size=2))
        a1, s1 = adam_step(params, state, grads)
        a2, s2 = adam_step(params, state, grads)
        assert state.step == 0                       # input untouched
        for f in ("w1", "b1", "w2", "b2"):
            np.testing.assert_array_equal(getattr(a1, f), getattr(a2, f))
            np.testing.assert_array_equal(getattr(s1.m, f), getattr(s2.m, f))

    def test_descent_on_fixed_batch(self):
        rng = np.random.default_rng(9)
        params = init_mlp(4, 12, 1, rng)
        state = init_adam(params, lr=3e-3)
        xs = rng.normal(size=(32, 4))
        ys = np.sin(xs.sum(axis=1, keepdims=True))

        def loss(p):
            return float(np.mean((mlp_forward(p, xs) - ys) ** 2))

        first = loss(params)
        for _ in range(100):
            err = 2.0 * (mlp_forward(params, xs) - ys) / len(xs)
            grads = mlp_gradient(params, xs, err)
            params, state = adam_step(params, state, grads)
        assert loss(params) < first


class TestInitAndCheckpoints:
    def test_deterministic_fan_in_init(self):
        a = init_mlp(7, 20, 3, np.random.default_rng(123))
        b = init_mlp(7, 20, 3, np.random.default_rng(123))
        for f in ("w1", "b1", "w2", "b2"):
            np.testing.assert_array_equal(getattr(a, f), getattr(b, f))
        assert np.abs(a.w1).max() <= 1 / math.sqrt(7)
        assert np.abs(a.w2).max() <= 1 / math.sqrt(20)

    def test_copy_is_deep(self):
        a = init_mlp(3, 4, 2, np.random.default_rng(0))
        b = a.copy()
        b.w1[0, 0] += 1.0
        assert a.w1[0, 0] != b.w1[0, 0]

    def test_checkpoint_roundtrip(self, tmp_path):
        rng = np.random.default_rng(10)
        params = init_mlp(5, 8, 3, rng)
        state = init_adam(params, lr=2e-3)
        grads = mlp_gradient(params, rng.normal(size=5), rng.normal(size=3))
        params, state = adam_step(params, state, grads)
        path = tmp_path / "ckpt.npz"
        save_params(path, params, state)
        loaded, adam = load_params(path)
        for f in ("w1", "b1", "w2", "b2"):
            np.testing.assert_array_equal(getattr(loaded, f), getattr(params, f))
            np.testing.assert_array_equal(getattr(adam.m, f), getattr(state.m, f))
        assert adam.step == 1 and adam.lr == 2e-3

    def test_checkpoint_without_optimizer(self, tmp_path):
        params = init_mlp(3, 4, 2, np.random.default_rng(1))
        path = tmp_path / "p.npz"
        save_params(path, params)
        loaded, adam = load_params(path)
        assert adam is None
        np.testing.assert_array_equal(loaded.w2, params.w2)
