"""MLP parameter containers, initialization, forward passes, Adam."""

import numpy as np
import pytest

from hsicwae import autodiff as ad
from hsicwae import nn


def small_params(rng=None) -> nn.MlpParams:
    rng = rng or np.random.default_rng(0)
    return nn.init_params([3, 5, 2], ["lrelu", "identity"], rng)


class TestParams:
    def test_layer_dims(self):
        p = small_params()
        assert p.layer_dims == [3, 5, 2]
        assert [w.shape for w in p.weights] == [(5, 3), (2, 5)]
        assert [b.shape for b in p.biases] == [(5,), (2,)]

    def test_dim_activation_mismatch_rejected(self):
        with pytest.raises(ValueError):
            nn.init_params([3, 5, 2], ["lrelu"], np.random.default_rng(0))

    def test_unknown_activation_rejected(self):
        with pytest.raises(ValueError):
            nn.init_params([3, 2], ["tanh"], np.random.default_rng(0))

    def test_copy_is_deep(self):
        p = small_params()
        q = p.copy()
        q.weights[0][0, 0] += 1.0
        assert p.weights[0][0, 0] != q.weights[0][0, 0]

    def test_glorot_bounds_and_zero_bias(self):
        rng = np.random.default_rng(1)
        p = nn.init_params([50, 40], ["identity"], rng)
        bound = np.sqrt(6.0 / (50 + 40))
        assert np.abs(p.weights[0]).max() <= bound
        assert np.all(p.biases[0] == 0.0)


class TestForward:
    def test_graph_and_plain_forward_agree(self):
        p = small_params()
        x = np.random.default_rng(2).normal(size=(7, 3))
        plain = nn.mlp_forward(p, x)
        graph = nn.mlp_apply(p, ad.constant(x))
        np.testing.assert_allclose(plain, graph.value, rtol=1e-15)

    def test_leaky_relu_slope(self):
        p = nn.MlpParams([np.eye(1)], [np.zeros(1)], ["lrelu"])
        assert nn.mlp_forward(p, np.array([[-10.0]]))[0, 0] == pytest.approx(-2.0)
        assert nn.mlp_forward(p, np.array([[10.0]]))[0, 0] == pytest.approx(10.0)

    def test_sigmoid_saturation_is_stable(self):
        p = nn.MlpParams([np.eye(1)], [np.zeros(1)], ["sigmoid"])
        out = nn.mlp_forward(p, np.array([[800.0], [-800.0]]))
        assert out[0, 0] == pytest.approx(1.0)
        assert out[1, 0] == pytest.approx(0.0)
        assert np.isfinite(out).all()

    def test_input_width_checked(self):
        with pytest.raises(ValueError):
            nn.mlp_forward(small_params(), np.ones((2, 4)))


class TestGrads:
    def test_collect_grads_zero_when_untouched(self):
        p = small_params()
        ws, bs = nn.param_tensors(p)
        # only touch the first layer
        ad.sum_all(ad.matmul(ad.constant(np.ones((1, 3))),
                             ad.transpose(ws[0]))).backward()
        gw, gb = nn.collect_grads(ws, bs)
        assert np.any(gw[0] != 0.0)
        assert np.all(gw[1] == 0.0)
        assert np.all(gb[0] == 0.0)


class TestAdam:
    def test_single_step_matches_hand_formula(self):
        p = nn.MlpParams([np.array([[1.0, -2.0]])], [np.array([0.5])],
                         ["identity"])
        grads = ([np.array([[0.3, -0.1]])], [np.array([0.2])])
        state = nn.AdamState.init(p, alpha=0.01)
        new_p, new_state = nn.adam_step(p, grads, state)

        b1, b2, eps = 0.9, 0.999, 1e-8
        for old, grad, new in [
            (p.weights[0], grads[0][0], new_p.weights[0]),
            (p.biases[0], grads[1][0], new_p.biases[0]),
        ]:
            m = (1 - b1) * grad
            v = (1 - b2) * grad**2
            m_hat = m / (1 - b1)
            v_hat = v / (1 - b2)
            np.testing.assert_allclose(
                new, old - 0.01 * m_hat / (np.sqrt(v_hat) + eps), rtol=1e-12)
        assert new_state.t == 1

    def test_inputs_not_mutated(self):
        p = small_params()
        snapshot = [w.copy() for w in p.weights]
        grads = ([np.ones_like(w) for w in p.weights],
                 [np.ones_like(b) for b in p.biases])
        state = nn.AdamState.init(p, alpha=0.1)
        nn.adam_step(p, grads, state)
        for w, snap in zip(p.weights, snapshot):
            np.testing.assert_array_equal(w, snap)

    def test_descends_a_quadratic(self):
        # minimize sum((w - 3)^2) over 200 steps
        p = nn.MlpParams([np.zeros((1, 1))], [np.zeros(1)], ["identity"])
        state = nn.AdamState.init(p, alpha=0.1)
        for _ in range(200):
            grads = ([2 * (p.weights[0] - 3.0)], [np.zeros(1)])
            p, state = nn.adam_step(p, grads, state)
        assert p.weights[0][0, 0] == pytest.approx(3.0, abs=1e-2)
