import numpy as np
import pytest

from mwembed.exceptions import ValidationError
from mwembed.nets import (
    MLPParams,
    mlp_backward,
    mlp_forward,
    mlp_forward_cached,
    mlp_from_dict,
    mlp_init,
    mlp_param_count,
    mlp_preactivations,
    mlp_to_dict,
)


class TestForward:
    def test_identity_single_layer(self):
        p = MLPParams([(np.eye(3), np.zeros(3))])
        x = np.array([1.0, -2.0, 0.5])
        assert np.array_equal(mlp_forward(p, x), x)

    def test_zero_weights_give_final_bias(self):
        p = MLPParams([
            (np.zeros((4, 2)), np.zeros(4)),
            (np.zeros((3, 4)), np.array([1.0, 2.0, 3.0])),
        ])
        assert np.array_equal(mlp_forward(p, np.array([5.0, -1.0])), [1.0, 2.0, 3.0])

    def test_hand_evaluated_two_layers(self):
        p = MLPParams([
            (np.array([[1.0]]), np.zeros(1)),
            (np.array([[-1.0]]), np.zeros(1)),
        ])
        assert mlp_forward(p, np.array([3.0]))[0] == -3.0

    def test_relu_blocks_negative(self):
        p = MLPParams([
            (np.array([[1.0]]), np.zeros(1)),
            (np.array([[-1.0]]), np.zeros(1)),
        ])
        # input -3: hidden ReLU(-3) = 0, output 0
        assert mlp_forward(p, np.array([-3.0]))[0] == 0.0

    def test_shape_mismatch(self):
        p = MLPParams([(np.eye(2), np.zeros(2))])
        with pytest.raises(ValidationError):
            mlp_forward(p, np.array([1.0, 2.0, 3.0]))

    def test_layer_chaining_validated(self):
        with pytest.raises(ValidationError):
            MLPParams([(np.eye(2), np.zeros(2)), (np.eye(3), np.zeros(3))])


class TestBackward:
    @pytest.mark.parametrize("seed", range(5))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        p = mlp_init([3, 6, 4, 2], rng)
        x = rng.standard_normal(3)
        upstream = rng.standard_normal(2)
        pre = [z for layer in mlp_preactivations(p, x) for z in layer]
        if any(abs(z) < 1e-4 for z in pre):
            pytest.skip("configuration too close to a ReLU kink")
        _, inputs = mlp_forward_cached(p, x)
        grads, _ = mlp_backward(p, inputs, upstream)
        h = 1e-6
        for k, (w, b) in enumerate(p.layers):
            for arr, g in ((w, grads[k][0]), (b, grads[k][1])):
                flat = arr.reshape(-1)
                gflat = g.reshape(-1)
                for idx in range(flat.size):
                    orig = flat[idx]
                    flat[idx] = orig + h
                    up = float(upstream @ mlp_forward(p, x))
                    flat[idx] = orig - h
                    dn = float(upstream @ mlp_forward(p, x))
                    flat[idx] = orig
                    fd = (up - dn) / (2 * h)
                    assert gflat[idx] == pytest.approx(fd, rel=1e-5, abs=1e-7)

    def test_input_gradient(self):
        rng = np.random.default_rng(9)
        p = mlp_init([2, 5, 3], rng)
        x = rng.standard_normal(2)
        upstream = rng.standard_normal(3)
        _, inputs = mlp_forward_cached(p, x)
        _, g_in = mlp_backward(p, inputs, upstream)
        h = 1e-6
        for i in range(2):
            xp = x.copy(); xp[i] += h
            xm = x.copy(); xm[i] -= h
            fd = (upstream @ mlp_forward(p, xp) - upstream @ mlp_forward(p, xm)) / (2 * h)
            assert g_in[i] == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestParamCount:
    def test_all_zero_model(self):
        p = MLPParams([(np.zeros((3, 2)), np.zeros(3))])
        assert mlp_param_count(p) == 0

    def test_dense_layer(self):
        rng = np.random.default_rng(0)
        w = rng.uniform(0.5, 1.0, size=(4, 7))
        b = rng.uniform(0.5, 1.0, size=4)
        assert mlp_param_count(MLPParams([(w, b)])) == 4 * 7 + 4

    def test_half_sparse(self):
        w = np.ones((4, 4))
        w[::2, :] = 0.0
        p = MLPParams([(w, np.zeros(4))])
        assert mlp_param_count(p) == 8


class TestCheckpointDict:
    def test_round_trip(self):
        rng = np.random.default_rng(4)
        p = mlp_init([3, 5, 2], rng)
        back = mlp_from_dict(mlp_to_dict(p))
        for (w1, b1), (w2, b2) in zip(p.layers, back.layers):
            assert np.array_equal(w1, w2)
            assert np.array_equal(b1, b2)
