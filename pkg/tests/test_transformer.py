import math

import numpy as np
import pytest

from mwembed.exceptions import ValidationError
from mwembed.gaussians import GaussianMixture1D, GaussianMixtureD
from mwembed.metric import LandmarkSet
from mwembed.nets import MLPParams, mlp_param_count
from mwembed.transformer import (
    PTParams,
    complexity_report,
    dimensional_constant,
    effective_dimension,
    param_count,
    pt_backward,
    pt_forward,
    pt_forward_cached,
    pt_from_json,
    pt_init,
    pt_to_json,
    softmax,
)
from mwembed.transport import mw2

from conftest import random_euclidean_space


def zero_pt(n_landmarks, k, d):
    weight_net = MLPParams([(np.zeros((k, n_landmarks)), np.zeros(k))])
    heads = [
        MLPParams([(np.zeros((d + d * d, n_landmarks)), np.zeros(d + d * d))])
        for _ in range(k)
    ]
    return PTParams(
        landmarks=LandmarkSet(indices=tuple(range(n_landmarks))),
        weight_net=weight_net,
        heads=heads,
        output_dim=d,
    )


class TestForward:
    def test_all_zero_networks_give_uniform_point_masses(self):
        space = random_euclidean_space(5, seed=0)
        model = zero_pt(5, 3, 1)
        out = pt_forward(model, space, 2)
        assert isinstance(out, GaussianMixture1D)
        assert np.allclose(out.weights, 1.0 / 3.0)
        assert np.all(out.means == 0.0) and np.all(out.stds == 0.0)

    def test_single_component_weight_is_one(self):
        space = random_euclidean_space(4, seed=1)
        model = pt_init(LandmarkSet(indices=(0, 1)), 1, 1, (8,), np.random.default_rng(0))
        out = pt_forward(model, space, 3)
        assert out.weights.shape == (1,)
        assert out.weights[0] == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("seed", range(5))
    def test_weights_simplex_and_positive(self, seed):
        space = random_euclidean_space(6, seed=seed)
        model = pt_init(LandmarkSet(indices=(0, 2, 4)), 4, 1, (16, 8), np.random.default_rng(seed))
        out = pt_forward(model, space, 5)
        assert abs(out.weights.sum() - 1.0) <= 1e-12
        assert np.all(out.weights > 0.0)

    def test_multivariate_output_has_psd_covariances(self):
        space = random_euclidean_space(6, seed=2)
        model = pt_init(LandmarkSet(indices=(0, 1, 2)), 2, 3, (12,), np.random.default_rng(3))
        out = pt_forward(model, space, 1)
        assert isinstance(out, GaussianMixtureD)
        for comp in out.components:
            vals = np.linalg.eigvalsh(comp.cov)
            assert vals.min() >= -1e-12

    def test_softmax_shift_invariance(self):
        space = random_euclidean_space(6, seed=4)
        model = pt_init(LandmarkSet(indices=(0, 1, 2, 3)), 3, 1, (10,), np.random.default_rng(5))
        before = pt_forward(model, space, 5)
        model.weight_net.layers[-1][1][:] += 7.5
        after = pt_forward(model, space, 5)
        dist, _ = mw2(before, after)
        assert dist <= 1e-12


class TestBackward:
    def test_zero_upstream_gives_zero_grads(self):
        space = random_euclidean_space(5, seed=0)
        model = pt_init(LandmarkSet(indices=(0, 1, 2)), 2, 1, (8,), np.random.default_rng(1))
        _, cache = pt_forward_cached(model, space, 4)
        grads = pt_backward(model, cache, np.zeros(2), np.zeros(2), np.zeros(2))
        for w, b in grads.weight_net + [lb for h in grads.heads for lb in h] + grads.trunk:
            assert np.all(w == 0.0) and np.all(b == 0.0)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        space = random_euclidean_space(6, seed=seed)
        model = pt_init(LandmarkSet(indices=(0, 1, 2, 3)), 2, 1, (8,), rng)
        point = 5
        uw = rng.standard_normal(2)
        um = rng.standard_normal(2)
        us = rng.standard_normal(2)

        def scalar():
            out = pt_forward(model, space, point)
            return float(uw @ out.weights + um @ out.means + us @ out.stds)

        _, cache = pt_forward_cached(model, space, point)
        if any(abs(s[1]) < 1e-4 for s in cache.head_outputs):
            pytest.skip("|s| kink too close")
        if cache.trunk_preact is not None and np.any(np.abs(cache.trunk_preact) < 1e-4):
            pytest.skip("ReLU kink too close")
        grads = pt_backward(model, cache, uw, um, us)
        from mwembed.training import grad_arrays, model_param_arrays

        h = 1e-6
        analytic = np.concatenate([g.reshape(-1) for g in grad_arrays(grads)])
        numeric = []
        for arr in model_param_arrays(model):
            flat = arr.reshape(-1)
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                up = scalar()
                flat[idx] = orig - h
                dn = scalar()
                flat[idx] = orig
                numeric.append((up - dn) / (2 * h))
        numeric = np.asarray(numeric)
        scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
        assert np.max(np.abs(analytic - numeric) / scale) <= 1e-4

    def test_linear_model_exact(self):
        rng = np.random.default_rng(77)
        space = random_euclidean_space(5, seed=7)
        # single affine layers, no trunk: smooth everywhere except |s|
        k, d, L = 2, 1, 3
        weight_net = MLPParams([(0.1 * rng.standard_normal((k, L)), np.zeros(k))])
        heads = [
            MLPParams([(0.1 * rng.standard_normal((2, L)), 0.5 + 0.1 * rng.standard_normal(2))])
            for _ in range(k)
        ]
        model = PTParams(
            landmarks=LandmarkSet(indices=(0, 1, 2)),
            weight_net=weight_net,
            heads=heads,
            output_dim=d,
        )
        uw = rng.standard_normal(k)
        um = rng.standard_normal(k)
        us = rng.standard_normal(k)

        def scalar():
            out = pt_forward(model, space, 4)
            return float(uw @ out.weights + um @ out.means + us @ out.stds)

        _, cache = pt_forward_cached(model, space, 4)
        grads = pt_backward(model, cache, uw, um, us)
        from mwembed.training import grad_arrays, model_param_arrays

        h = 1e-5
        analytic = np.concatenate([g.reshape(-1) for g in grad_arrays(grads)])
        numeric = []
        for arr in model_param_arrays(model):
            flat = arr.reshape(-1)
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + h
                up = scalar()
                flat[idx] = orig - h
                dn = scalar()
                flat[idx] = orig
                numeric.append((up - dn) / (2 * h))
        numeric = np.asarray(numeric)
        scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
        assert np.max(np.abs(analytic - numeric) / scale) <= 1e-9


class TestAccounting:
    def test_all_zero_param_count(self):
        assert param_count(zero_pt(4, 3, 1)) == 0

    def test_additive_across_subnetworks(self):
        model = pt_init(LandmarkSet(indices=(0, 1, 2)), 3, 2, (16, 8), np.random.default_rng(2))
        total = mlp_param_count(model.trunk) + mlp_param_count(model.weight_net)
        total += sum(mlp_param_count(h) for h in model.heads)
        assert param_count(model) == total

    @pytest.mark.parametrize("k,d", [(1, 1), (5, 1), (3, 2), (2, 3)])
    def test_effdim_formula(self, k, d):
        model = pt_init(LandmarkSet(indices=(0, 1)), k, d, (4,), np.random.default_rng(0))
        assert effective_dimension(model) == k * (d + d * d)

    def test_effdim_example(self):
        model = zero_pt(3, 5, 1)
        assert effective_dimension(model) == 10


class TestComplexityReport:
    def test_dimensional_constant_formula(self):
        n = 127
        expected = (
            2 * math.log(5 * math.sqrt(2 * math.pi)) + 1.5 * math.log(n) - 0.5 * math.log(n + 1)
        ) / (2 * math.log(2))
        assert dimensional_constant(n) == pytest.approx(expected, rel=1e-15)

    def test_multivariate_bound_example(self):
        model = zero_pt(4, 2, 1)
        report = complexity_report(model, (4, 2.0, 2.0), extras={"distortion_D": 2.0})
        assert report.theorem_bounds["multivariate_component_bound"] == pytest.approx(2560.0)
        n_bound = 4 * 3 / 2 * (5 * 2560 + 2)
        assert report.theorem_bounds["multivariate_support_bound"] == pytest.approx(n_bound)

    def test_missing_extras_omit_bounds(self):
        model = zero_pt(4, 2, 1)
        report = complexity_report(model, (4, 2.0, 2.0))
        assert "general_effdim_bound" not in report.theorem_bounds
        assert "two_hop_effdim_bound" not in report.theorem_bounds
        assert "dimensional_constant" in report.theorem_bounds

    def test_two_hop_bound(self):
        model = zero_pt(4, 2, 1)
        report = complexity_report(
            model, (5, 2.0, 2.0), extras={"alpha": 0.75, "spectral_radius": 2.0}
        )
        expected = math.ceil(12.0 / 0.75 * math.log(3.0))
        assert report.theorem_bounds["two_hop_effdim_bound"] == expected

    def test_note_flags_constants(self):
        report = complexity_report(zero_pt(3, 2, 1), (3, 1.0, 1.0))
        assert "absolute constant" in report.note


class TestCheckpoint:
    def test_round_trip(self):
        model = pt_init(LandmarkSet(indices=(0, 3, 1)), 2, 2, (6,), np.random.default_rng(8))
        back = pt_from_json(pt_to_json(model))
        assert back.landmarks.indices == model.landmarks.indices
        assert back.output_dim == model.output_dim
        space = random_euclidean_space(5, seed=3)
        a = pt_forward(model, space, 2)
        b = pt_forward(back, space, 2)
        assert np.array_equal(a.weights, b.weights)
        for c1, c2 in zip(a.components, b.components):
            assert np.array_equal(c1.mean, c2.mean)
            assert np.array_equal(c1.cov, c2.cov)

    def test_validation_of_head_shapes(self):
        weight_net = MLPParams([(np.zeros((2, 3)), np.zeros(2))])
        bad_head = MLPParams([(np.zeros((3, 3)), np.zeros(3))])
        with pytest.raises(ValidationError):
            PTParams(
                landmarks=LandmarkSet(indices=(0, 1, 2)),
                weight_net=weight_net,
                heads=[bad_head, bad_head],
                output_dim=1,
            )


def test_softmax_basics():
    out = softmax(np.array([0.0, 0.0, 0.0]))
    assert np.allclose(out, 1 / 3)
    out = softmax(np.array([1000.0, 0.0]))
    assert out[0] == pytest.approx(1.0)
