import numpy as np
import pytest

from mwembed.exceptions import ValidationError
from mwembed.metric import build_metric_space
from mwembed.spheres import (
    quasi_uniform_landmarks,
    sphere_distance,
    sphere_metric_space,
    sphere_sample,
)


class TestSphereSample:
    def test_shape_and_norms(self):
        pts = sphere_sample(2, 3, seed=7)
        assert pts.points.shape == (3, 3)
        assert np.allclose(np.linalg.norm(pts.points, axis=1), 1.0, atol=1e-12)

    def test_deterministic(self):
        a = sphere_sample(3, 50, seed=11)
        b = sphere_sample(3, 50, seed=11)
        assert np.array_equal(a.points, b.points)

    def test_large_sample_norms(self):
        pts = sphere_sample(10, 10000, seed=0)
        norms = np.linalg.norm(pts.points, axis=1)
        assert abs(norms.mean() - 1.0) <= 1e-12

    def test_rejects_bad_params(self):
        with pytest.raises(ValidationError):
            sphere_sample(0, 5, seed=0)
        with pytest.raises(ValidationError):
            sphere_sample(2, 0, seed=0)


class TestSphereDistance:
    def test_same_point(self):
        x = np.array([1.0, 0.0, 0.0])
        assert sphere_distance(x, x) == 0.0

    def test_antipodal(self):
        x = np.array([0.0, 1.0])
        assert sphere_distance(x, -x) == pytest.approx(np.pi, abs=1e-15)

    def test_orthogonal(self):
        assert sphere_distance([1.0, 0.0], [0.0, 1.0]) == pytest.approx(np.pi / 2, abs=1e-15)

    def test_rejects_non_unit(self):
        with pytest.raises(ValidationError):
            sphere_distance([2.0, 0.0], [1.0, 0.0])

    def test_symmetry_and_triangle_on_random_triples(self):
        rng = np.random.default_rng(3)
        pts = rng.standard_normal((3000, 4))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        for k in range(1000):
            x, y, z = pts[3 * k], pts[3 * k + 1], pts[3 * k + 2]
            dxy = sphere_distance(x, y)
            assert dxy == pytest.approx(sphere_distance(y, x), abs=1e-12)
            assert dxy <= sphere_distance(x, z) + sphere_distance(z, y) + 1e-12

    def test_metric_space_validates(self):
        space = sphere_metric_space(sphere_sample(2, 40, seed=5))
        build_metric_space(space.dist)


class TestQuasiUniformLandmarks:
    def test_circle_separation(self):
        pts = quasi_uniform_landmarks(1, 4, seed=2).points
        gram = np.clip(pts @ pts.T, -1, 1)
        dists = np.arccos(gram)[~np.eye(4, dtype=bool)]
        assert dists.min() >= np.pi / 4

    def test_single_landmark(self):
        pts = quasi_uniform_landmarks(2, 1, seed=0)
        assert pts.points.shape == (1, 3)
        assert np.linalg.norm(pts.points[0]) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("count", [1, 3, 13])
    def test_output_length(self, count):
        assert len(quasi_uniform_landmarks(2, count, seed=1)) == count

    def test_greedy_oracle_on_circle(self):
        # farthest-point selection from the same pool, computed naively
        count, seed = 5, 8
        pool = sphere_sample(1, 100 * count, seed).points
        chosen = [0]
        for _ in range(count - 1):
            best, best_val = None, -1.0
            for cand in range(len(pool)):
                val = min(
                    np.arccos(np.clip(pool[cand] @ pool[c], -1, 1)) for c in chosen
                )
                if val > best_val:
                    best, best_val = cand, val
            chosen.append(best)
        expected = pool[chosen]
        got = quasi_uniform_landmarks(1, count, seed=seed).points
        assert np.allclose(got, expected)
