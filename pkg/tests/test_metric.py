import itertools

import numpy as np
import pytest

from mwembed.exceptions import ValidationError
from mwembed.metric import (
    FiniteMetricSpace,
    LandmarkSet,
    aspect_ratio_and_diameter,
    build_metric_space,
    frechet_landmarks,
    landmark_features,
    metric_capacity_bruteforce,
    snowflake,
)

from conftest import random_euclidean_space, random_graph_space


class TestBuildMetricSpace:
    def test_smallest_valid_space(self):
        space = build_metric_space([[0, 1], [1, 0]])
        assert space.n == 2
        assert space.d(0, 1) == 1.0

    def test_rejects_asymmetry(self):
        with pytest.raises(ValidationError, match="asymmetric"):
            build_metric_space([[0, 1], [2, 0]])

    def test_rejects_triangle_violation_with_indices(self):
        with pytest.raises(ValidationError, match=r"\(0, 2\)"):
            build_metric_space([[0, 1, 3], [1, 0, 1], [3, 1, 0]])

    def test_rejects_negative_and_zero_offdiagonal(self):
        with pytest.raises(ValidationError, match="negative"):
            build_metric_space([[0, -1], [-1, 0]])
        with pytest.raises(ValidationError, match="zero distance"):
            build_metric_space([[0, 0], [0, 0]])

    def test_rejects_nonsquare_and_nonzero_diagonal(self):
        with pytest.raises(ValidationError, match="square"):
            build_metric_space([[0, 1, 2], [1, 0, 1]])
        with pytest.raises(ValidationError, match="diagonal"):
            build_metric_space([[1, 1], [1, 0]])

    def test_generated_spaces_validate(self):
        for seed in range(5):
            space = random_euclidean_space(10, seed=seed)
            build_metric_space(space.dist)
            space = random_graph_space(12, seed=seed)
            build_metric_space(space.dist)


class TestSnowflake:
    def test_alpha_one_is_identity(self):
        space = random_euclidean_space(6, seed=1)
        assert snowflake(space, 1.0) is space

    def test_square_root_of_squares(self):
        space = build_metric_space(
            np.array([[0, 1, 4, 9], [1, 0, 4, 9], [4, 4, 0, 9], [9, 9, 9, 0]], dtype=float)
        )
        flaked = snowflake(space, 0.5)
        assert sorted(set(flaked.dist[flaked.dist > 0])) == [1.0, 2.0, 3.0]

    @pytest.mark.parametrize("alpha", [0.51, 0.75, 0.99])
    def test_result_is_metric(self, alpha):
        for seed in range(20):
            space = random_euclidean_space(8, seed=seed)
            build_metric_space(snowflake(space, alpha).dist)

    def test_rejects_bad_alpha(self):
        space = random_euclidean_space(4, seed=0)
        for alpha in (0.0, -0.5, 1.5):
            with pytest.raises(ValidationError):
                snowflake(space, alpha)


class TestAspectRatio:
    def test_unit_space(self):
        space = build_metric_space(np.ones((3, 3)) - np.eye(3))
        aspect, diameter = aspect_ratio_and_diameter(space)
        assert aspect == 1.0 and diameter == 1.0

    def test_two_scales(self):
        dist = np.array([[0, 1, 5], [1, 0, 5], [5, 5, 0]], dtype=float)
        aspect, diameter = aspect_ratio_and_diameter(build_metric_space(dist))
        assert aspect == 5.0 and diameter == 5.0


class TestLandmarkFeatures:
    def test_point_is_first_landmark(self):
        space = random_euclidean_space(7, seed=3)
        landmarks = LandmarkSet(indices=(4, 1, 2))
        feats = landmark_features(space, landmarks, 4)
        assert feats[0] == 0.0
        assert feats[1] == space.d(4, 1)

    def test_two_point_space_full_landmarks(self):
        space = build_metric_space([[0, 3.5], [3.5, 0]])
        landmarks = frechet_landmarks(space)
        assert np.allclose(landmark_features(space, landmarks, 0), [0.0, 3.5])
        assert np.allclose(landmark_features(space, landmarks, 1), [3.5, 0.0])

    def test_frechet_embedding_is_isometry_in_max_norm(self):
        for seed in range(6):
            space = random_euclidean_space(12, seed=seed)
            landmarks = frechet_landmarks(space)
            feats = np.stack([landmark_features(space, landmarks, i) for i in range(space.n)])
            for i in range(space.n):
                for j in range(space.n):
                    gap = np.max(np.abs(feats[i] - feats[j]))
                    assert gap == pytest.approx(space.d(i, j), abs=1e-12)

    def test_rejects_bad_indices(self):
        space = random_euclidean_space(5, seed=0)
        with pytest.raises(ValidationError):
            landmark_features(space, LandmarkSet(indices=(0, 9)), 1)
        with pytest.raises(ValidationError):
            LandmarkSet(indices=())
        with pytest.raises(ValidationError):
            LandmarkSet(indices=(1, 1))


def _capacity_oracle(space: FiniteMetricSpace) -> int:
    """Independent exhaustive search over subsets for tiny spaces."""
    n = space.n
    if n == 1:
        return 1
    d = space.dist
    values = np.unique(d[d > 0])
    thresholds = np.unique(np.concatenate([values, 5 * values]))
    radii = list(thresholds * (1 + 1e-9))
    radii += [0.5 * (a + b) for a, b in zip(thresholds[:-1], thresholds[1:])]
    best = 1
    for r in radii:
        for x0 in range(n):
            ball = [u for u in range(n) if d[u, x0] < r]
            candidates = [
                x for x in range(n)
                if all(u in ball for u in range(n) if d[u, x] < r / 5)
            ]
            for size in range(best + 1, len(candidates) + 1):
                for combo in itertools.combinations(candidates, size):
                    disjoint = all(
                        not any(d[u, a] < r / 5 and d[u, b] < r / 5 for u in range(n))
                        for a, b in itertools.combinations(combo, 2)
                    )
                    if disjoint:
                        best = max(best, size)
    return best


class TestMetricCapacity:
    def test_two_point_space(self):
        assert metric_capacity_bruteforce(build_metric_space([[0, 1], [1, 0]])) == 2

    def test_single_point(self):
        assert metric_capacity_bruteforce(FiniteMetricSpace(dist=np.zeros((1, 1)))) == 1

    def test_uniform_five_points(self):
        space = build_metric_space(np.ones((5, 5)) - np.eye(5))
        assert metric_capacity_bruteforce(space) == 5

    def test_size_limit(self):
        space = build_metric_space(np.ones((15, 15)) - np.eye(15))
        with pytest.raises(ValidationError, match="14"):
            metric_capacity_bruteforce(space)

    @pytest.mark.parametrize("seed", range(4))
    def test_against_exhaustive_oracle(self, seed):
        space = random_euclidean_space(5, seed=seed)
        assert metric_capacity_bruteforce(space) == _capacity_oracle(space)

    def test_oracle_on_graph_metrics(self):
        space = random_graph_space(6, extra_edges=2, seed=9)
        assert metric_capacity_bruteforce(space) == _capacity_oracle(space)
