"""Sampling and geodesic geometry on unit spheres."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .metric import FiniteMetricSpace

UNIT_NORM_TOL = 1e-9


@dataclass(frozen=True)
class SpherePointSet:
    """Points on the unit sphere S^N, stored as (count, N+1) unit vectors."""

    points: np.ndarray

    def __post_init__(self):
        norms = np.linalg.norm(self.points, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise ValidationError("sphere points must have unit norm within 1e-12")

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]


def sphere_sample(sphere_dim: int, count: int, seed: int) -> SpherePointSet:
    """count i.i.d. uniform points on S^N, from normalized Gaussians."""
    if sphere_dim < 1 or count < 1:
        raise ValidationError("sphere_dim and count must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((count, sphere_dim + 1))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return SpherePointSet(points=x)


def sphere_distance(x, y) -> float:
    """Geodesic (great-circle) distance between two unit vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if abs(np.linalg.norm(x) - 1.0) > UNIT_NORM_TOL or abs(np.linalg.norm(y) - 1.0) > UNIT_NORM_TOL:
        raise ValidationError("sphere_distance requires unit vectors")
    return float(np.arccos(np.clip(x @ y, -1.0, 1.0)))


def pairwise_sphere_distances(points: np.ndarray) -> np.ndarray:
    gram = np.clip(points @ points.T, -1.0, 1.0)
    d = np.arccos(gram)
    np.fill_diagonal(d, 0.0)
    return 0.5 * (d + d.T)


def quasi_uniform_landmarks(sphere_dim: int, count: int, seed: int, pool_factor: int = 100) -> SpherePointSet:
    """Greedy farthest-point selection from a large uniform candidate pool.

    The first point is random; each subsequent point maximizes its
    minimum geodesic distance to the points already chosen.
    """
    if count < 1:
        raise ValidationError("count must be >= 1")
    pool = sphere_sample(sphere_dim, pool_factor * count, seed).points
    chosen = [0]
    min_dist = np.arccos(np.clip(pool @ pool[0], -1.0, 1.0))
    for _ in range(count - 1):
        nxt = int(np.argmax(min_dist))
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, np.arccos(np.clip(pool @ pool[nxt], -1.0, 1.0)))
    return SpherePointSet(points=pool[chosen])


def sphere_metric_space(points: SpherePointSet) -> FiniteMetricSpace:
    """Finite metric space of geodesic distances between the given points."""
    return FiniteMetricSpace(dist=pairwise_sphere_distances(points.points))
