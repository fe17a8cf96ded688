"""Finite metric spaces: validation, invariants, and landmark feature maps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

TRIANGLE_TOL = 1e-9


@dataclass(frozen=True)
class FiniteMetricSpace:
    """An n-point metric space given by its full distance matrix.

    ``dist`` is a dense symmetric (n, n) array with zero diagonal and
    strictly positive off-diagonal entries satisfying the triangle
    inequality up to ``TRIANGLE_TOL``. Use :func:`build_metric_space`
    to construct a validated instance.
    """

    dist: np.ndarray
    labels: tuple | None = None

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def d(self, i: int, j: int) -> float:
        return float(self.dist[i, j])


@dataclass(frozen=True)
class LandmarkSet:
    """Ordered, distinct point indices into a FiniteMetricSpace."""

    indices: tuple[int, ...]

    def __post_init__(self):
        if len(self.indices) == 0:
            raise ValidationError("landmark set must be nonempty")
        if len(set(self.indices)) != len(self.indices):
            raise ValidationError("landmark indices must be distinct")

    def __len__(self) -> int:
        return len(self.indices)


def build_metric_space(dist, labels=None) -> FiniteMetricSpace:
    """Validate a distance matrix and wrap it as a FiniteMetricSpace.

    Rejects non-square input, asymmetry, nonzero diagonal, negative or
    zero off-diagonal entries, and triangle violations beyond
    ``TRIANGLE_TOL``, naming the offending indices.
    """
    d = np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if not np.all(np.isfinite(d)):
        raise ValidationError("distance matrix contains non-finite entries")
    if np.any(np.diag(d) != 0.0):
        i = int(np.nonzero(np.diag(d))[0][0])
        raise ValidationError(f"nonzero diagonal entry at index {i}")
    asym = np.abs(d - d.T)
    if np.any(asym > 0.0):
        i, j = np.unravel_index(int(np.argmax(asym)), d.shape)
        raise ValidationError(f"asymmetric entries at ({i}, {j}): {d[i, j]} vs {d[j, i]}")
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] < 0.0):
        i, j = np.unravel_index(int(np.argmin(d + np.eye(n))), d.shape)
        raise ValidationError(f"negative distance at ({i}, {j})")
    if n > 1 and np.any(d[off] == 0.0):
        bad = np.argwhere((d == 0.0) & off)[0]
        raise ValidationError(f"zero distance between distinct points ({bad[0]}, {bad[1]})")
    _check_triangle(d)
    return FiniteMetricSpace(dist=d, labels=tuple(labels) if labels is not None else None)


def _check_triangle(d: np.ndarray) -> None:
    # d[i,k] <= d[i,j] + d[j,k] for all triples; vectorized over j.
    n = d.shape[0]
    for j in range(n):
        slack = d - (d[:, j][:, None] + d[j, :][None, :])
        if np.any(slack > TRIANGLE_TOL):
            i, k = np.unravel_index(int(np.argmax(slack)), d.shape)
            raise ValidationError(
                f"triangle violation ({i}, {k}) via {j}: "
                f"{d[i, k]} > {d[i, j]} + {d[j, k]}"
            )


def snowflake(space: FiniteMetricSpace, alpha: float) -> FiniteMetricSpace:
    """Replace every distance by its alpha-power, 0 < alpha <= 1.

    The result is again a metric because t^alpha is concave and
    subadditive on [0, inf).
    """
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"snowflake exponent must lie in (0, 1], got {alpha}")
    if alpha == 1.0:
        return space
    return FiniteMetricSpace(dist=space.dist**alpha, labels=space.labels)


def aspect_ratio_and_diameter(space: FiniteMetricSpace) -> tuple[float, float]:
    """Return (diameter / min off-diagonal distance, diameter)."""
    if space.n < 2:
        raise ValidationError("aspect ratio needs at least 2 points")
    off = space.dist[~np.eye(space.n, dtype=bool)]
    diameter = float(off.max())
    return diameter / float(off.min()), diameter


def landmark_features(space: FiniteMetricSpace, landmarks: LandmarkSet, point_index: int) -> np.ndarray:
    """Distances from one point to each landmark, in landmark order."""
    idx = np.asarray(landmarks.indices, dtype=int)
    if np.any(idx < 0) or np.any(idx >= space.n) or not 0 <= point_index < space.n:
        raise ValidationError("landmark or point index out of range")
    return space.dist[point_index, idx].copy()


def frechet_landmarks(space: FiniteMetricSpace) -> LandmarkSet:
    """All points as landmarks: features become the Frechet embedding."""
    return LandmarkSet(indices=tuple(range(space.n)))


def metric_capacity_bruteforce(space: FiniteMetricSpace) -> int:
    """Packing capacity: the largest d such that d open balls of radius
    r/5 fit disjointly inside some open ball of radius r.

    Exhaustive over centers and subsets; the radius sweep covers the
    midpoints between consecutive values of {d(u,v)} union {5 d(u,v)}
    plus each threshold scaled by (1 + 1e-9), which is exact because
    ball membership only changes at those thresholds.
    """
    n = space.n
    if n > 14:
        raise ValidationError(f"capacity brute force is limited to n <= 14 points, got {n}")
    if n == 1:
        return 1
    d = space.dist
    values = np.unique(d[d > 0])
    thresholds = np.unique(np.concatenate([values, 5.0 * values]))
    radii = list(thresholds * (1.0 + 1e-9))
    radii += [0.5 * (a + b) for a, b in zip(thresholds[:-1], thresholds[1:])]

    best = 1
    for r in radii:
        small = r / 5.0
        # disjoint[x, y] iff no point lies in both B(x, r/5) and B(y, r/5)
        in_small = d < small  # in_small[u, x]: u in B(x, r/5)
        joint = in_small.T.astype(int) @ in_small.astype(int)
        disjoint = joint == 0
        neigh = [int(sum(1 << y for y in range(n) if disjoint[x, y] and y != x)) for x in range(n)]
        for x0 in range(n):
            inside = [x for x in range(n) if _ball_inside(d, x, small, x0, r)]
            if len(inside) <= best:
                continue
            mask = sum(1 << x for x in inside)
            best = max(best, _max_disjoint(neigh, mask, best))
    return best


def _ball_inside(d, x, rx, x0, r0) -> bool:
    # B(x, rx) subset of B(x0, r0) over the finite point set
    members = d[:, x] < rx
    return bool(np.all(d[members, x0] < r0))


def _max_disjoint(neigh: list[int], cand: int, floor: int) -> int:
    """Largest pairwise-disjoint subset (max clique in the disjointness
    graph) among candidate vertices, by branch and bound on bitmasks."""
    best = floor

    def expand(size: int, remaining: int) -> None:
        nonlocal best
        if remaining == 0:
            best = max(best, size)
            return
        if size + bin(remaining).count("1") <= best:
            return
        v = (remaining & -remaining).bit_length() - 1
        expand(size + 1, remaining & neigh[v])
        expand(size, remaining & ~(1 << v))

    expand(0, cand)
    return best
