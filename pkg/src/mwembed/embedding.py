"""Constructive embeddings into mixtures of point masses.

The pipeline shifts feature vectors into the strictly-increasing cone,
turns each into a uniform empirical measure, and rides on the fact that
the 1-D monotone coupling between two such measures realizes exactly
the Euclidean distance of the underlying vectors. An exact memorizing
transformer built from ReLU bump interpolators reproduces arbitrary
point-mass mixture targets on a finite space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import ValidationError
from .gaussians import GaussianMixture1D
from .metric import FiniteMetricSpace, frechet_landmarks, snowflake
from .nets import MLPParams
from .transformer import PTParams
from .transport import w2_empirical_1d

BIAS_MARGIN_FLOOR = 1e-9


@dataclass(frozen=True)
class BiasVector:
    """Shift making every generating vector strictly increasing."""

    b: np.ndarray


def initialize_bias(vectors) -> BiasVector:
    """Cumulative shift mapping all given vectors into x_1 < ... < x_D.

    b_1 = 0 and b_k = b_{k-1} + max_n ReLU((x_{k-1}^n + b_{k-1}) - x_k^n)
    plus a margin of 1e-6 * (1 + max coordinate spread), so the shifted
    coordinates increase strictly for every input vector.
    """
    x = np.asarray(vectors, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ValidationError("initialize_bias needs a nonempty set of equal-length vectors")
    if not np.all(np.isfinite(x)):
        raise ValidationError("bias initialization requires finite vectors")
    spread = float(x.max() - x.min())
    margin = 1e-6 * (1.0 + spread)
    dim = x.shape[1]
    b = np.zeros(dim)
    for k in range(1, dim):
        gap = np.max(np.maximum((x[:, k - 1] + b[k - 1]) - x[:, k], 0.0))
        b[k] = b[k - 1] + gap + margin
    shifted = x + b
    if dim > 1 and np.min(np.diff(shifted, axis=1)) < BIAS_MARGIN_FLOOR:
        raise ValidationError("bias construction failed to order the inputs")
    return BiasVector(b=b)


def ball_to_empirical(x, bias: BiasVector) -> GaussianMixture1D:
    """Uniform point-mass mixture at sqrt(D) * (x + b)_k, k = 1..D."""
    x = np.asarray(x, dtype=float)
    if x.shape != bias.b.shape:
        raise ValidationError(f"vector shape {x.shape} does not match bias {bias.b.shape}")
    dim = x.shape[0]
    locs = np.sqrt(dim) * (x + bias.b)
    return GaussianMixture1D(
        weights=np.full(dim, 1.0 / dim),
        means=locs,
        stds=np.zeros(dim),
    )


def empirical_mw2(p: GaussianMixture1D, q: GaussianMixture1D) -> float:
    """Mixture distance between point-mass mixtures via the sorting coupling.

    For finitely supported measures the mixture distance coincides with
    plain W2, so the quantile pairing is exact and much cheaper than
    the transportation solver.
    """
    if np.any(p.stds != 0) or np.any(q.stds != 0):
        raise ValidationError("empirical_mw2 expects zero-variance mixtures")
    return w2_empirical_1d(list(zip(p.weights, p.means)), list(zip(q.weights, q.means)))


def constructive_embed(space: FiniteMetricSpace, alpha: float = 1.0):
    """Embed every point as a uniform point-mass mixture.

    Pipeline: alpha-snowflake, distance-to-every-point features, shared
    ordering bias, then the empirical-measure map. The embedded distance
    between any two points lies in [d^alpha, sqrt(n) * d^alpha].

    Returns (mixtures, bias), mixtures indexed like the space.
    """
    if space.n < 2:
        raise ValidationError("constructive embedding needs at least 2 points")
    snow = snowflake(space, alpha)
    feats = snow.dist  # row i is the distance vector of point i
    bias = initialize_bias(feats)
    mixtures = [ball_to_empirical(feats[i], bias) for i in range(space.n)]
    return mixtures, bias


class ConstructiveEmbedder(BaseEstimator, TransformerMixin):
    """Deterministic point-mass mixture embedding of a finite metric space.

    Parameters
    ----------
    alpha : float, default=1.0
        Snowflake exponent in (0, 1].
    """

    def __init__(self, alpha=1.0):
        self.alpha = alpha

    def fit(self, X, y=None):
        """Compute the embedding of the metric space X."""
        if not isinstance(X, FiniteMetricSpace):
            raise ValidationError("X must be a FiniteMetricSpace")
        self.space_ = X
        self.mixtures_, self.bias_ = constructive_embed(X, self.alpha)
        return self

    def transform(self, X=None):
        """Mixtures for the given point indices (all points by default)."""
        if not hasattr(self, "mixtures_"):
            raise ValidationError("ConstructiveEmbedder is not fitted")
        if X is None:
            return list(self.mixtures_)
        return [self.mixtures_[int(i)] for i in np.asarray(X).reshape(-1)]

    def embedded_distance(self, i: int, j: int) -> float:
        return empirical_mw2(self.mixtures_[i], self.mixtures_[j])

    def pairwise_embedded_distances(self) -> dict[tuple[int, int], float]:
        n = self.space_.n
        return {
            (i, j): self.embedded_distance(i, j)
            for i in range(n)
            for j in range(i + 1, n)
        }


def memorize_pt(space: FiniteMetricSpace, targets) -> PTParams:
    """Exact transformer reproducing point-mass mixture targets.

    ``targets`` maps each point to K mean vectors: an array of shape
    (n, K) for scalar means or (n, K, d) with d <= 3. The returned
    model uses every point as a landmark, an all-zero weight network
    (uniform softmax weights), identically zero covariance factors, and
    one ReLU bump interpolator per point inside each mean head. Its
    output at every point of the space equals the uniform mixture of
    point masses at the target means, exactly up to rounding.
    """
    t = np.asarray(targets, dtype=float)
    if t.ndim == 2:
        t = t[:, :, None]
    if t.ndim != 3 or t.shape[0] != space.n:
        raise ValidationError("targets must have shape (n, K) or (n, K, d)")
    n, k, d = t.shape
    if d > 3:
        raise ValidationError("memorize_pt supports output dimension d <= 3")
    feats = space.dist
    # max-norm feature separation of Frechet rows equals the metric itself
    off = space.dist[~np.eye(n, dtype=bool)]
    if off.size == 0 or off.min() <= 0.0:
        raise ValidationError("memorize_pt requires distinct points with positive separation")
    half_sep = float(off.min()) / 2.0

    weight_net = MLPParams([(np.zeros((k, n)), np.zeros(k))])
    heads = [
        _bump_head(feats, half_sep, t[:, j, :], d) for j in range(k)
    ]
    return PTParams(
        landmarks=frechet_landmarks(space),
        weight_net=weight_net,
        heads=heads,
        output_dim=d,
        trunk=None,
    )


def _bump_head(feats: np.ndarray, width: float, means: np.ndarray, d: int) -> MLPParams:
    """Three-layer ReLU interpolator: u -> sum_j bump_j(u) * means[j].

    Layer 1 computes the positive and negative parts of every
    coordinate difference u_l - feats[j, l]; layer 2 assembles
    bump_j(u) = ReLU(1 - |u - feats[j]|_1 / width), which is 1 at
    feats[j] and 0 at every other generating vector; layer 3 mixes the
    bumps with the target means. The covariance block stays zero.
    """
    n, n_feat = feats.shape
    w1 = np.zeros((2 * n * n_feat, n_feat))
    b1 = np.zeros(2 * n * n_feat)
    for j in range(n):
        base = 2 * j * n_feat
        for l in range(n_feat):
            w1[base + 2 * l, l] = 1.0
            b1[base + 2 * l] = -feats[j, l]
            w1[base + 2 * l + 1, l] = -1.0
            b1[base + 2 * l + 1] = feats[j, l]
    w2 = np.zeros((n, 2 * n * n_feat))
    for j in range(n):
        w2[j, 2 * j * n_feat : 2 * (j + 1) * n_feat] = -1.0 / width
    b2 = np.ones(n)
    w3 = np.zeros((d + d * d, n))
    w3[:d, :] = means.T
    b3 = np.zeros(d + d * d)
    return MLPParams([(w1, b1), (w2, b2), (w3, b3)])
