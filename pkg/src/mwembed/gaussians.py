"""Gaussians and Gaussian mixtures, with closed-form Wasserstein-2 kernels."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

WEIGHT_TOL = 1e-10


@dataclass(frozen=True)
class Gaussian1D:
    """Univariate Gaussian N(mean, std^2); std = 0 encodes a point mass."""

    mean: float
    std: float

    def __post_init__(self):
        if self.std < 0:
            raise ValidationError(f"std must be >= 0, got {self.std}")


@dataclass(frozen=True)
class GaussianD:
    """Multivariate Gaussian with symmetric PSD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValidationError(f"cov shape {cov.shape} does not match dim {d}")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValidationError("cov must be symmetric within 1e-12")
        if d and np.linalg.eigvalsh(cov).min() < -1e-10:
            raise ValidationError("cov must be positive semidefinite")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _check_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.size < 1:
        raise ValidationError("mixture needs at least one component")
    if np.any(w < 0):
        raise ValidationError("mixture weights must be nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ValidationError(f"mixture weights must sum to 1, got {w.sum()!r}")
    return w


@dataclass(frozen=True)
class GaussianMixture1D:
    """Finite mixture of univariate Gaussians with simplex weights."""

    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        w = _check_weights(self.weights)
        means = np.asarray(self.means, dtype=float)
        stds = np.asarray(self.stds, dtype=float)
        if not (w.shape == means.shape == stds.shape):
            raise ValidationError("weights, means and stds must share a common length")
        if np.any(stds < 0):
            raise ValidationError("stds must be >= 0")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    def cdf(self, x) -> np.ndarray:
        """Mixture CDF, right-continuous; point masses contribute steps."""
        from scipy.special import ndtr

        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for w, mu, sd in zip(self.weights, self.means, self.stds):
            if sd == 0.0:
                total += w * (x >= mu)
            else:
                total += w * ndtr((x - mu) / sd)
        return total

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for w, mu, sd in zip(self.weights, self.means, self.stds):
            if sd > 0.0:
                z = (x - mu) / sd
                total += w * np.exp(-0.5 * z * z) / (sd * np.sqrt(2 * np.pi))
        return total


@dataclass(frozen=True)
class GaussianMixtureD:
    """Finite mixture of d-variate Gaussians sharing one dimension."""

    weights: np.ndarray
    components: tuple[GaussianD, ...]

    def __post_init__(self):
        w = _check_weights(self.weights)
        object.__setattr__(self, "weights", w)
        if len(self.components) != w.shape[0]:
            raise ValidationError("weights and components must share a common length")
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise ValidationError("all components must share one dimension")

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.components[0].dim


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues below -1e-8 are rejected; small negative rounding noise
    is clamped to zero.
    """
    m = np.asarray(m, dtype=float)
    if np.max(np.abs(m - m.T)) > 1e-12:
        raise ValidationError("psd_sqrt requires a symmetric matrix")
    vals, vecs = np.linalg.eigh(m)
    if vals.min() < -1e-8:
        raise ValidationError(f"matrix has negative eigenvalue {vals.min():.3e}")
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return 0.5 * (root + root.T)


def w2_gaussian_1d(a: Gaussian1D, b: Gaussian1D) -> float:
    """W2 between univariate Gaussians: sqrt((m1-m2)^2 + (s1-s2)^2)."""
    return float(np.hypot(a.mean - b.mean, a.std - b.std))


def w2_gaussian_d(a: GaussianD, b: GaussianD) -> float:
    """Closed-form W2 between multivariate Gaussians."""
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if np.array_equal(a.mean, b.mean) and np.array_equal(a.cov, b.cov):
        return 0.0
    ra = psd_sqrt(a.cov)
    inner = ra @ b.cov @ ra
    cross = psd_sqrt(0.5 * (inner + inner.T))
    sq = float(np.sum((a.mean - b.mean) ** 2) + np.trace(a.cov + b.cov - 2.0 * cross))
    return float(np.sqrt(max(sq, 0.0)))


def mixture_to_json(m) -> str:
    """Serialize a mixture to the interchange JSON schema."""
    if isinstance(m, GaussianMixture1D):
        comps = [
            {"w": float(w), "mean": float(mu), "std": float(sd)}
            for w, mu, sd in zip(m.weights, m.means, m.stds)
        ]
    elif isinstance(m, GaussianMixtureD):
        comps = [
            {"w": float(w), "mean": c.mean.tolist(), "cov": c.cov.tolist()}
            for w, c in zip(m.weights, m.components)
        ]
    else:
        raise ValidationError(f"cannot serialize {type(m).__name__}")
    return json.dumps({"components": comps})


def mixture_from_json(text: str):
    """Inverse of :func:`mixture_to_json`; infers 1-D vs multivariate."""
    data = json.loads(text)
    comps = data["components"]
    if not comps:
        raise ValidationError("mixture JSON has no components")
    if "std" in comps[0]:
        return GaussianMixture1D(
            weights=np.array([c["w"] for c in comps]),
            means=np.array([c["mean"] for c in comps]),
            stds=np.array([c["std"] for c in comps]),
        )
    return GaussianMixtureD(
        weights=np.array([c["w"] for c in comps]),
        components=tuple(
            GaussianD(mean=np.array(c["mean"]), cov=np.array(c["cov"])) for c in comps
        ),
    )
