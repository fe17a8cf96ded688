"""Comparison geometries: Euclidean, hyperbolic upper-half space, and the
Fisher-Rao plane of nondegenerate univariate Gaussians.

Each geometry is reached from a shared trunk through a linear readout;
coordinates that must stay positive pass through softplus with a small
floor, so readout outputs always land inside the target space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError
from .metric import FiniteMetricSpace, LandmarkSet, landmark_features
from .nets import MLPParams, mlp_backward, mlp_forward_cached, mlp_from_dict, mlp_to_dict

POSITIVE_FLOOR = 1e-6

HEAD_KINDS = ("euclidean_d", "hyperbolic_d", "fisher_rao")


@dataclass(frozen=True)
class HyperbolicPoint:
    """Point of the upper-half space model: last coordinate positive."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        object.__setattr__(self, "coords", c)
        if c[-1] <= 0:
            raise ValidationError("hyperbolic point needs a positive last coordinate")


@dataclass(frozen=True)
class FisherRaoPoint:
    """Nondegenerate univariate Gaussian as a (mean, std > 0) pair."""

    mean: float
    std: float

    def __post_init__(self):
        if self.std <= 0:
            raise ValidationError("Fisher-Rao point needs std > 0")


def _arccosh(z: float) -> float:
    z = max(z, 1.0)
    return float(np.log(z + np.sqrt(z * z - 1.0)))


def hyperbolic_distance(x: HyperbolicPoint, y: HyperbolicPoint) -> float:
    """Geodesic distance arccosh(1 + |x-y|^2 / (2 x_last y_last))."""
    dx = x.coords - y.coords
    z = 1.0 + float(dx @ dx) / (2.0 * x.coords[-1] * y.coords[-1])
    return _arccosh(z)


def fisher_rao_distance(a: FisherRaoPoint, b: FisherRaoPoint) -> float:
    """Geodesic distance between nondegenerate univariate Gaussians.

    Evaluated with the auxiliary vectors (mean / sqrt 2, std) and the
    reflected (mean / sqrt 2, -std); coincident inputs return 0 as the
    limit of the ratio inside the logarithm.
    """
    if a.mean == b.mean and a.std == b.std:
        return 0.0
    pa = np.array([a.mean / np.sqrt(2.0), a.std])
    pb = np.array([b.mean / np.sqrt(2.0), b.std])
    pb_ref = np.array([b.mean / np.sqrt(2.0), -b.std])
    near = float(np.linalg.norm(pa - pb))
    far = float(np.linalg.norm(pa - pb_ref))
    return float(np.sqrt(2.0) * np.log((far + near) / (far - near)))


def softplus(v: float) -> float:
    return float(np.logaddexp(0.0, v))


def head_forward(kind: str, trunk_output: np.ndarray, readout: MLPParams):
    """Map trunk features into the target geometry via a linear readout."""
    if kind not in HEAD_KINDS:
        raise ValidationError(f"unknown head kind {kind!r}")
    y = readout.layers[0][0] @ np.asarray(trunk_output, dtype=float) + readout.layers[0][1]
    return _into_geometry(kind, y)


def _into_geometry(kind: str, y: np.ndarray):
    if kind == "euclidean_d":
        return y
    if kind == "hyperbolic_d":
        coords = y.copy()
        coords[-1] = softplus(y[-1]) + POSITIVE_FLOOR
        return HyperbolicPoint(coords=coords)
    return FisherRaoPoint(mean=float(y[0]), std=softplus(y[1]) + POSITIVE_FLOOR)


@dataclass
class BaselineParams:
    """Trunk plus linear readout into one of the comparison geometries."""

    landmarks: LandmarkSet
    trunk: MLPParams
    readout: MLPParams
    kind: str
    out_dim: int

    def __post_init__(self):
        if self.kind not in HEAD_KINDS:
            raise ValidationError(f"unknown head kind {self.kind!r}")
        if self.readout.depth != 1:
            raise ValidationError("readout must be a single affine layer")
        expected = {"euclidean_d": self.out_dim, "hyperbolic_d": self.out_dim + 1, "fisher_rao": 2}
        if self.readout.out_dim != expected[self.kind]:
            raise ValidationError(
                f"{self.kind} readout must output {expected[self.kind]} values"
            )


@dataclass
class BaselineCache:
    trunk_inputs: list[np.ndarray]
    trunk_preact: np.ndarray
    hidden: np.ndarray
    raw: np.ndarray


def baseline_forward(p: BaselineParams, space: FiniteMetricSpace, point_index: int):
    u = landmark_features(space, p.landmarks, point_index)
    return baseline_forward_features(p, u)


def baseline_forward_features(p: BaselineParams, u: np.ndarray):
    t_out, t_inputs = mlp_forward_cached(p.trunk, u)
    hidden = np.maximum(t_out, 0.0)
    raw = p.readout.layers[0][0] @ hidden + p.readout.layers[0][1]
    point = _into_geometry(p.kind, raw)
    return point, BaselineCache(trunk_inputs=t_inputs, trunk_preact=t_out, hidden=hidden, raw=raw)


@dataclass
class BaselineGrads:
    trunk: list[tuple[np.ndarray, np.ndarray]]
    readout: list[tuple[np.ndarray, np.ndarray]]

    @staticmethod
    def zeros(p: BaselineParams) -> "BaselineGrads":
        from .nets import mlp_zero_like

        return BaselineGrads(trunk=mlp_zero_like(p.trunk), readout=mlp_zero_like(p.readout))

    def add_scaled(self, other: "BaselineGrads", factor: float = 1.0) -> None:
        for (gw, gb), (ow, ob) in zip(self.trunk, other.trunk):
            gw += factor * ow
            gb += factor * ob
        for (gw, gb), (ow, ob) in zip(self.readout, other.readout):
            gw += factor * ow
            gb += factor * ob


def baseline_backward(p: BaselineParams, cache: BaselineCache, d_raw: np.ndarray) -> BaselineGrads:
    """Gradients of a scalar given its gradient on the raw readout output."""
    r_grads, g_hidden = mlp_backward(p.readout, [cache.hidden], np.asarray(d_raw, dtype=float))
    g_trunk_out = g_hidden * (cache.trunk_preact > 0.0)
    t_grads, _ = mlp_backward(p.trunk, cache.trunk_inputs, g_trunk_out)
    return BaselineGrads(trunk=t_grads, readout=r_grads)


def baseline_to_json(p: BaselineParams) -> str:
    """Checkpoint: landmark indices, head kind and flat layer arrays."""
    return json.dumps(
        {
            "kind": p.kind,
            "d": p.out_dim,
            "l": len(p.landmarks),
            "landmarks": list(p.landmarks.indices),
            "trunk": mlp_to_dict(p.trunk),
            "readout": mlp_to_dict(p.readout),
        }
    )


def baseline_from_json(text: str) -> BaselineParams:
    data = json.loads(text)
    return BaselineParams(
        landmarks=LandmarkSet(indices=tuple(data["landmarks"])),
        trunk=mlp_from_dict(data["trunk"]),
        readout=mlp_from_dict(data["readout"]),
        kind=data["kind"],
        out_dim=int(data["d"]),
    )


def raw_gradient(kind: str, raw: np.ndarray, d_point: np.ndarray) -> np.ndarray:
    """Chain a gradient on the geometry point back to the raw readout."""
    g = np.asarray(d_point, dtype=float).copy()
    if kind == "euclidean_d":
        return g
    # softplus'(v) = sigmoid(v) on the floored positive coordinate
    v = raw[-1]
    sig = 1.0 / (1.0 + np.exp(-v)) if v > -30 else np.exp(v)
    g[-1] *= sig
    return g


def _arccosh_sq_factor(z: float) -> float:
    # d(arccosh^2)/dz = 2 arccosh(z) / sqrt(z^2 - 1), smooth limit 2 at z = 1
    w = z - 1.0
    if w < 1e-8:
        return 2.0 - 2.0 * w / 3.0
    return 2.0 * _arccosh(z) / float(np.sqrt(z * z - 1.0))


def hyperbolic_sq_distance_and_grads(xa: np.ndarray, xb: np.ndarray):
    """Squared hyperbolic distance with gradients in the half-space coords."""
    ua, ub = xa[-1], xb[-1]
    if ua <= 0 or ub <= 0:
        raise ValidationError("half-space coordinates must be positive")
    diff = xa - xb
    s = float(diff @ diff)
    z = 1.0 + s / (2.0 * ua * ub)
    dist = _arccosh(z)
    f = _arccosh_sq_factor(z)
    ga = f * diff / (ua * ub)
    gb = -f * diff / (ua * ub)
    ga[-1] += f * (-s / (2.0 * ua * ua * ub))
    gb[-1] += f * (-s / (2.0 * ua * ub * ub))
    return dist * dist, ga, gb


def euclidean_sq_distance_and_grads(ya: np.ndarray, yb: np.ndarray):
    diff = ya - yb
    return float(diff @ diff), 2.0 * diff, -2.0 * diff


def fisher_rao_sq_distance_and_grads(pa: FisherRaoPoint, pb: FisherRaoPoint):
    """Squared Fisher-Rao distance with gradients via the half-plane form.

    The distance equals sqrt(2) times the hyperbolic distance between
    (mean / sqrt 2, std) pairs, so the squared distance and gradients
    chain through that representation.
    """
    qa = np.array([pa.mean / np.sqrt(2.0), pa.std])
    qb = np.array([pb.mean / np.sqrt(2.0), pb.std])
    hsq, ga, gb = hyperbolic_sq_distance_and_grads(qa, qb)
    dsq = 2.0 * hsq
    ga = 2.0 * ga
    gb = 2.0 * gb
    # chain mean coordinate through the 1/sqrt(2) scaling
    grad_a = np.array([ga[0] / np.sqrt(2.0), ga[1]])
    grad_b = np.array([gb[0] / np.sqrt(2.0), gb[1]])
    return dsq, grad_a, grad_b
