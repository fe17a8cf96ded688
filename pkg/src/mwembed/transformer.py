"""The mixture-valued transformer: landmark features in, Gaussian mixture out.

A model is a landmark set, an optional shared ReLU trunk, a weight
network producing softmax mixture weights, and one head per component
producing a mean block plus a covariance-factor block. The emitted
covariance is factor^T factor, so outputs always satisfy the mixture
invariants; in one dimension the factor reduces to a scalar and the
standard deviation is its absolute value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError
from .gaussians import GaussianD, GaussianMixture1D, GaussianMixtureD
from .metric import FiniteMetricSpace, LandmarkSet, landmark_features
from .nets import (
    MLPParams,
    mlp_backward,
    mlp_forward_cached,
    mlp_from_dict,
    mlp_init,
    mlp_param_count,
    mlp_to_dict,
    mlp_zero_like,
)

ABSOLUTE_CONSTANT_NOTE = "up to the paper's absolute constant"


def softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - np.max(z))
    return e / e.sum()


@dataclass
class PTParams:
    """Parameters of a probabilistic transformer.

    ``weight_net`` maps (trunk) features to K logits; ``heads[k]`` maps
    the same features to output_dim + output_dim**2 numbers. When a
    ``trunk`` is present its output is passed through ReLU and feeds
    both the weight network and every head; its parameters are counted
    once.
    """

    landmarks: LandmarkSet
    weight_net: MLPParams
    heads: list[MLPParams]
    output_dim: int
    trunk: MLPParams | None = None

    def __post_init__(self):
        k = self.weight_net.out_dim
        if len(self.heads) != k:
            raise ValidationError(f"expected {k} heads, got {len(self.heads)}")
        d = self.output_dim
        for idx, head in enumerate(self.heads):
            if head.out_dim != d + d * d:
                raise ValidationError(f"head {idx} must output {d + d * d} values")
        feat = self.trunk.out_dim if self.trunk is not None else len(self.landmarks)
        nets = [self.weight_net, *self.heads]
        if any(net.in_dim != feat for net in nets):
            raise ValidationError("weight net and heads must share the feature dim")
        if self.trunk is not None and self.trunk.in_dim != len(self.landmarks):
            raise ValidationError("trunk input dim must equal the landmark count")

    @property
    def mixture_count(self) -> int:
        return self.weight_net.out_dim

    @property
    def n_landmarks(self) -> int:
        return len(self.landmarks)


def pt_init(
    landmarks: LandmarkSet,
    mixture_count: int,
    output_dim: int,
    trunk_hidden: tuple[int, ...],
    rng: np.random.Generator,
) -> PTParams:
    """Fresh model with a shared trunk and single-affine weight net/heads."""
    n_l = len(landmarks)
    trunk = mlp_init([n_l, *trunk_hidden], rng) if trunk_hidden else None
    feat = trunk_hidden[-1] if trunk_hidden else n_l
    weight_net = mlp_init([feat, mixture_count], rng)
    heads = [
        mlp_init([feat, output_dim + output_dim**2], rng) for _ in range(mixture_count)
    ]
    return PTParams(
        landmarks=landmarks,
        weight_net=weight_net,
        heads=heads,
        output_dim=output_dim,
        trunk=trunk,
    )


@dataclass
class PTCache:
    """Intermediate values of one forward pass, consumed by pt_backward."""

    features: np.ndarray
    trunk_inputs: list[np.ndarray] | None
    trunk_preact: np.ndarray | None
    hidden: np.ndarray
    weight_inputs: list[np.ndarray]
    mix_weights: np.ndarray
    head_inputs: list[list[np.ndarray]]
    head_outputs: list[np.ndarray]


def pt_forward(p: PTParams, space: FiniteMetricSpace, point_index: int):
    """Evaluate the transformer at one point of the fitted space."""
    mixture, _ = pt_forward_cached(p, space, point_index)
    return mixture


def pt_forward_cached(p: PTParams, space: FiniteMetricSpace, point_index: int):
    u = landmark_features(space, p.landmarks, point_index)
    return pt_forward_features(p, u)


def pt_forward_features(p: PTParams, u: np.ndarray):
    """Forward pass from a precomputed landmark-feature vector."""
    if p.trunk is not None:
        t_out, t_inputs = mlp_forward_cached(p.trunk, u)
        hidden = np.maximum(t_out, 0.0)
    else:
        t_out, t_inputs = None, None
        hidden = np.asarray(u, dtype=float)
    logits, w_inputs = mlp_forward_cached(p.weight_net, hidden)
    mix = softmax(logits)
    head_inputs = []
    head_outputs = []
    for head in p.heads:
        out, cache = mlp_forward_cached(head, hidden)
        head_outputs.append(out)
        head_inputs.append(cache)
    cache = PTCache(
        features=np.asarray(u, dtype=float),
        trunk_inputs=t_inputs,
        trunk_preact=t_out,
        hidden=hidden,
        weight_inputs=w_inputs,
        mix_weights=mix,
        head_inputs=head_inputs,
        head_outputs=head_outputs,
    )
    return _assemble_mixture(p, mix, head_outputs), cache


def _assemble_mixture(p: PTParams, mix: np.ndarray, head_outputs: list[np.ndarray]):
    d = p.output_dim
    if d == 1:
        means = np.array([out[0] for out in head_outputs])
        stds = np.array([abs(out[1]) for out in head_outputs])
        return GaussianMixture1D(weights=mix, means=means, stds=stds)
    comps = []
    for out in head_outputs:
        mean = out[:d]
        factor = out[d:].reshape(d, d)
        comps.append(GaussianD(mean=mean, cov=factor.T @ factor))
    return GaussianMixtureD(weights=mix, components=tuple(comps))


@dataclass
class PTGrads:
    """Per-parameter gradients mirroring the PTParams structure."""

    weight_net: list[tuple[np.ndarray, np.ndarray]]
    heads: list[list[tuple[np.ndarray, np.ndarray]]]
    trunk: list[tuple[np.ndarray, np.ndarray]] | None

    @staticmethod
    def zeros(p: PTParams) -> "PTGrads":
        return PTGrads(
            weight_net=mlp_zero_like(p.weight_net),
            heads=[mlp_zero_like(h) for h in p.heads],
            trunk=mlp_zero_like(p.trunk) if p.trunk is not None else None,
        )

    def add_scaled(self, other: "PTGrads", factor: float = 1.0) -> None:
        for (gw, gb), (ow, ob) in zip(self.weight_net, other.weight_net):
            gw += factor * ow
            gb += factor * ob
        for mine, theirs in zip(self.heads, other.heads):
            for (gw, gb), (ow, ob) in zip(mine, theirs):
                gw += factor * ow
                gb += factor * ob
        if self.trunk is not None:
            for (gw, gb), (ow, ob) in zip(self.trunk, other.trunk):
                gw += factor * ow
                gb += factor * ob


def pt_backward(
    p: PTParams,
    cache: PTCache,
    d_weights: np.ndarray,
    d_means: np.ndarray,
    d_spread: np.ndarray,
) -> PTGrads:
    """Reverse-mode gradients of a scalar through one forward pass.

    ``d_weights`` has shape (K,), ``d_means`` (K,) for output_dim 1 or
    (K, D), and ``d_spread`` is the gradient with respect to the stds
    (K,) in one dimension or the covariance matrices (K, D, D)
    otherwise. ReLU and |s| subgradients at 0 are taken as 0.
    """
    k = p.mixture_count
    d = p.output_dim
    mix = cache.mix_weights
    d_weights = np.asarray(d_weights, dtype=float)
    # softmax chain rule: dlogits = w * (dw - <w, dw>)
    dlogits = mix * (d_weights - float(mix @ d_weights))
    w_grads, g_hidden = mlp_backward(p.weight_net, cache.weight_inputs, dlogits)

    head_grads = []
    d_means = np.asarray(d_means, dtype=float).reshape(k, d)
    for idx, head in enumerate(p.heads):
        out = cache.head_outputs[idx]
        upstream = np.empty(d + d * d)
        upstream[:d] = d_means[idx]
        if d == 1:
            s = out[1]
            upstream[1] = float(np.sign(s)) * float(np.asarray(d_spread).reshape(k)[idx])
        else:
            factor = out[d:].reshape(d, d)
            g_cov = np.asarray(d_spread, dtype=float).reshape(k, d, d)[idx]
            upstream[d:] = (factor @ (g_cov + g_cov.T)).reshape(-1)
        grads, g_in = mlp_backward(head, cache.head_inputs[idx], upstream)
        head_grads.append(grads)
        g_hidden = g_hidden + g_in

    trunk_grads = None
    if p.trunk is not None:
        g_trunk_out = g_hidden * (cache.trunk_preact > 0.0)
        trunk_grads, _ = mlp_backward(p.trunk, cache.trunk_inputs, g_trunk_out)
    return PTGrads(weight_net=w_grads, heads=head_grads, trunk=trunk_grads)


def param_count(p: PTParams) -> int:
    """Nonzero weight/bias entries over all subnetworks, trunk counted once."""
    total = mlp_param_count(p.weight_net) + sum(mlp_param_count(h) for h in p.heads)
    if p.trunk is not None:
        total += mlp_param_count(p.trunk)
    return total


def effective_dimension(p: PTParams) -> int:
    d = p.output_dim
    return p.mixture_count * (d + d * d)


def pt_depth(p: PTParams) -> int:
    base = max(p.weight_net.depth, max(h.depth for h in p.heads))
    return base + (p.trunk.depth if p.trunk is not None else 0)


def pt_width(p: PTParams) -> int:
    nets = [p.weight_net, *p.heads] + ([p.trunk] if p.trunk is not None else [])
    return max(net.width for net in nets)


def dimensional_constant(n: int) -> float:
    """The dimensional constant entering the memorization depth bounds."""
    return (2.0 * math.log(5.0 * math.sqrt(2.0 * math.pi)) + 1.5 * math.log(n) - 0.5 * math.log(n + 1)) / (
        2.0 * math.log(2.0)
    )


@dataclass
class ComplexityReport:
    """Size accounting for a model plus evaluated theorem-rate formulas.

    Every bound below hides an unspecified absolute constant, reported
    here with that constant set to 1 and labelled as such in ``note``.
    """

    par: int
    width: int
    depth: int
    effdim: int
    theorem_bounds: dict = field(default_factory=dict)
    note: str = ABSOLUTE_CONSTANT_NOTE

    def to_dict(self) -> dict:
        return {
            "par": self.par,
            "width": self.width,
            "depth": self.depth,
            "effdim": self.effdim,
            "theorem_bounds": dict(self.theorem_bounds),
            "note": self.note,
        }


def complexity_report(
    p: PTParams,
    space_stats: tuple[int, float, float],
    extras: dict | None = None,
) -> ComplexityReport:
    """Model sizes together with the embedding-rate formulas.

    ``space_stats`` is (n, aspect, diameter). Optional ``extras`` keys:
    ``capacity``, ``spectral_radius``, ``manifold_dim``, ``alpha``,
    ``distortion_D``. Bounds whose inputs are missing are omitted
    rather than defaulted.
    """
    n, aspect, _diameter = space_stats
    extras = extras or {}
    bounds: dict[str, float] = {"dimensional_constant": dimensional_constant(n)}
    alpha = extras.get("alpha")
    capacity = extras.get("capacity")
    rho = extras.get("spectral_radius")
    m_dim = extras.get("manifold_dim")
    dist = extras.get("distortion_D")
    k = p.mixture_count
    if alpha is not None and capacity is not None and capacity > 1:
        bounds["general_effdim_bound"] = 2.0 * math.ceil(12.0 / alpha * math.log(capacity))
    if k >= 2:
        bounds["tree_distortion_bound"] = float(n) ** (1.0 / (k - 1))
    if alpha is not None and rho is not None:
        bounds["two_hop_effdim_bound"] = float(math.ceil(12.0 / alpha * math.log1p(rho)))
    if alpha is not None and m_dim is not None and alpha < 1.0:
        bounds["ricci_effdim_bound"] = 2.0 * math.ceil(
            m_dim ** (1.0 + alpha) / (alpha * (1.0 - alpha) ** (1.0 + alpha))
        )
    if dist is not None and dist > 1.0:
        k_min = 5.0 * n**4 * aspect**2 / (2.0 * (dist - 1.0))
        bounds["multivariate_component_bound"] = k_min
        bounds["multivariate_support_bound"] = n * (n - 1) / 2.0 * (5.0 * math.ceil(k_min) + 2.0)
    return ComplexityReport(
        par=param_count(p),
        width=pt_width(p),
        depth=pt_depth(p),
        effdim=effective_dimension(p),
        theorem_bounds=bounds,
    )


def pt_to_json(p: PTParams) -> str:
    """Checkpoint: landmark indices, sizes and flat layer arrays."""
    data = {
        "k": p.mixture_count,
        "d": p.output_dim,
        "l": p.n_landmarks,
        "landmarks": list(p.landmarks.indices),
        "weight_net": mlp_to_dict(p.weight_net),
        "heads": [mlp_to_dict(h) for h in p.heads],
        "trunk": mlp_to_dict(p.trunk) if p.trunk is not None else None,
    }
    return json.dumps(data)


def pt_from_json(text: str) -> PTParams:
    data = json.loads(text)
    return PTParams(
        landmarks=LandmarkSet(indices=tuple(data["landmarks"])),
        weight_net=mlp_from_dict(data["weight_net"]),
        heads=[mlp_from_dict(h) for h in data["heads"]],
        output_dim=int(data["d"]),
        trunk=mlp_from_dict(data["trunk"]) if data["trunk"] is not None else None,
    )
