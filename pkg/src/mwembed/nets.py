"""Plain ReLU feedforward networks with explicit reverse-mode gradients.

A network is a list of (weight, bias) pairs applied as affine maps with
ReLU between them and no activation after the last affine layer. Depth
counts affine layers, so it is one more than the number of activations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError


@dataclass
class MLPParams:
    """Weights and biases of a ReLU feedforward network."""

    layers: list[tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        for k, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValidationError(f"layer {k} has inconsistent shapes")
            if k > 0 and w.shape[1] != self.layers[k - 1][0].shape[0]:
                raise ValidationError(f"layer {k} input dim does not chain")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValidationError(f"layer {k} has non-finite entries")

    @property
    def in_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def width(self) -> int:
        return max(w.shape[0] for w, _ in self.layers)

    def copy(self) -> "MLPParams":
        return MLPParams([(w.copy(), b.copy()) for w, b in self.layers])


def mlp_init(dims: list[int], rng: np.random.Generator, scale: float = 1.0) -> MLPParams:
    """Glorot-uniform weights, zero biases, for the given layer dims."""
    layers = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        bound = scale * np.sqrt(6.0 / (d_in + d_out))
        w = rng.uniform(-bound, bound, size=(d_out, d_in))
        layers.append((w, np.zeros(d_out)))
    return MLPParams(layers)


def mlp_forward(p: MLPParams, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a single input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.in_dim,):
        raise ValidationError(f"input shape {x.shape} does not match in_dim {p.in_dim}")
    h = x
    for k, (w, b) in enumerate(p.layers):
        h = w @ h + b
        if k < len(p.layers) - 1:
            h = np.maximum(h, 0.0)
    return h


def mlp_forward_cached(p: MLPParams, x: np.ndarray):
    """Forward pass keeping the post-activation inputs of every layer."""
    inputs = [np.asarray(x, dtype=float)]
    h = inputs[0]
    for k, (w, b) in enumerate(p.layers):
        h = w @ h + b
        if k < len(p.layers) - 1:
            h = np.maximum(h, 0.0)
        inputs.append(h)
    return h, inputs


def mlp_backward(p: MLPParams, inputs: list[np.ndarray], upstream: np.ndarray):
    """Gradients of (upstream . output) for every layer and the input.

    ``inputs`` is the cache from :func:`mlp_forward_cached`. The ReLU
    subgradient at 0 is taken to be 0.
    """
    grads = [None] * len(p.layers)
    g = np.asarray(upstream, dtype=float)
    for k in range(len(p.layers) - 1, -1, -1):
        w, _ = p.layers[k]
        grads[k] = (np.outer(g, inputs[k]), g.copy())
        g = w.T @ g
        if k > 0:
            g = g * (inputs[k] > 0.0)
    return grads, g


def mlp_preactivations(p: MLPParams, x: np.ndarray) -> list[np.ndarray]:
    """Pre-activation vectors of the hidden layers (those feeding a ReLU)."""
    h = np.asarray(x, dtype=float)
    pre = []
    for k, (w, b) in enumerate(p.layers):
        z = w @ h + b
        if k < len(p.layers) - 1:
            pre.append(z)
            h = np.maximum(z, 0.0)
        else:
            h = z
    return pre


def mlp_param_count(p: MLPParams) -> int:
    """Number of exactly nonzero weight and bias entries."""
    return int(sum(np.count_nonzero(w) + np.count_nonzero(b) for w, b in p.layers))


def mlp_zero_like(p: MLPParams) -> list[tuple[np.ndarray, np.ndarray]]:
    return [(np.zeros_like(w), np.zeros_like(b)) for w, b in p.layers]


def mlp_to_dict(p: MLPParams) -> dict:
    """Checkpoint form: layer shapes plus flat row-major arrays."""
    return {
        "shapes": [list(w.shape) for w, _ in p.layers],
        "weights": [w.reshape(-1).tolist() for w, _ in p.layers],
        "biases": [b.tolist() for _, b in p.layers],
    }


def mlp_from_dict(data: dict) -> MLPParams:
    layers = []
    for shape, wflat, b in zip(data["shapes"], data["weights"], data["biases"]):
        w = np.asarray(wflat, dtype=float).reshape(shape)
        layers.append((w, np.asarray(b, dtype=float)))
    return MLPParams(layers)
