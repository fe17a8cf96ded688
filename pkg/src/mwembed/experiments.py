"""Experiment drivers: binary-tree embedding and sphere dimension sweeps.

Each driver builds a dataset, trains one model per requested geometry
from an identical trunk initialization and batch schedule, and gathers
distortion reports. ``scale="paper"`` mirrors the reference setup
(depth-6 tree, 10,000 sphere samples, roughly 200k-parameter trunks);
``scale="desk"`` is a reduced configuration of our own that preserves
the qualitative orderings while staying CPU-friendly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import DistortionReport, distortion_report
from .exceptions import ValidationError
from .graphs import gen_binary_tree, graph_geodesics
from .metric import FiniteMetricSpace, LandmarkSet
from .spheres import quasi_uniform_landmarks, sphere_metric_space, sphere_sample, SpherePointSet
from .training import (
    TrainConfig,
    TrainReport,
    init_model,
    pairwise_embedded_distances,
    train_run,
)

TREE_DESK = {
    "depth": 5,
    "iterations": 2000,
    "batch_size": 16,
    "trunk_hidden": (64, 64),
    "lr_initial": 1e-2,
    "lr_final": 1e-5,
    "hyperbolic_dims": (2, 15),
}
TREE_PAPER = {
    "depth": 6,
    "iterations": 20000,
    "batch_size": 32,
    "trunk_hidden": (192, 192),
    "lr_initial": 1e-4,
    "lr_final": 1e-6,
    "hyperbolic_dims": (2, 15),
}
TREE_TEST_SIZE = 16
TREE_LANDMARKS = 20
TREE_MIXTURES = 5

SPHERE_DESK = {"samples": 1000, "iterations": 500, "batch_size": 16,
               "trunk_hidden": (64, 64), "lr_initial": 1e-2, "lr_final": 1e-5,
               "eval_points": 200}
SPHERE_PAPER = {"samples": 10000, "iterations": 2000, "batch_size": 32,
                "trunk_hidden": (320, 320), "lr_initial": 1e-4, "lr_final": 1e-6,
                "eval_points": 400}
S2_ITERATIONS = 160
S2_LANDMARKS = 13
SPHERE_MIXTURES = 5
SPHERE_EMBED_DIM = 15


@dataclass
class ExperimentBundle:
    """Everything one driver run produces."""

    name: str
    scale: str
    seed: int
    space: FiniteMetricSpace
    train_indices: np.ndarray
    test_indices: np.ndarray
    landmarks: LandmarkSet
    models: dict = field(default_factory=dict)
    train_reports: dict = field(default_factory=dict)
    histories: dict = field(default_factory=dict)
    reports: dict[str, DistortionReport] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)


def _scale_params(scale: str, desk: dict, paper: dict) -> dict:
    if scale == "desk":
        return desk
    if scale == "paper":
        return paper
    raise ValidationError(f"scale must be 'desk' or 'paper', got {scale!r}")


def _pairs_within(indices) -> list[tuple[int, int]]:
    idx = [int(i) for i in indices]
    return [(idx[a], idx[b]) for a in range(len(idx)) for b in range(a + 1, len(idx))]


def _report_for(model, space, indices, alpha) -> DistortionReport:
    dists = pairwise_embedded_distances(model, space, indices)
    return distortion_report(space, dists, alpha=alpha)


def run_tree_experiment(scale: str = "desk", seed: int = 0) -> ExperimentBundle:
    """Train mixture and hyperbolic embeddings of a regular binary tree.

    Fits the mixture model plus upper-half-space models (dims 2 and 15)
    with a shared trunk initialization, then reports train/test
    distortion per geometry.
    """
    params = _scale_params(scale, TREE_DESK, TREE_PAPER)
    space = graph_geodesics(gen_binary_tree(params["depth"]))
    rng = np.random.default_rng(seed)
    order = rng.permutation(space.n)
    test_idx = np.sort(order[:TREE_TEST_SIZE])
    train_idx = np.sort(order[TREE_TEST_SIZE:])
    landmarks = LandmarkSet(
        indices=tuple(int(i) for i in rng.choice(train_idx, size=TREE_LANDMARKS, replace=False))
    )
    bundle = ExperimentBundle(
        name="tree",
        scale=scale,
        seed=seed,
        space=space,
        train_indices=train_idx,
        test_indices=test_idx,
        landmarks=landmarks,
    )
    kinds = [("gm_mixture", None)] + [("hyperbolic_d", d) for d in params["hyperbolic_dims"]]
    for kind, dim in kinds:
        label = kind if dim is None else f"{kind}{dim}"
        model = init_model(
            kind,
            landmarks,
            np.random.default_rng(seed),
            mixture_count=TREE_MIXTURES,
            embed_dim=dim or 1,
            trunk_hidden=params["trunk_hidden"],
        )
        config = TrainConfig(
            iterations=params["iterations"],
            batch_size=params["batch_size"],
            lr_initial=params["lr_initial"],
            lr_final=params["lr_final"],
            seed=seed,
            head_kind=kind,
        )
        report = train_run(model, space, train_idx, config)
        trained = report.final_params
        bundle.models[label] = trained
        bundle.histories[label] = report
        bundle.reports[f"{label}/train"] = _report_for(trained, space, train_idx, config.alpha)
        bundle.reports[f"{label}/test"] = _report_for(trained, space, test_idx, config.alpha)
    return bundle


def _sphere_space(sphere_dim: int, n_samples: int, n_landmarks: int, seed: int):
    landmarks_pts = quasi_uniform_landmarks(sphere_dim, n_landmarks, seed)
    samples = sphere_sample(sphere_dim, n_samples, seed + 1)
    all_points = SpherePointSet(points=np.vstack([landmarks_pts.points, samples.points]))
    space = sphere_metric_space(all_points)
    landmark_idx = LandmarkSet(indices=tuple(range(n_landmarks)))
    sample_idx = np.arange(n_landmarks, n_landmarks + n_samples)
    return space, landmark_idx, sample_idx, all_points


def run_sphere_experiment(
    sphere_dim: int, scale: str = "desk", seed: int = 0, mode: str = "sweep"
) -> ExperimentBundle:
    """Embed uniform sphere samples; compare geometries or visualize.

    mode="sweep" trains mixture, Euclidean and hyperbolic models with a
    matched trunk and landmark count sphere_dim + 10; mode="s2" runs
    the 13-landmark mixture-only configuration and additionally emits
    per-point mean/max squared-distance errors.
    """
    if mode not in ("sweep", "s2"):
        raise ValidationError(f"mode must be 'sweep' or 's2', got {mode!r}")
    params = _scale_params(scale, SPHERE_DESK, SPHERE_PAPER)
    n_landmarks = S2_LANDMARKS if mode == "s2" else sphere_dim + 10
    space, landmarks, sample_idx, points = _sphere_space(
        sphere_dim, params["samples"], n_landmarks, seed
    )
    rng = np.random.default_rng(seed + 2)
    eval_count = min(params["eval_points"], sample_idx.size)
    eval_idx = np.sort(rng.choice(sample_idx, size=eval_count, replace=False))
    bundle = ExperimentBundle(
        name="s2" if mode == "s2" else f"sphere{sphere_dim}",
        scale=scale,
        seed=seed,
        space=space,
        train_indices=sample_idx,
        test_indices=eval_idx,
        landmarks=landmarks,
    )
    bundle.extras["points"] = points.points
    if mode == "s2":
        kinds = ["gm_mixture"]
        iterations = S2_ITERATIONS
        batch = 32
    else:
        kinds = ["gm_mixture", "euclidean_d", "hyperbolic_d"]
        iterations = params["iterations"]
        batch = params["batch_size"]
    for kind in kinds:
        model = init_model(
            kind,
            landmarks,
            np.random.default_rng(seed),
            mixture_count=SPHERE_MIXTURES,
            embed_dim=SPHERE_EMBED_DIM,
            trunk_hidden=params["trunk_hidden"],
        )
        config = TrainConfig(
            iterations=iterations,
            batch_size=batch,
            lr_initial=params["lr_initial"],
            lr_final=params["lr_final"],
            seed=seed,
            head_kind=kind,
        )
        report = train_run(model, space, sample_idx, config)
        trained = report.final_params
        bundle.models[kind] = trained
        bundle.histories[kind] = report
        bundle.reports[f"{kind}/eval"] = _report_for(trained, space, eval_idx, config.alpha)
    if mode == "s2":
        bundle.extras.update(_per_point_errors(bundle.models["gm_mixture"], space, eval_idx))
    return bundle


def _per_point_errors(model, space, indices) -> dict:
    """Mean and max |d^2 - D_emb^2| of each point against the others."""
    dists = pairwise_embedded_distances(model, space, indices)
    idx = [int(i) for i in indices]
    pos = {p: k for k, p in enumerate(idx)}
    n = len(idx)
    errs = np.zeros((n, n))
    for (i, j), emb in dists.items():
        e = abs(space.d(i, j) ** 2 - emb**2)
        errs[pos[i], pos[j]] = e
        errs[pos[j], pos[i]] = e
    mask = ~np.eye(n, dtype=bool)
    per_mean = errs.sum(axis=1) / (n - 1)
    per_max = np.where(mask, errs, 0.0).max(axis=1)
    return {
        "per_point_indices": np.asarray(idx),
        "per_point_mean_sq_error": per_mean,
        "per_point_max_sq_error": per_max,
    }


def sphere_dimension_sweep(dims, scale: str = "desk", seed: int = 0) -> dict:
    """Mean relative error per geometry for each sphere dimension."""
    table = {}
    for n_dim in dims:
        bundle = run_sphere_experiment(n_dim, scale=scale, seed=seed, mode="sweep")
        table[n_dim] = {
            kind: bundle.reports[f"{kind}/eval"].mean_rel_error
            for kind in ("gm_mixture", "euclidean_d", "hyperbolic_d")
        }
    return table
