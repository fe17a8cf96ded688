"""Command-line interface.

Exit codes: 0 on success, 2 on input validation failure, 3 on numeric
failure. All randomness flows from --seed, and outputs are byte-stable
for a fixed seed.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import analysis, experiments
from .embedding import ConstructiveEmbedder
from .exceptions import NumericError, ValidationError
from .gaussians import mixture_from_json
from .graphs import gen_binary_tree, gen_two_hop, graph_geodesics, spectral_radius, write_edge_list
from .heads import baseline_to_json
from .metric import build_metric_space, LandmarkSet
from .spheres import sphere_sample, sphere_metric_space
from .training import TrainConfig, gradcheck, init_model
from .transformer import pt_to_json, PTParams
from .transport import mw2


def _wrap_errors(fn):
    @functools.wraps(fn)
    def inner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"validation error: {exc}", err=True)
            sys.exit(2)
        except NumericError as exc:
            click.echo(f"numeric failure: {exc}", err=True)
            sys.exit(3)

    return inner


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


@click.group()
def main():
    """Metric-space embeddings into Gaussian mixtures."""


@main.group()
def gen():
    """Generate datasets (graphs, spheres) and their distance matrices."""


@gen.command()
@click.option("--depth", type=int, required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_wrap_errors
def tree(depth, out_dir):
    """Full binary tree with its geodesic metric."""
    out = _outdir(out_dir)
    g = gen_binary_tree(depth)
    space = graph_geodesics(g)
    write_edge_list(g, out / "edges.txt")
    analysis.export_matrix_csv(space.dist, out / "dist.csv")
    click.echo(f"tree depth {depth}: {g.n_vertices} vertices -> {out}")


@gen.command("two-hop")
@click.option("--kind", type=click.Choice(["star", "wheel", "complete_bipartite", "friendship"]), required=True)
@click.option("--size", type=int, required=True)
@click.option("--size2", type=int, default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_wrap_errors
def two_hop(kind, size, size2, out_dir):
    """Diameter-2 graph families, with the spectral radius on stdout."""
    out = _outdir(out_dir)
    g = gen_two_hop(kind, size, size2)
    space = graph_geodesics(g)
    write_edge_list(g, out / "edges.txt")
    analysis.export_matrix_csv(space.dist, out / "dist.csv")
    click.echo(f"{kind}: {g.n_vertices} vertices, spectral radius {spectral_radius(g):.12g}")


@gen.command()
@click.option("--dim", type=int, required=True, help="sphere dimension N")
@click.option("--count", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_wrap_errors
def sphere(dim, count, seed, out_dir):
    """Uniform sphere samples with their geodesic metric."""
    out = _outdir(out_dir)
    pts = sphere_sample(dim, count, seed)
    space = sphere_metric_space(pts)
    analysis.export_matrix_csv(pts.points, out / "points.csv")
    analysis.export_matrix_csv(space.dist, out / "dist.csv")
    click.echo(f"S^{dim}: {count} points -> {out}")


@main.command()
@click.option("--dist", "dist_csv", required=True, type=click.Path(exists=True))
@click.option("--alpha", type=float, default=1.0)
@click.option("--out", "out_dir", required=True, type=click.Path())
@_wrap_errors
def embed(dist_csv, alpha, out_dir):
    """Constructive point-mass embedding of a distance matrix."""
    out = _outdir(out_dir)
    space = build_metric_space(analysis.read_matrix_csv(dist_csv))
    embedder = ConstructiveEmbedder(alpha=alpha).fit(space)
    analysis.export_mixtures_json(embedder.mixtures_, out / "mixtures.json")
    analysis.export_matrix_csv(embedder.bias_.b[None, :], out / "bias.csv")
    dists = embedder.pairwise_embedded_distances()
    report = analysis.distortion_report(space, dists, alpha=alpha)
    analysis.export_report_json(report, out / "report.json")
    analysis.export_pairs_csv(space, dists, out / "pairs.csv", alpha=alpha)
    click.echo(
        f"embedded {space.n} points: scale {report.scale_s:.6g}, "
        f"distortion {report.distortion_D:.6g}"
    )


@main.command()
@click.option("--experiment", type=click.Choice(["tree", "sphere", "s2"]), required=True)
@click.option("--scale", type=click.Choice(["desk", "paper"]), default="desk")
@click.option("--seed", type=int, default=0)
@click.option("--dim", type=int, default=2, help="sphere dimension for --experiment sphere")
@click.option("--iters", type=int, default=None, help="override the scale's iteration count")
@click.option("--out", "out_dir", required=True, type=click.Path())
@_wrap_errors
def train(experiment, scale, seed, dim, iters, out_dir):
    """Run an experiment driver and export reports and checkpoints."""
    out = _outdir(out_dir)
    with _iteration_override(iters):
        if experiment == "tree":
            bundle = experiments.run_tree_experiment(scale=scale, seed=seed)
        elif experiment == "sphere":
            bundle = experiments.run_sphere_experiment(dim, scale=scale, seed=seed, mode="sweep")
        else:
            bundle = experiments.run_sphere_experiment(2, scale=scale, seed=seed, mode="s2")
    summary = {"experiment": experiment, "scale": scale, "seed": seed, "reports": {}}
    for label, model in bundle.models.items():
        safe = label.replace("/", "_")
        report = bundle.histories[label]
        analysis.export_history_csv(
            report.loss_history, report.lr_history, out / f"{safe}_history.csv"
        )
        text = pt_to_json(model) if isinstance(model, PTParams) else baseline_to_json(model)
        (out / f"{safe}_checkpoint.json").write_text(text + "\n")
    for key, rep in bundle.reports.items():
        summary["reports"][key] = rep.to_dict()
    for key in ("per_point_mean_sq_error", "per_point_max_sq_error"):
        if key in bundle.extras:
            summary[key] = np.asarray(bundle.extras[key]).tolist()
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    click.echo(f"{experiment} ({scale}) done -> {out}")


class _iteration_override:
    """Temporarily override the drivers' iteration counts."""

    def __init__(self, iters):
        self.iters = iters
        self.saved = None

    def __enter__(self):
        if self.iters is None:
            return
        self.saved = (
            dict(experiments.TREE_DESK),
            dict(experiments.TREE_PAPER),
            dict(experiments.SPHERE_DESK),
            dict(experiments.SPHERE_PAPER),
            experiments.S2_ITERATIONS,
        )
        for cfg in (experiments.TREE_DESK, experiments.TREE_PAPER,
                    experiments.SPHERE_DESK, experiments.SPHERE_PAPER):
            cfg["iterations"] = self.iters
        experiments.S2_ITERATIONS = self.iters

    def __exit__(self, *exc):
        if self.saved is None:
            return
        experiments.TREE_DESK.update(self.saved[0])
        experiments.TREE_PAPER.update(self.saved[1])
        experiments.SPHERE_DESK.update(self.saved[2])
        experiments.SPHERE_PAPER.update(self.saved[3])
        experiments.S2_ITERATIONS = self.saved[4]


@main.command()
@click.option("--dist", "dist_csv", required=True, type=click.Path(exists=True))
@click.option("--mixtures", "mixtures_json", required=True, type=click.Path(exists=True))
@click.option("--alpha", type=float, default=1.0)
@click.option("--pac-grid", default="1,1.5,2,3,5,10", help="comma-separated distortions")
@click.option("--out", "out_dir", required=True, type=click.Path())
@_wrap_errors
def report(dist_csv, mixtures_json, alpha, pac_grid, out_dir):
    """Distortion report and empirical PAC curve of stored mixtures."""
    out = _outdir(out_dir)
    space = build_metric_space(analysis.read_matrix_csv(dist_csv))
    payload = json.loads(Path(mixtures_json).read_text())
    mixtures = [mixture_from_json(json.dumps(entry)) for entry in payload]
    if len(mixtures) != space.n:
        raise ValidationError(
            f"{len(mixtures)} mixtures for {space.n} points; they must match"
        )
    dists = {}
    for i in range(space.n):
        for j in range(i + 1, space.n):
            dists[(i, j)] = mw2(mixtures[i], mixtures[j])[0]
    rep = analysis.distortion_report(space, dists, alpha=alpha)
    grid = np.array([float(v) for v in pac_grid.split(",")])
    curve = analysis.pac_fraction_curve(rep, grid)
    analysis.export_report_json(rep, out / "report.json")
    analysis.export_pairs_csv(space, dists, out / "pairs.csv", alpha=alpha)
    analysis.export_pac_curve_csv(curve, out / "pac_curve.csv")
    click.echo(
        f"mean rel error {rep.mean_rel_error:.6g}, max {rep.max_rel_error:.6g}, "
        f"distortion {rep.distortion_D:.6g}"
    )


@main.command()
@click.option("--n", "n_points", type=int, required=True)
@click.option("--delta", type=float, default=None)
@click.option("--distortion", type=float, default=None)
@click.option("--out", "out_file", type=click.Path(), default=None)
@_wrap_errors
def pac(n_points, delta, distortion, out_file):
    """Evaluate the distortion/probability formulas."""
    summary = analysis.pac_summary(n_points, delta=delta, distortion=distortion)
    text = json.dumps(summary, indent=1, sort_keys=True)
    if out_file:
        Path(out_file).write_text(text + "\n")
    click.echo(text)


@main.command()
@click.option("--mixtures", "mixtures_json", required=True, type=click.Path(exists=True))
@click.option("--grid", type=int, default=512)
@click.option("--sigma-transform/--no-sigma-transform", default=False)
@click.option("--out", "out_file", required=True, type=click.Path())
@_wrap_errors
def density(mixtures_json, grid, sigma_transform, out_file):
    """Sample stored mixtures' densities on a grid (CSV)."""
    payload = json.loads(Path(mixtures_json).read_text())
    mixtures = [mixture_from_json(json.dumps(entry)) for entry in payload]
    analysis.export_density_csv(mixtures, out_file, grid_points=grid, sigma_transform=sigma_transform)
    click.echo(f"densities of {len(mixtures)} mixtures -> {out_file}")


@main.command("gradcheck")
@click.option("--head", type=click.Choice(["gm_mixture", "euclidean_d", "hyperbolic_d", "fisher_rao"]),
              default="gm_mixture")
@click.option("--trials", type=int, default=5)
@click.option("--seed", type=int, default=0)
@_wrap_errors
def gradcheck_cmd(head, trials, seed):
    """Check analytic loss gradients against finite differences."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1.0, size=(6, 3))
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    space = build_metric_space(dist)
    landmarks = LandmarkSet(indices=(0, 1, 2, 3))
    model = init_model(head, landmarks, rng, mixture_count=2, embed_dim=2, trunk_hidden=(8,))
    config = TrainConfig(iterations=1, batch_size=2, seed=seed, head_kind=head)
    err = gradcheck(model, space, config, trials=trials, rng=rng)
    click.echo(f"max relative gradient error: {err:.3e}")
    if err > 1e-4:
        raise NumericError(f"gradient check failed: {err:.3e} > 1e-4")


if __name__ == "__main__":
    main()
