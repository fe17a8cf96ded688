"""Distortion reporting, PAC distortion formulas, and file exports."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ValidationError
from .gaussians import GaussianMixture1D, mixture_to_json
from .metric import FiniteMetricSpace


@dataclass(frozen=True)
class DistortionReport:
    """Per-pair embedding quality of a map against powered distances.

    ``pair_ratios`` holds rho = D_emb / d^alpha per pair; the scale is
    the smallest ratio and the distortion the largest over smallest.
    """

    pairs: tuple[tuple[int, int], ...]
    pair_ratios: np.ndarray
    mean_rel_error: float
    max_rel_error: float
    scale_s: float
    distortion_D: float

    def to_dict(self) -> dict:
        return {
            "mean_rel_error": self.mean_rel_error,
            "max_rel_error": self.max_rel_error,
            "scale_s": self.scale_s,
            "distortion_D": self.distortion_D,
            "n_pairs": len(self.pairs),
        }


def distortion_report(space: FiniteMetricSpace, embedded_distances: dict, alpha: float = 1.0) -> DistortionReport:
    """Relative errors and ratio spread of embedded vs powered distances.

    ``embedded_distances`` maps point pairs (i, j) to their embedded
    distance; the relative error of a pair is |d^alpha - D| / d^alpha.
    """
    if not embedded_distances:
        raise ValidationError("no pairs to report on")
    pairs = sorted((min(i, j), max(i, j)) for i, j in embedded_distances)
    ratios = np.empty(len(pairs))
    errors = np.empty(len(pairs))
    for k, (i, j) in enumerate(pairs):
        d_alpha = space.d(i, j) ** alpha
        if d_alpha <= 0:
            raise ValidationError(f"pair ({i}, {j}) has zero distance")
        emb = float(embedded_distances.get((i, j), embedded_distances.get((j, i))))
        ratios[k] = emb / d_alpha
        errors[k] = abs(d_alpha - emb) / d_alpha
    if np.any(ratios <= 0):
        k = int(np.argmin(ratios))
        raise ValidationError(f"nonpositive embedded distance on pair {pairs[k]}")
    return DistortionReport(
        pairs=tuple(pairs),
        pair_ratios=ratios,
        mean_rel_error=float(errors.mean()),
        max_rel_error=float(errors.max()),
        scale_s=float(ratios.min()),
        distortion_D=float(ratios.max() / ratios.min()),
    )


@dataclass(frozen=True)
class PacCurve:
    """Best achievable fraction of pairs within a common-scale window."""

    distortions: np.ndarray
    fractions: np.ndarray

    def to_dict(self) -> dict:
        return {
            "distortions": self.distortions.tolist(),
            "fractions": self.fractions.tolist(),
        }


def pac_fraction_curve(report: DistortionReport, grid) -> PacCurve:
    """For each distortion D, the largest fraction of pairs whose ratio
    fits inside some multiplicative window [s, s D].

    Exact: ratios are sorted and every window anchored at a ratio value
    is tried.
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 1.0):
        raise ValidationError("distortion grid values must be >= 1")
    rho = np.sort(report.pair_ratios)
    n = rho.size
    fractions = np.empty(grid.size)
    for g, dval in enumerate(grid):
        best = 0
        for start in range(n):
            hi = rho[start] * dval
            count = int(np.searchsorted(rho, hi * (1 + 1e-15), side="right")) - start
            best = max(best, count)
        fractions[g] = best / n
    return PacCurve(distortions=grid, fractions=fractions)


def _pac_distortion_from_lambda(lam: float) -> float:
    return -2.0 * (1.0 + lam) ** ((1.0 + lam) / lam) / lam


def pac_min_delta(n: int) -> float:
    """Smallest admissible pair probability for the distortion formula.

    The formula needs 1 + log_n(sqrt(delta)) in (0, 1) and a distortion
    above 2; the boundary sits at delta = n^-2, where the distortion
    reaches 2 in the limit, giving max(e^-2, n^-2) overall.
    """
    if n < 2:
        raise ValidationError("n must be >= 2")
    return max(math.exp(-2.0), float(n) ** -2.0)


def pac_distortion_from_delta(n: int, delta: float) -> float:
    """Distortion achievable for a pair probability delta on n points."""
    floor = pac_min_delta(n)
    if not floor < delta < 1.0:
        raise ValidationError(
            f"delta must lie in ({floor:.6g}, 1) for n = {n}, got {delta}"
        )
    lam = math.log(math.sqrt(delta), n)
    return _pac_distortion_from_lambda(lam)


def _theta_equation(theta: float) -> float:
    # (1 - theta) * theta^(theta / (1 - theta)), decreasing on (0, 1)
    return (1.0 - theta) * theta ** (theta / (1.0 - theta))


def pac_theta_from_distortion(distortion: float, tol: float = 1e-12) -> float:
    """The unique theta in (0, 1) with 2/D = (1-theta) theta^(theta/(1-theta)).

    Bisection starting from the bracket [1 - 2e/D, 1); the residual of
    the returned root is below 1e-10.
    """
    if distortion <= 2.0:
        raise ValidationError("distortion must exceed 2")
    target = 2.0 / distortion
    lo = max(1.0 - 2.0 * math.e / distortion, 1e-15)
    hi = 1.0 - 1e-15
    if _theta_equation(lo) < target:
        lo = 1e-15
    if _theta_equation(lo) < target or _theta_equation(hi) > target:
        raise NumericError("theta bisection bracket failed")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _theta_equation(mid) >= target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    theta = 0.5 * (lo + hi)
    if abs(_theta_equation(theta) - target) > 1e-10:
        raise NumericError("theta residual too large")
    return theta


def pac_pair_probability_bound(n: int, theta: float) -> float:
    """Guaranteed probability n^(-2 + 2 theta) that a random pair embeds
    within the associated distortion."""
    return float(n) ** (-2.0 + 2.0 * theta)


def pac_summary(n: int, delta: float | None = None, distortion: float | None = None) -> dict:
    """Distortion/probability bookkeeping for one (n, delta) or (n, D).

    Reports the distortion, its theta, the pair-probability bound, and
    two published coarse rates whose denominators disagree by one; both
    are listed verbatim rather than silently preferring either.
    """
    if (delta is None) == (distortion is None):
        raise ValidationError("provide exactly one of delta or distortion")
    out: dict = {"n": n}
    if delta is not None:
        distortion = pac_distortion_from_delta(n, delta)
        out["delta"] = delta
    theta = pac_theta_from_distortion(distortion)
    out["distortion_D"] = distortion
    out["theta_D"] = theta
    out["pair_probability_bound"] = pac_pair_probability_bound(n, theta)
    out["rate_4e_over_1_plus_D"] = float(n) ** (-4.0 * math.e / (1.0 + distortion))
    out["rate_4e_over_D"] = float(n) ** (-4.0 * math.e / distortion)
    return out


def sigma_visual_transform(std: float) -> float:
    """Standard-deviation remap log10(sigma + 2.1) used for density plots."""
    return math.log10(std + 2.1)


def export_density_csv(mixtures, path, grid_points: int = 512, sigma_transform: bool = False) -> None:
    """Sample each mixture's density on a shared grid and write CSV.

    The grid spans the combined 4-sigma support of all mixtures.
    Zero-variance components degrade gracefully to explicit atom rows
    (kind "atom" with the weight in the value column).
    """
    if grid_points < 2:
        raise ValidationError("grid_points must be >= 2")
    mixtures = list(mixtures)
    if not mixtures:
        raise ValidationError("no mixtures to export")
    work = []
    for m in mixtures:
        if not isinstance(m, GaussianMixture1D):
            raise ValidationError("density export supports univariate mixtures only")
        stds = np.array([sigma_visual_transform(s) for s in m.stds]) if sigma_transform else m.stds
        work.append(GaussianMixture1D(weights=m.weights, means=m.means, stds=stds))
    lo = min(float(np.min(m.means - 4.0 * m.stds)) for m in work)
    hi = max(float(np.max(m.means + 4.0 * m.stds)) for m in work)
    if hi <= lo:
        lo, hi = lo - 1.0, hi + 1.0
    xs = np.linspace(lo, hi, grid_points)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mixture", "kind", "x", "value"])
        for idx, m in enumerate(work):
            smooth = m.stds > 0
            for w, mu in zip(m.weights[~smooth], m.means[~smooth]):
                writer.writerow([idx, "atom", repr(float(mu)), repr(float(w))])
            if np.any(smooth):
                dens = m.pdf(xs)
                for x, d in zip(xs, dens):
                    writer.writerow([idx, "density", repr(float(x)), repr(float(d))])


def export_mixtures_json(mixtures, path) -> None:
    payload = [json.loads(mixture_to_json(m)) for m in mixtures]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def export_report_json(report: DistortionReport, path, extra: dict | None = None) -> None:
    payload = report.to_dict()
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def export_pairs_csv(space: FiniteMetricSpace, embedded_distances: dict, path, alpha: float = 1.0) -> None:
    pairs = sorted((min(i, j), max(i, j)) for i, j in embedded_distances)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "original", "powered", "embedded"])
        for i, j in pairs:
            emb = embedded_distances.get((i, j), embedded_distances.get((j, i)))
            writer.writerow(
                [i, j, repr(space.d(i, j)), repr(space.d(i, j) ** alpha), repr(float(emb))]
            )


def export_history_csv(loss_history, lr_history, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "loss", "lr"])
        for it, (loss, lr) in enumerate(zip(loss_history, lr_history)):
            writer.writerow([it, repr(float(loss)), repr(float(lr))])


def export_pac_curve_csv(curve: PacCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["distortion", "fraction"])
        for d, f in zip(curve.distortions, curve.fractions):
            writer.writerow([repr(float(d)), repr(float(f))])


def export_matrix_csv(matrix: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in np.asarray(matrix, dtype=float):
            writer.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    return np.asarray(rows, dtype=float)
