"""Transport distances between Gaussian mixtures.

The mixture distance reduces to a balanced transportation problem over
pairwise component costs; it is solved exactly with the transportation
simplex so that optimal plans come with certified dual variables, which
in turn provide envelope-theorem gradients for training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ValidationError
from .gaussians import GaussianMixture1D, GaussianMixtureD, w2_gaussian_d

WEIGHT_TOL = 1e-10
FEASIBILITY_TOL = 1e-10
SLACKNESS_TOL = 1e-8
DUAL_FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling for a transportation problem.

    ``matrix`` is the I x J plan, ``value`` the optimal objective,
    ``dual_row``/``dual_col`` the certified dual potentials.
    """

    matrix: np.ndarray
    value: float
    dual_row: np.ndarray
    dual_col: np.ndarray

    def check(self, cost: np.ndarray, w1: np.ndarray, w2: np.ndarray) -> None:
        """Assert feasibility, value consistency and complementary slackness."""
        v = self.matrix
        if np.any(v < -FEASIBILITY_TOL):
            raise NumericError("negative entry in transport plan")
        if np.max(np.abs(v.sum(axis=1) - w1)) > FEASIBILITY_TOL:
            raise NumericError("transport plan violates row marginals")
        if np.max(np.abs(v.sum(axis=0) - w2)) > FEASIBILITY_TOL:
            raise NumericError("transport plan violates column marginals")
        if abs(float(np.sum(v * cost)) - self.value) > FEASIBILITY_TOL * (1.0 + abs(self.value)):
            raise NumericError("transport value inconsistent with plan")
        gap = self.dual_row[:, None] + self.dual_col[None, :] - cost
        if np.max(gap) > DUAL_FEASIBILITY_TOL:
            raise NumericError("dual potentials are infeasible")
        active = v > 1e-12
        if np.any(active) and np.max(np.abs(gap[active])) > SLACKNESS_TOL:
            raise NumericError("complementary slackness violated")


def _check_simplex(w, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValidationError(f"{name} must be a nonempty vector")
    if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ValidationError(f"{name} must be a probability vector")
    return w


def solve_transport(cost, w1, w2) -> TransportPlan:
    """Exact transportation simplex with certified duals.

    Starts from the northwest-corner basis and pivots with Bland's rule
    (first negative reduced cost in row-major order; lexicographically
    smallest leaving cell), which precludes cycling on degenerate
    instances.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValidationError("cost must be a matrix")
    if not np.all(np.isfinite(cost)):
        raise ValidationError("cost matrix must be finite")
    n_i, n_j = cost.shape
    w1 = _check_simplex(w1, "w1")
    w2 = _check_simplex(w2, "w2")
    if w1.size != n_i or w2.size != n_j:
        raise ValidationError("marginal lengths must match the cost shape")

    flow, row_adj, col_adj = _northwest_corner(w1, w2)
    cost_rows = cost.tolist()
    scale = 1.0 + float(np.abs(cost).max())
    enter_tol = 1e-12 * scale

    for _ in range(20000):
        u, v = _tree_duals(cost_rows, row_adj, col_adj, n_i, n_j)
        reduced = cost - np.asarray(u)[:, None] - np.asarray(v)[None, :]
        neg = (reduced < -enter_tol).ravel()
        first = int(neg.argmax())
        if not neg[first]:
            break
        # Bland's rule: argmax of the boolean mask is the first negative
        # reduced cost in row-major order.
        _pivot(flow, row_adj, col_adj, first // n_j, first % n_j)
    else:
        raise NumericError("transportation simplex did not converge")

    matrix = np.asarray(flow)
    value = float(np.sum(matrix * cost))
    plan = TransportPlan(
        matrix=matrix, value=value, dual_row=np.asarray(u), dual_col=np.asarray(v)
    )
    plan.check(cost, w1, w2)
    return plan


def _northwest_corner(w1, w2):
    n_i, n_j = w1.size, w2.size
    flow = [[0.0] * n_j for _ in range(n_i)]
    row_adj = [[] for _ in range(n_i)]
    col_adj = [[] for _ in range(n_j)]
    a = w1.tolist()
    b = w2.tolist()
    i = j = 0
    while True:
        t = a[i] if a[i] <= b[j] else b[j]
        flow[i][j] = t
        row_adj[i].append(j)
        col_adj[j].append(i)
        a[i] -= t
        b[j] -= t
        if i == n_i - 1 and j == n_j - 1:
            break
        if i == n_i - 1:
            j += 1
        elif j == n_j - 1:
            i += 1
        elif a[i] <= b[j]:
            i += 1
        else:
            j += 1
    return flow, row_adj, col_adj


def _tree_duals(cost_rows, row_adj, col_adj, n_i, n_j):
    # Basis cells form a spanning tree on rows + columns; fix u[0] = 0
    # and propagate u_i + v_j = cost_ij along the tree.
    u = [None] * n_i
    v = [None] * n_j
    u[0] = 0.0
    stack = [(0, True)]
    while stack:
        k, is_row = stack.pop()
        if is_row:
            uk = u[k]
            row = cost_rows[k]
            for j in row_adj[k]:
                if v[j] is None:
                    v[j] = row[j] - uk
                    stack.append((j, False))
        else:
            vk = v[k]
            for i in col_adj[k]:
                if u[i] is None:
                    u[i] = cost_rows[i][k] - vk
                    stack.append((i, True))
    if any(x is None for x in u) or any(x is None for x in v):
        raise NumericError("basis does not span all rows and columns")
    return u, v


def _pivot(flow, row_adj, col_adj, ei, ej):
    # The unique tree path from row ei to column ej plus the entering
    # cell closes the pivot cycle; odd cells lose theta.
    path = _tree_path(row_adj, col_adj, ei, ej)
    cycle = [(ei, ej)] + path
    minus = cycle[1::2]
    theta = min(flow[i][j] for i, j in minus)
    leaving = min(c for c in minus if flow[c[0]][c[1]] <= theta)
    sign = 1.0
    for i, j in cycle:
        flow[i][j] += sign * theta
        sign = -sign
    li, lj = leaving
    flow[li][lj] = 0.0
    row_adj[li].remove(lj)
    col_adj[lj].remove(li)
    row_adj[ei].append(ej)
    col_adj[ej].append(ei)


def _tree_path(row_adj, col_adj, src_row, dst_col):
    """Cells along the tree path from row node src_row to column node
    dst_col, ordered so that the first cell shares row src_row.

    Nodes are encoded as j for columns and -1 - i for rows."""
    goal = dst_col
    start = -1 - src_row
    parent = {start: None}
    stack = [start]
    found = False
    while stack:
        node = stack.pop()
        if node == goal:
            found = True
            break
        if node < 0:
            for j in row_adj[-1 - node]:
                if j not in parent:
                    parent[j] = node
                    stack.append(j)
        else:
            for i in col_adj[node]:
                enc = -1 - i
                if enc not in parent:
                    parent[enc] = node
                    stack.append(enc)
    if not found:
        raise NumericError("entering cell is not connected to the basis tree")
    cells = []
    node = goal
    while node != start:
        prev = parent[node]
        if prev < 0:
            cells.append((-1 - prev, node))
        else:
            cells.append((-1 - node, prev))
        node = prev
    cells.reverse()
    return cells


def _component_costs(p, q) -> np.ndarray:
    if isinstance(p, GaussianMixture1D) and isinstance(q, GaussianMixture1D):
        dm = p.means[:, None] - q.means[None, :]
        ds = p.stds[:, None] - q.stds[None, :]
        return dm * dm + ds * ds
    if isinstance(p, GaussianMixtureD) and isinstance(q, GaussianMixtureD):
        if p.dim != q.dim:
            raise ValidationError("mixtures must share a dimension")
        cost = np.empty((p.n_components, q.n_components))
        for i, ci in enumerate(p.components):
            for j, cj in enumerate(q.components):
                cost[i, j] = w2_gaussian_d(ci, cj) ** 2
        return cost
    raise ValidationError("mixtures must be of the same kind")


def mw2(p, q) -> tuple[float, TransportPlan]:
    """Mixture-Wasserstein distance and its optimal component coupling.

    The cost matrix holds squared closed-form W2 distances between the
    component Gaussians; the returned distance is the square root of
    the optimal transportation value.
    """
    cost = _component_costs(p, q)
    plan = solve_transport(cost, p.weights, q.weights)
    return float(np.sqrt(max(plan.value, 0.0))), plan


def w2_empirical_1d(atoms_a, atoms_b) -> float:
    """Exact W2 between finitely supported measures on the line.

    Uses the monotone (sorted quantile) coupling: merge the cumulative
    weight breakpoints of both sides and pair quantile segments.
    """
    wa, xa = _atom_arrays(atoms_a, "atoms_a")
    wb, xb = _atom_arrays(atoms_b, "atoms_b")
    ca = np.cumsum(wa)
    cb = np.cumsum(wb)
    levels = np.unique(np.concatenate([ca, cb, [0.0]]))
    levels = np.clip(levels, 0.0, 1.0)
    starts, ends = levels[:-1], levels[1:]
    mids = 0.5 * (starts + ends)
    qa = xa[np.minimum(np.searchsorted(ca, mids, side="left"), len(xa) - 1)]
    qb = xb[np.minimum(np.searchsorted(cb, mids, side="left"), len(xb) - 1)]
    return float(np.sqrt(np.sum((ends - starts) * (qa - qb) ** 2)))


def _atom_arrays(atoms, name):
    w = np.asarray([a[0] for a in atoms], dtype=float)
    x = np.asarray([a[1] for a in atoms], dtype=float)
    _check_simplex(w, f"{name} weights")
    if not np.all(np.isfinite(x)):
        raise ValidationError(f"{name} locations must be finite")
    order = np.argsort(x, kind="stable")
    return w[order], x[order]


def mixture_quantiles(p: GaussianMixture1D, t: np.ndarray, iters: int = 90) -> np.ndarray:
    """Left-continuous quantiles Q(t) = inf{x : F(x) >= t} by bisection."""
    t = np.asarray(t, dtype=float)
    spread = float(np.max(p.means + 12.0 * p.stds) - np.min(p.means - 12.0 * p.stds))
    lo = np.full(t.shape, float(np.min(p.means - 12.0 * p.stds)) - 1.0 - spread * 1e-3)
    hi = np.full(t.shape, float(np.max(p.means + 12.0 * p.stds)) + 1.0 + spread * 1e-3)
    if np.any(p.cdf(lo) >= t) or np.any(p.cdf(hi) < t):
        raise NumericError("quantile bisection bracket failed")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = p.cdf(mid) >= t
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return hi


def w2_mixture_1d_numeric(p: GaussianMixture1D, q: GaussianMixture1D, grid: int = 512) -> float:
    """Reference W2 between univariate mixtures via quantile quadrature.

    Midpoint rule on the unit interval applied to the squared quantile
    difference; the returned value is the square root of the integral.
    """
    if grid < 64:
        raise ValidationError("grid must be >= 64")
    t = (np.arange(grid) + 0.5) / grid
    qp = mixture_quantiles(p, t)
    qq = mixture_quantiles(q, t)
    return float(np.sqrt(np.mean((qp - qq) ** 2)))


@dataclass(frozen=True)
class MW2Gradients:
    """Envelope gradients of the squared mixture distance.

    Weight gradients are dual potentials with the gauge fixed by
    removing their marginal-weighted mean, making them orthogonal to
    the simplex normal.
    """

    means_p: np.ndarray
    stds_p: np.ndarray
    weights_p: np.ndarray
    means_q: np.ndarray
    stds_q: np.ndarray
    weights_q: np.ndarray


def mw2_gradients(p: GaussianMixture1D, q: GaussianMixture1D, plan: TransportPlan) -> MW2Gradients:
    """Differentiate the squared mixture distance through its optimal plan.

    The plan must be optimal for (p, q); feasibility and complementary
    slackness are re-checked and a stale plan is rejected.
    """
    cost = _component_costs(p, q)
    try:
        plan.check(cost, p.weights, q.weights)
    except NumericError as exc:
        raise ValidationError(f"plan is not optimal for these mixtures: {exc}") from exc
    v = plan.matrix
    row = v.sum(axis=1)
    col = v.sum(axis=0)
    d_means_p = 2.0 * (row * p.means - v @ q.means)
    d_stds_p = 2.0 * (row * p.stds - v @ q.stds)
    d_means_q = 2.0 * (col * q.means - v.T @ p.means)
    d_stds_q = 2.0 * (col * q.stds - v.T @ p.stds)
    d_w_p = plan.dual_row - float(p.weights @ plan.dual_row)
    d_w_q = plan.dual_col - float(q.weights @ plan.dual_col)
    return MW2Gradients(
        means_p=d_means_p,
        stds_p=d_stds_p,
        weights_p=d_w_p,
        means_q=d_means_q,
        stds_q=d_stds_q,
        weights_q=d_w_q,
    )


def plan_is_stable(plan: TransportPlan, cost, tol: float = 1e-6) -> bool:
    """True when the optimal basis is comfortably unique: all nonbasic
    reduced costs exceed tol and all positive flows exceed tol.

    Near-ties make the squared distance non-differentiable, so gradient
    checks skip unstable configurations.
    """
    cost = np.asarray(cost, dtype=float)
    reduced = cost - plan.dual_row[:, None] - plan.dual_col[None, :]
    v = plan.matrix
    nonbasic = v <= 1e-12
    if np.any(reduced[nonbasic] < tol):
        return False
    positive = v[v > 1e-12]
    return not (positive.size and positive.min() < tol)
