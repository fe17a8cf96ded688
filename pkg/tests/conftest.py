import numpy as np
import pytest

from mwembed.graphs import GraphSpec, graph_geodesics
from mwembed.metric import build_metric_space


def random_euclidean_space(n, dim=3, seed=0, scale=1.0):
    """Euclidean point-cloud metric; generic (no ties, no collinearity)."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, scale, size=(n, dim))
    dist = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(dist, 0.0)
    return build_metric_space(0.5 * (dist + dist.T))


def random_connected_graph(n, extra_edges, seed=0):
    """Random spanning tree plus extra random edges."""
    rng = np.random.default_rng(seed)
    edges = set()
    order = rng.permutation(n)
    for k in range(1, n):
        parent = order[rng.integers(0, k)]
        edges.add((min(order[k], parent), max(order[k], parent)))
    while len(edges) < min(n - 1 + extra_edges, n * (n - 1) // 2):
        u, v = rng.integers(0, n, size=2)
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return GraphSpec(n_vertices=n, edges=tuple(sorted(edges)))


def random_graph_space(n, extra_edges=3, seed=0):
    return graph_geodesics(random_connected_graph(n, extra_edges, seed))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
