"""Combinatorial graphs: generators, geodesic metrics, spectral radius."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError, ValidationError
from .metric import FiniteMetricSpace


@dataclass(frozen=True)
class GraphSpec:
    """A simple undirected graph as a vertex count plus an edge list."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValidationError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValidationError(f"edge ({u}, {v}) out of range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValidationError(f"duplicate edge ({u}, {v})")
            seen.add(key)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_vertices))
        for u, v in self.edges:
            a[u, v] = a[v, u] = 1.0
        return a

    def neighbors(self) -> list[list[int]]:
        adj = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj


def graph_geodesics(g: GraphSpec) -> FiniteMetricSpace:
    """All-pairs shortest-path (hop count) metric via BFS from each vertex."""
    n = g.n_vertices
    adj = g.neighbors()
    dist = np.full((n, n), -1.0)
    for s in range(n):
        dist[s, s] = 0.0
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if dist[s, v] < 0:
                    dist[s, v] = dist[s, u] + 1.0
                    q.append(v)
    if np.any(dist < 0):
        s, t = np.argwhere(dist < 0)[0]
        raise ValidationError(f"graph is disconnected: no path from {s} to {t}")
    return FiniteMetricSpace(dist=dist)


def gen_binary_tree(depth: int) -> GraphSpec:
    """Rooted full binary tree with 2**(depth+1) - 1 vertices.

    Vertices are numbered level by level; vertex v has children 2v+1
    and 2v+2.
    """
    if depth < 0:
        raise ValidationError("depth must be >= 0")
    n = 2 ** (depth + 1) - 1
    edges = [(v, 2 * v + 1) for v in range((n - 1) // 2)]
    edges += [(v, 2 * v + 2) for v in range((n - 1) // 2)]
    return GraphSpec(n_vertices=n, edges=tuple(sorted(edges)))


def gen_two_hop(kind: str, size: int, size2: int | None = None) -> GraphSpec:
    """Graphs whose geodesic diameter is at most 2.

    kind: "star" (hub plus `size` leaves), "wheel" (cycle of `size`
    plus hub), "complete_bipartite" (sides `size` and `size2`) or
    "friendship" (`size` triangles sharing one vertex). Diameter <= 2
    is verified on the constructed graph.
    """
    if size < 1 or (size2 is not None and size2 < 1):
        raise ValidationError("sizes must be >= 1")
    if kind == "star":
        g = GraphSpec(size + 1, tuple((0, i) for i in range(1, size + 1)))
    elif kind == "wheel":
        if size < 3:
            raise ValidationError("wheel rim needs >= 3 vertices")
        rim = [(i, i % size + 1) for i in range(1, size + 1)]
        spokes = [(0, i) for i in range(1, size + 1)]
        g = GraphSpec(size + 1, tuple(sorted(spokes + rim)))
    elif kind == "complete_bipartite":
        m = size2 if size2 is not None else size
        g = GraphSpec(size + m, tuple((i, size + j) for i in range(size) for j in range(m)))
    elif kind == "friendship":
        edges = []
        for t in range(size):
            a, b = 1 + 2 * t, 2 + 2 * t
            edges += [(0, a), (0, b), (a, b)]
        g = GraphSpec(2 * size + 1, tuple(edges))
    else:
        raise ValidationError(f"unknown two-hop kind {kind!r}")
    diam = graph_geodesics(g).dist.max()
    if diam > 2:
        raise ValidationError(f"{kind} with these parameters has diameter {diam:.0f} > 2")
    return g


def spectral_radius(g: GraphSpec, rtol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest absolute adjacency eigenvalue, by shifted power iteration.

    The adjacency matrix is symmetric and entrywise nonnegative, so its
    spectral radius equals its largest eigenvalue; iterating on
    A + (1 + maxdeg) I makes that eigenvalue strictly dominant.
    """
    a = g.adjacency()
    n = g.n_vertices
    if n == 0:
        raise ValidationError("graph must have at least one vertex")
    if not g.edges:
        return 0.0
    shift = 1.0 + a.sum(axis=1).max()
    b = a + shift * np.eye(n)
    x = np.ones(n) / np.sqrt(n)
    for _ in range(max_iter):
        y = b @ x
        lam = float(x @ y)
        # for symmetric b the Rayleigh quotient is within the residual
        # norm of a true eigenvalue
        if np.linalg.norm(y - lam * x) <= rtol * abs(lam):
            return lam - shift
        x = y / np.linalg.norm(y)
    raise NumericError("power iteration failed to converge")


def write_edge_list(g: GraphSpec, path) -> None:
    """One "u v" pair per line, 0-based vertex ids."""
    with open(path, "w") as fh:
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path) -> GraphSpec:
    edges = []
    n = 0
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValidationError(f"malformed edge line {line!r}")
            u, v = int(parts[0]), int(parts[1])
            edges.append((u, v))
            n = max(n, u + 1, v + 1)
    return GraphSpec(n_vertices=n, edges=tuple(edges))
