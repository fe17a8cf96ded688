import numpy as np
import pytest
from scipy.sparse.csgraph import floyd_warshall

from mwembed.exceptions import ValidationError
from mwembed.graphs import (
    GraphSpec,
    gen_binary_tree,
    gen_two_hop,
    graph_geodesics,
    read_edge_list,
    spectral_radius,
    write_edge_list,
)

from conftest import random_connected_graph


class TestGraphSpec:
    def test_rejects_self_loop(self):
        with pytest.raises(ValidationError, match="self-loop"):
            GraphSpec(n_vertices=2, edges=((0, 0),))

    def test_rejects_duplicate_edges(self):
        with pytest.raises(ValidationError, match="duplicate"):
            GraphSpec(n_vertices=3, edges=((0, 1), (1, 0)))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError, match="out of range"):
            GraphSpec(n_vertices=2, edges=((0, 5),))


class TestGeodesics:
    def test_path_graph(self):
        space = graph_geodesics(GraphSpec(3, ((0, 1), (1, 2))))
        assert space.d(0, 2) == 2.0

    def test_complete_graph(self):
        edges = tuple((i, j) for i in range(4) for j in range(i + 1, 4))
        space = graph_geodesics(GraphSpec(4, edges))
        off = space.dist[~np.eye(4, dtype=bool)]
        assert np.all(off == 1.0)

    def test_depth_six_tree_diameter(self):
        g = gen_binary_tree(6)
        space = graph_geodesics(g)
        oracle = floyd_warshall(g.adjacency(), directed=False)
        assert np.array_equal(space.dist, oracle)
        assert space.dist.max() == 12.0

    def test_disconnected_graph_names_pair(self):
        with pytest.raises(ValidationError, match="no path"):
            graph_geodesics(GraphSpec(4, ((0, 1), (2, 3))))

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_floyd_warshall_oracle(self, seed):
        n = int(np.random.default_rng(seed).integers(5, 41))
        g = random_connected_graph(n, extra_edges=n // 2, seed=seed)
        space = graph_geodesics(g)
        oracle = floyd_warshall(g.adjacency(), directed=False)
        assert np.array_equal(space.dist, oracle)


class TestBinaryTree:
    def test_depth_zero(self):
        g = gen_binary_tree(0)
        assert g.n_vertices == 1 and len(g.edges) == 0

    def test_depth_one(self):
        g = gen_binary_tree(1)
        assert g.n_vertices == 3 and len(g.edges) == 2

    def test_depth_six_vertex_count(self):
        assert gen_binary_tree(6).n_vertices == 127

    def test_rejects_negative_depth(self):
        with pytest.raises(ValidationError):
            gen_binary_tree(-1)


class TestTwoHop:
    def test_star(self):
        g = gen_two_hop("star", 5)
        assert graph_geodesics(g).dist.max() == 2.0

    def test_wheel(self):
        g = gen_two_hop("wheel", 6)
        assert g.n_vertices == 7
        assert graph_geodesics(g).dist.max() == 2.0

    def test_complete_bipartite(self):
        g = gen_two_hop("complete_bipartite", 2, 3)
        assert graph_geodesics(g).dist.max() == 2.0

    def test_friendship(self):
        g = gen_two_hop("friendship", 3)
        assert graph_geodesics(g).dist.max() == 2.0

    @pytest.mark.parametrize(
        "kind,size,size2",
        [("star", 3, None), ("wheel", 5, None), ("complete_bipartite", 4, 2), ("friendship", 2, None)],
    )
    def test_diameter_never_exceeds_two(self, kind, size, size2):
        space = graph_geodesics(gen_two_hop(kind, size, size2))
        assert space.dist.max() <= 2.0

    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            gen_two_hop("cycle", 5)


class TestSpectralRadius:
    def test_star_k14(self):
        assert spectral_radius(gen_two_hop("star", 4)) == pytest.approx(2.0, abs=1e-9)

    def test_complete_bipartite_k23(self):
        rho = spectral_radius(gen_two_hop("complete_bipartite", 2, 3))
        assert rho == pytest.approx(np.sqrt(6.0), abs=1e-9)

    def test_single_edge(self):
        assert spectral_radius(GraphSpec(2, ((0, 1),))) == pytest.approx(1.0, abs=1e-12)

    def test_edgeless(self):
        assert spectral_radius(GraphSpec(1, ())) == 0.0

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_dense_eigensolver(self, seed):
        g = random_connected_graph(12, extra_edges=6, seed=seed)
        oracle = float(np.max(np.abs(np.linalg.eigvalsh(g.adjacency()))))
        assert spectral_radius(g) == pytest.approx(oracle, rel=1e-9)


class TestEdgeListIO:
    def test_round_trip(self, tmp_path):
        g = gen_two_hop("wheel", 5)
        path = tmp_path / "edges.txt"
        write_edge_list(g, path)
        back = read_edge_list(path)
        assert back.n_vertices == g.n_vertices
        assert set(back.edges) == set(g.edges)
