import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import floyd_warshall
from ridecrypt.roadnet import (
    RoadNetwork,
    format_network,
    generate_grid_network,
    load_network,
    parse_network,
    rne_distance,
    rne_embed,
    save_network,
    shortest_path_distance,
)

vectors = st.lists(st.integers(0, 10_000), min_size=1, max_size=8)


class TestGridGeneration:
    def test_single_node_grid(self):
        net = generate_grid_network(1, 1, (1, 1), seed=0)
        assert net.num_nodes == 1
        assert net.edges == ()
        assert rne_embed(net, 0) == (0,) * net.dim

    def test_two_by_two_uniform_weights(self):
        net = generate_grid_network(2, 2, (5, 5), seed=3)
        assert net.num_nodes == 4
        assert len(net.edges) == 4
        assert all(w == 5 for _, _, w in net.edges)

    def test_deterministic_for_fixed_seed(self):
        a = generate_grid_network(3, 3, (1, 10), seed=42)
        b = generate_grid_network(3, 3, (1, 10), seed=42)
        assert a.edges == b.edges
        assert a.landmark_subsets == b.landmark_subsets

    def test_different_seeds_differ(self):
        a = generate_grid_network(3, 3, (1, 10), seed=1)
        b = generate_grid_network(3, 3, (1, 10), seed=2)
        assert a.edges != b.edges or a.landmark_subsets != b.landmark_subsets

    def test_empty_weight_range(self):
        with pytest.raises(ValueError):
            generate_grid_network(2, 2, (5, 4), seed=0)

    def test_degenerate_dimensions(self):
        with pytest.raises(ValueError):
            generate_grid_network(0, 3, (1, 1), seed=0)

    def test_landmarks_without_replacement_when_possible(self):
        net = generate_grid_network(4, 4, (1, 1), seed=7, landmarks=8)
        singles = [next(iter(s)) for s in net.landmark_subsets]
        assert len(set(singles)) == 8

    def test_small_graph_reuses_nodes_for_landmarks(self):
        net = generate_grid_network(1, 2, (1, 1), seed=7, landmarks=8)
        assert net.dim == 8


class TestNetworkValidation:
    def test_disconnected_rejected(self):
        with pytest.raises(ValueError, match="connected"):
            RoadNetwork(3, [(0, 1, 1)], [[0]])

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            RoadNetwork(2, [(0, 1, -1)], [[0]])

    def test_unknown_edge_endpoint(self):
        with pytest.raises(ValueError):
            RoadNetwork(2, [(0, 5, 1)], [[0]])

    def test_empty_landmark_subset(self):
        with pytest.raises(ValueError):
            RoadNetwork(2, [(0, 1, 1)], [[]])

    def test_no_subsets(self):
        with pytest.raises(ValueError):
            RoadNetwork(2, [(0, 1, 1)], [])


class TestShortestPaths:
    def test_distance_to_self_is_zero(self):
        net = generate_grid_network(3, 3, (1, 10), seed=11)
        for node in range(net.num_nodes):
            assert shortest_path_distance(net, node, node) == 0

    def test_single_edge(self):
        net = RoadNetwork(2, [(0, 1, 7)], [[0]])
        assert shortest_path_distance(net, 0, 1) == 7
        assert shortest_path_distance(net, 1, 0) == 7

    def test_all_pairs_agree_with_relaxation_oracle(self):
        net = generate_grid_network(5, 5, (1, 10), seed=42)
        oracle = floyd_warshall(net)
        for u in range(net.num_nodes):
            for v in range(net.num_nodes):
                assert shortest_path_distance(net, u, v) == oracle[u][v]

    def test_symmetry(self):
        net = generate_grid_network(4, 3, (1, 9), seed=5)
        for u, v in itertools.combinations(range(net.num_nodes), 2):
            assert shortest_path_distance(net, u, v) == shortest_path_distance(net, v, u)

    def test_unknown_node(self):
        net = RoadNetwork(2, [(0, 1, 7)], [[0]])
        with pytest.raises(ValueError):
            shortest_path_distance(net, 0, 9)


class TestEmbedding:
    def test_node_in_every_subset_embeds_to_zero(self):
        net = RoadNetwork(3, [(0, 1, 2), (1, 2, 3)], [[0, 1], [0, 2], [0]])
        assert rne_embed(net, 0) == (0, 0, 0)

    def test_singleton_subsets_give_exact_distances(self):
        net = generate_grid_network(2, 2, (5, 5), seed=1, landmarks=4)
        for node in range(net.num_nodes):
            embedded = rne_embed(net, node)
            for i, subset in enumerate(net.landmark_subsets):
                landmark = next(iter(subset))
                assert embedded[i] == shortest_path_distance(net, node, landmark)

    def test_multi_node_subset_takes_nearest(self):
        net = RoadNetwork(3, [(0, 1, 2), (1, 2, 3)], [[0, 2]])
        assert rne_embed(net, 1) == (2,)

    def test_embedding_deterministic(self):
        a = generate_grid_network(3, 3, (1, 10), seed=9)
        b = generate_grid_network(3, 3, (1, 10), seed=9)
        assert a.embedding_table() == b.embedding_table()

    @pytest.mark.parametrize("rows,cols", [(2, 2), (3, 3), (2, 5)])
    def test_contraction_against_true_distance(self, rows, cols):
        net = generate_grid_network(rows, cols, (1, 10), seed=rows * 31 + cols)
        table = net.embedding_table()
        for u in range(net.num_nodes):
            for v in range(net.num_nodes):
                assert rne_distance(table[u], table[v]) <= shortest_path_distance(
                    net, u, v
                )


class TestRneDistance:
    def test_identical_vectors(self):
        assert rne_distance((4, 2, 9), (4, 2, 9)) == 0

    def test_hand_example(self):
        assert rne_distance((1, 5), (4, 3)) == 3

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            rne_distance((1, 2), (1, 2, 3))

    @given(vectors, vectors)
    def test_symmetry(self, a, b):
        if len(a) != len(b):
            b = (b * len(a))[: len(a)]
        assert rne_distance(a, b) == rne_distance(b, a)

    @given(st.data())
    def test_triangle_inequality(self, data):
        dim = data.draw(st.integers(1, 6))
        coord = st.integers(0, 1000)
        point = st.lists(coord, min_size=dim, max_size=dim)
        a, b, c = data.draw(point), data.draw(point), data.draw(point)
        assert rne_distance(a, c) <= rne_distance(a, b) + rne_distance(b, c)


class TestNetworkFileFormat:
    def test_round_trip(self, tmp_path):
        net = generate_grid_network(3, 2, (1, 6), seed=8, landmarks=3)
        path = tmp_path / "net.txt"
        save_network(net, path)
        loaded = load_network(path)
        assert loaded.num_nodes == net.num_nodes
        assert sorted(loaded.edges) == sorted(net.edges)
        assert loaded.landmark_subsets == net.landmark_subsets
        assert loaded.embedding_table() == net.embedding_table()

    def test_parse_explicit_text(self):
        net = parse_network("3 2\n0 1 4\n1 2 5\n0\n2\n")
        assert net.num_nodes == 3
        assert net.dim == 2
        assert rne_embed(net, 1) == (4, 5)

    def test_malformed_header(self):
        with pytest.raises(ValueError):
            parse_network("3\n0 1 4\n0\n")

    def test_missing_edges(self):
        with pytest.raises(ValueError):
            parse_network("3 5\n0 1 4\n0\n")

    def test_missing_subsets(self):
        with pytest.raises(ValueError):
            parse_network("2 1\n0 1 4\n")

    def test_format_matches_parse(self):
        text = format_network(generate_grid_network(2, 2, (1, 3), seed=2, landmarks=2))
        assert parse_network(text).num_nodes == 4
