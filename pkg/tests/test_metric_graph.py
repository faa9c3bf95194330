import pytest
import numpy as np
import networkx as nx
from hypothesis import given, settings, strategies as st

from mrstab.common.errors import SelfLoop, DuplicateEdge, DisconnectedGraph, InvalidVertex, EmptySet, \
    ZeroDisplacement, TooLarge
from mrstab.common.graph_library import fixture_graphs, cycle_graph, path_graph, balanced_tree, grid_graph
from mrstab.common.metric_graph import VertexSet, build_graph, to_networkx, shortest_path, shortest_path_avoiding, \
    path_from_vertices, hausdorff, neighborhood, slope, delta_fourpoint, to_adjacency_text, from_adjacency_text, \
    induced_subgraph, diameter, dist_from


@st.composite
def connected_graphs(draw, max_vertices=12):
    ''' Random spanning tree plus a handful of extra edges '''
    n = draw(st.integers(2, max_vertices))
    edges = {(draw(st.integers(0, v - 1)), v) for v in range(1, n)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    for u, v in extra:
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return build_graph(sorted(edges))


@pytest.fixture
def cycle6():
    return cycle_graph(6)


def test_dist_from():
    assert list(dist_from(path_graph(5), 2)) == [2, 1, 0, 1, 2]
    assert list(dist_from(cycle_graph(6), 0)) == [0, 1, 2, 3, 2, 1]
    with pytest.raises(InvalidVertex):
        dist_from(path_graph(5), 5)


def test_fixture_set_is_small():
    graphs = fixture_graphs()
    assert len(graphs) >= 20
    assert all(g.n_vertices <= 60 for g in graphs.values())


def test_distances_match_networkx_on_fixtures():
    for name, g in fixture_graphs().items():
        expected = dict(nx.all_pairs_shortest_path_length(to_networkx(g)))
        dm = g.distance_matrix()
        for u in range(g.n_vertices):
            for v in range(g.n_vertices):
                assert dm[u, v] == expected[u][v], name


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_distance_is_a_metric(g):
    dm = g.distance_matrix().astype(np.int64)
    assert np.array_equal(dm, dm.T)
    assert np.all(np.diag(dm) == 0)
    assert np.all(dm[~np.eye(g.n_vertices, dtype=bool)] >= 1)
    # d(u, w) <= d(u, v) + d(v, w) for every triple
    assert np.all(dm[:, None, :] <= dm[:, :, None] + dm[None, :, :])


@settings(max_examples=60, deadline=None)
@given(connected_graphs())
def test_shortest_path_is_geodesic(g):
    p = shortest_path(g, 0, g.n_vertices - 1)
    assert p.is_geodesic()
    assert path_from_vertices(g, p.verts).arclength == g.distance_matrix()[0, g.n_vertices - 1]


def test_build_graph_rejects_bad_edge_lists():
    with pytest.raises(SelfLoop):
        build_graph([(0, 1), (1, 1)])
    with pytest.raises(DuplicateEdge):
        build_graph([(0, 1), (1, 0)])
    with pytest.raises(DisconnectedGraph):
        build_graph([(0, 1), (2, 3)])
    with pytest.raises(InvalidVertex):
        build_graph([(-1, 0)])
    with pytest.raises(InvalidVertex):
        cycle_graph(4).check_vertex(4)


def test_shortest_path_is_lexicographically_least(cycle6):
    assert shortest_path(cycle6, 0, 3).verts == (0, 1, 2, 3)


def test_shortest_path_avoiding(cycle6):
    blocked = np.zeros(6, dtype=bool)
    blocked[1] = True
    assert shortest_path_avoiding(cycle6, 0, 3, blocked).verts == (0, 5, 4, 3)
    blocked[5] = True
    assert shortest_path_avoiding(cycle6, 0, 3, blocked) is None
    assert shortest_path_avoiding(cycle6, 1, 3, blocked) is None


def test_path_from_vertices_checks_adjacency(cycle6):
    with pytest.raises(ValueError):
        path_from_vertices(cycle6, [0, 2])


def test_hausdorff_and_neighborhood(cycle6):
    assert hausdorff(cycle6, [0], [3]) == 3
    assert hausdorff(cycle6, [0, 1, 2, 3], [0, 5, 4, 3]) == 1
    assert neighborhood(path_graph(9), [4], 2) == VertexSet([2, 3, 4, 5, 6])
    with pytest.raises(EmptySet):
        neighborhood(cycle6, [], 1)
    with pytest.raises(EmptySet):
        hausdorff(cycle6, [], [0])


def test_slope(cycle6):
    assert slope(path_from_vertices(cycle6, [0, 1, 2])) == 1
    assert slope(path_from_vertices(cycle6, [0, 1, 2, 3, 4])) == 2
    with pytest.raises(ZeroDisplacement):
        slope(path_from_vertices(cycle6, [0, 1, 0]))


def test_fourpoint_delta_of_trees_is_zero():
    for g in [balanced_tree(2, 4), balanced_tree(3, 3), path_graph(9)]:
        assert delta_fourpoint(g, 10 ** 5) == 0


def test_fourpoint_delta_of_a_square():
    # pair sums 2, 2, 4
    assert delta_fourpoint(cycle_graph(4), 10) == 1


def test_sampled_fourpoint_is_a_seeded_lower_bound():
    g = grid_graph(5, 5)
    exact = delta_fourpoint(g, 10 ** 5)
    sampled = delta_fourpoint(g, 500, seed=3, exhaustive=False)
    assert 0 <= sampled <= exact
    assert sampled == delta_fourpoint(g, 500, seed=3, exhaustive=False)


def test_fourpoint_delta_sees_explicit_corners():
    g = grid_graph(5, 5)
    # corners of the 4 x 4 square: pair sums 8, 8, 16
    assert delta_fourpoint(g, 1, exhaustive=False, quads=[(0, 4, 24, 20)]) == 4
    with pytest.raises(InvalidVertex):
        delta_fourpoint(g, 1, quads=[(0, 4, 24, 25)])


def test_adjacency_text_roundtrip_on_fixtures():
    for name, g in fixture_graphs().items():
        text = to_adjacency_text(g)
        back = from_adjacency_text(text)
        assert back == g, name
        assert back.graph_id == g.graph_id
        assert to_adjacency_text(back) == text


def test_adjacency_text_rejects_garbage():
    with pytest.raises(ValueError):
        from_adjacency_text('0 1\n')
    with pytest.raises(ValueError):
        from_adjacency_text('')


def test_induced_subgraph_renumbers():
    sub, keep = induced_subgraph(path_graph(9), [4, 2, 3])
    assert keep == VertexSet([2, 3, 4])
    assert sub.n_vertices == 3
    assert sub.labels == ('2', '3', '4')
    assert diameter(sub) == 2


def test_distance_matrix_limit():
    g = path_graph(9)
    g.distance_matrix_limit = 5
    with pytest.raises(TooLarge):
        g.distance_matrix()
    assert diameter(g) == 8
