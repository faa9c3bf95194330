import pytest
import numpy as np
from fractions import Fraction

from mrstab.common.errors import EmptySet, HypothesisViolated
from mrstab.common.graph_library import fixture_graphs
from mrstab.common.metric_graph import VertexSet, shortest_path, path_from_vertices, shortest_path_avoiding, dist_to_set
from mrstab.common.profiles import SampledFunction, sublinear_envelope
from mrstab.estimators.contraction import ContractionProfile, projection, contraction_profile, \
    verify_contract_lemma, contraction_chain_check
from mrstab.experiments.runner import axis_path
from mrstab.spaces.group_spec import GroupSpec, cayley_ball
from mrstab.spaces.tilings import tiling_graph, central_segment


@pytest.fixture(scope='module')
def tree():
    ball = cayley_ball(GroupSpec.parse('family=free k=2'), 5)
    return ball, axis_path(ball, 6)


@pytest.fixture(scope='module')
def plane():
    ball = cayley_ball(GroupSpec.parse('family=free_abelian k=2'), 8)
    return ball, axis_path(ball, 10)


def z2_label(x, y):
    word = ('a' * x if x > 0 else 'A' * -x) + ('b' * y if y > 0 else 'B' * -y)
    return word or '1'


def labels(g, vertices):
    return {g.label(v) for v in vertices}


def test_projection(tree, plane):
    ball, p = tree
    assert labels(ball, projection(ball, p.verts, ball.vertex_of('bbb'))) == {'1', 'a', 'A'}
    ball, p = plane
    assert labels(ball, projection(ball, p.verts, ball.vertex_of('bb'))) == {'A', '1', 'a'}
    assert labels(ball, projection(ball, p.verts, ball.vertex_of('bb'), eps=0)) == {'1'}
    with pytest.raises(EmptySet):
        projection(ball, [], 0)


def test_sublinear_envelope():
    assert sublinear_envelope([1, 2, 3], [1, 4, 3]) == [2, 4, 3]
    envelope = sublinear_envelope([1, 2, 3, 4], [3, 1, 2, 2])
    ratios = [Fraction(v) / r for v, r in zip(envelope, [1, 2, 3, 4])]
    assert ratios == sorted(ratios, reverse=True)


def test_tree_contraction_is_bounded(tree):
    ball, p = tree
    profile = contraction_profile(ball, p.verts)
    assert profile.radii == [1, 2, 3, 4, 5]
    assert all(v <= 2 for v in profile.rho_hat)
    assert profile.verdict == 'sublinear'


def test_flat_plane_contraction_is_linear(plane):
    ball, p = plane
    profile = contraction_profile(ball, p.verts, margin=4)
    assert profile.radii == [1, 2, 3, 4]
    for r, v in zip(profile.radii, profile.rho_hat):
        if r >= 3:
            assert v >= r - 1
    frame = profile.contraction_frame()
    assert list(frame.columns) == ['r', 'rho_hat', 'rho_bar']
    assert list(frame['r']) == [1, 2, 3, 4]


def test_contraction_profile_of_everything_is_empty(tree):
    ball, _ = tree
    profile = contraction_profile(ball, range(ball.n_vertices))
    assert profile.radii == []
    assert profile.verdict == 'inconclusive'
    assert len(profile.to_frame()) == 0


def test_contraction_lemma_in_the_plane(plane):
    ball, gamma = plane
    rho = contraction_profile(ball, gamma.verts, margin=4).envelope()
    reports = []
    for K in [1, 2, 3]:
        for x1 in range(-5, 6):
            for x2 in range(x1 + 1, 6):
                h = shortest_path(ball, ball.vertex_of(z2_label(x1, K)), ball.vertex_of(z2_label(x2, K)))
                reports.append(verify_contract_lemma(ball, gamma.verts, h, rho))
    assert len(reports) >= 50
    assert all(r.holds for r in reports)
    assert all(r.properties_hold for r in reports)
    assert all(r.radii_covered for r in reports)
    assert not any(r.degenerate for r in reports)


def test_contraction_lemma_pieces(plane):
    ball, gamma = plane
    rho = contraction_profile(ball, gamma.verts, margin=4).envelope()
    h = shortest_path(ball, ball.vertex_of(z2_label(-5, 2)), ball.vertex_of(z2_label(5, 2)))
    report = verify_contract_lemma(ball, gamma.verts, h, rho)
    assert report.K == 2
    # greedy pieces of length r_i = 2 along a horizontal line
    assert report.pieces == [(0, 2, 2), (2, 4, 2), (4, 6, 2), (6, 8, 2), (8, 10, 2)]
    assert report.radii == [2] * 5
    assert report.chain_holds


def lemma_triples(g, gamma, ks, limit=40):
    """
    Lemma reports for arcs joining two vertices at distance K from gamma outside N_{K-1}(gamma), plus one
    out-and-back walk per such vertex. rho is the envelope of the full-graph contraction profile.
    :return: list of (K, LemmaReport)
    """
    rho = contraction_profile(g, gamma).envelope()
    to_gamma = dist_to_set(g, gamma)
    triples = []
    for K in ks:
        ends = np.flatnonzero(to_gamma == K).tolist()
        blocked = to_gamma < K
        arcs = []
        for i, u in enumerate(ends):
            arcs += [h for h in (shortest_path_avoiding(g, u, v, blocked) for v in ends[i + 1:]) if h is not None]
            outward = [w for w in g.neighbors(u) if to_gamma[w] == K + 1]
            if outward:
                arcs.append(path_from_vertices(g, [u, outward[0], u]))
        triples += [(K, verify_contract_lemma(g, gamma, h, rho)) for h in arcs[:limit]]
    return triples


def test_contraction_lemma_on_trees():
    for name in ['tree_2_4', 'tree_3_3']:
        g = fixture_graphs()[name]
        leaf = g.n_vertices - 1
        gamma = shortest_path(g, leaf, int(g.distance_matrix()[leaf].argmax())).verts
        triples = lemma_triples(g, gamma, [1, 2])
        assert triples, name
        for K, report in triples:
            # an arc that never comes back within K - 1 of gamma returns to where it left
            assert report.degenerate
            assert report.holds and report.chain_holds and report.properties_hold
            assert min(report.radii) >= K


def test_contraction_lemma_on_a_tiling():
    g = tiling_graph(4, 5, 3)
    gamma = central_segment(g, 4)
    triples = lemma_triples(g, gamma, [1, 2])
    assert any(not report.degenerate for _, report in triples)
    for K, report in triples:
        assert report.K == K
        assert report.radii_covered
        assert report.properties_hold
        assert report.chain_holds
        assert report.holds
        assert min(report.radii) >= K


def test_contraction_lemma_beside_the_b_axis_of_f2():
    ball = cayley_ball(GroupSpec.parse('family=free k=2'), 5)
    gamma = [ball.vertex_of(v) for v in ['BBB', 'BB', 'B', '1', 'b', 'bb', 'bbb']]
    arc = ['aa', 'aab', 'aabb', 'aab', 'aa', 'aaa', 'aaaa', 'aaa', 'aa']
    h = path_from_vertices(ball, [ball.vertex_of(v) for v in arc])
    report = verify_contract_lemma(ball, gamma, h, SampledFunction.constant(2, 5))
    assert report.K == 2
    assert report.lhs == 1
    # every vertex of the arc is within 2 of aa, so the greedy cut is a single piece
    assert report.pieces == [(0, 8, 2)]
    assert report.holds and report.properties_hold and report.radii_covered
    assert report.degenerate


def test_closed_paths_in_a_tree_are_degenerate(tree):
    ball, gamma = tree
    rho = SampledFunction.constant(2, 5)
    for u, child in [('bb', 'bbb'), ('B', 'BB'), ('ab', 'abb'), ('Ab', 'Abb'), ('bbb', 'bbba')]:
        h = path_from_vertices(ball, [ball.vertex_of(u), ball.vertex_of(child), ball.vertex_of(u)])
        report = verify_contract_lemma(ball, gamma.verts, h, rho)
        assert report.degenerate
        assert report.holds
        assert report.properties_hold


def test_contraction_lemma_hypotheses(tree):
    ball, gamma = tree
    rho = SampledFunction.constant(2, 5)
    dipping = path_from_vertices(ball, [ball.vertex_of(v) for v in ['b', '1', 'B']])
    with pytest.raises(HypothesisViolated):
        verify_contract_lemma(ball, gamma.verts, dipping, rho)
    uneven = path_from_vertices(ball, [ball.vertex_of(v) for v in ['b', 'bb']])
    with pytest.raises(HypothesisViolated):
        verify_contract_lemma(ball, gamma.verts, uneven, rho)
    on_gamma = path_from_vertices(ball, [ball.vertex_of(v) for v in ['1', 'a']])
    with pytest.raises(HypothesisViolated):
        verify_contract_lemma(ball, gamma.verts, on_gamma, rho)


def test_chain_check():
    rho = SampledFunction.constant(2, 10)
    short = contraction_chain_check(rho, Fraction(1, 3), 1, 0, 3, 72)
    assert short['K'] == 1
    assert not short['applicable']
    long = contraction_chain_check(rho, Fraction(1, 3), 1, 0, 3, 720)
    assert long['K'] == 10
    assert long['ratio'] == Fraction(1, 5)
    assert long['threshold'] == Fraction(1, 48)
    assert long['applicable'] and long['holds']


def test_empty_contraction_profile_rows():
    profile = ContractionProfile(eps=1, name='contraction_empty')
    assert profile.rows() == []
    assert profile.contraction_frame().empty
