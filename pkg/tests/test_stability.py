import pytest
from fractions import Fraction

from mrstab.common.errors import NotGeodesic, TooLarge
from mrstab.common.graph_library import cycle_graph, balanced_tree, grid_graph, fixture_graphs
from mrstab.common.metric_graph import shortest_path, path_from_vertices, neighborhood, induced_subgraph
from mrstab.common.profiles import is_bounded
from mrstab.estimators.stability import QgParams, is_quasigeodesic, stability_constant, stability_profile, \
    middle_recurrence_bound_check
from mrstab.experiments.runner import axis_path
from mrstab.spaces.group_spec import GroupSpec, cayley_ball
from mrstab.spaces.tilings import tiling_graph, central_segment


@pytest.fixture(scope='module')
def z2_ball():
    return cayley_ball(GroupSpec.parse('family=free_abelian k=2'), 15)


@pytest.fixture(scope='module')
def tiling45():
    return tiling_graph(4, 5, 6)


def test_qg_params_validation():
    assert QgParams('3/2', 0).kappa == Fraction(3, 2)
    with pytest.raises(ValueError):
        QgParams(Fraction(1, 2), 0)
    with pytest.raises(ValueError):
        QgParams(1, -1)


def test_is_quasigeodesic():
    g = cycle_graph(6)
    assert is_quasigeodesic(g, [0, 1, 2, 3], QgParams(1, 0))
    assert not is_quasigeodesic(g, [0, 1, 0], QgParams(1, 0))
    assert is_quasigeodesic(g, [0, 1, 0], QgParams(1, 2))
    # consecutive vertices may be two apart
    assert is_quasigeodesic(g, [0, 2, 3], QgParams(2, 0))


def test_reference_path_must_be_geodesic():
    g = cycle_graph(6)
    with pytest.raises(NotGeodesic):
        stability_constant(g, path_from_vertices(g, [0, 1, 2, 3, 4]), QgParams(1, 0))


def test_exact_oracle_is_limited_to_small_graphs():
    ball = cayley_ball(GroupSpec.parse('family=free k=2'), 4)
    with pytest.raises(TooLarge):
        stability_constant(ball, axis_path(ball, 4), QgParams(1, 0), 'exact_oracle')


def test_unknown_mode():
    g = cycle_graph(6)
    with pytest.raises(NotImplementedError):
        stability_constant(g, shortest_path(g, 0, 3), QgParams(1, 0), 'sampling')


def test_other_geodesic_of_a_hexagon():
    g = cycle_graph(6)
    sample = stability_constant(g, shortest_path(g, 0, 3), QgParams(1, 0), 'exact_oracle')
    assert sample.d_hat == 1
    assert sample.witness == [0, 5, 4, 3]


def test_geodesics_in_trees_are_unique():
    g = balanced_tree(2, 4)
    sample = stability_constant(g, shortest_path(g, 15, 30), QgParams(1, 0), 'exact_oracle')
    assert sample.d_hat == 0
    ball = cayley_ball(GroupSpec.parse('family=free k=2'), 8)
    assert stability_constant(ball, axis_path(ball, 12), QgParams(1, 0)).d_hat == 0


def test_probe_and_exact_agree_on_a_cycle():
    g = cycle_graph(8)
    p = shortest_path(g, 0, 4)
    exact = stability_profile(g, p, kappas=(1, 2), mode='exact_oracle')
    probe = stability_profile(g, p, kappas=(1, 2), mode='probe')
    # the geodesic the other way round
    assert [s.d_hat for s in exact.samples] == [2, 2]
    assert [s.d_hat for s in probe.samples] == [2, 2]


def test_probe_is_a_lower_bound_of_exact():
    for name in ['grid_3x6', 'cycle_10_chords', 'theta_2_4_6', 'ladder_8']:
        g = fixture_graphs()[name]
        row = g.distance_matrix()[0]
        p = shortest_path(g, 0, int(row.argmax()))
        for q in [QgParams(1, 0), QgParams(1, 1)]:
            exact = stability_constant(g, p, q, 'exact_oracle')
            probe = stability_constant(g, p, q, 'probe')
            assert probe.d_hat <= exact.d_hat, name
            assert is_quasigeodesic(g, exact.witness, q)


def test_profile_grows_with_lambda():
    g = grid_graph(3, 6)
    p = shortest_path(g, 0, 5)
    profile = stability_profile(g, p, kappas=(1,), lambdas=(0, 1), mode='exact_oracle')
    d0, d1 = [s.d_hat for s in profile.samples]
    assert d0 <= d1
    assert set(profile.to_frame()['quantity']) == {'D_hat'}


def test_middle_recurrence_bound_on_a_cycle():
    g = cycle_graph(8)
    check = middle_recurrence_bound_check(g, shortest_path(g, 0, 4), 1)
    assert check['recurrence_radius'] == 2
    assert check['bound'] == 27
    assert check['holds']
    assert check['complete']


def test_middle_recurrence_bound_on_fixtures():
    for name in ['grid_3x6', 'cycle_10_chords', 'theta_2_4_6', 'ladder_8', 'tree_2_4', 'petersen']:
        g = fixture_graphs()[name]
        row = g.distance_matrix()[0]
        p = shortest_path(g, 0, int(row.argmax()))
        check = middle_recurrence_bound_check(g, p, 1)
        d = max(check['recurrence_radius'], 1)
        assert check['bound'] == 13 * d + 1, name
        assert check['complete'], name
        assert check['holds'], name
        assert is_quasigeodesic(g, check['witness'], QgParams(1, 1))


def test_probe_grows_linearly_in_the_plane(z2_ball):
    q = QgParams(3, 0)
    for length in [2, 6, 10]:
        sample = stability_constant(z2_ball, axis_path(z2_ball, length), q)
        # the L x L rectangle on the axis is certified; a detour of length at most 3 L stays within 3 L / 2 of p
        assert length <= sample.d_hat <= 3 * length / 2
        assert is_quasigeodesic(z2_ball, sample.witness, q)


def test_probe_stays_bounded_on_a_tiling(tiling45):
    d_hats = []
    for length in [6, 10, 14]:
        p = path_from_vertices(tiling45, central_segment(tiling45, length))
        d_hats.append(stability_constant(tiling45, p, QgParams(2, 0)).d_hat)
    assert is_bounded(d_hats)
    # the plane reaches length // 2 with the same parameters
    assert max(d_hats) < 14 // 2


def test_probe_against_exact_on_a_truncated_tiling(tiling45):
    segment = central_segment(tiling45, 6)
    sub, keep = induced_subgraph(tiling45, neighborhood(tiling45, segment, 1))
    assert sub.n_vertices <= 60
    p = path_from_vertices(sub, [keep.index(v) for v in segment])
    assert p.is_geodesic()
    for q in [QgParams(1, 1), QgParams('3/2', 0)]:
        exact = stability_constant(sub, p, q, 'exact_oracle')
        probe = stability_constant(sub, p, q, 'probe')
        assert exact.complete
        assert probe.d_hat <= exact.d_hat
        assert is_quasigeodesic(sub, exact.witness, q)
