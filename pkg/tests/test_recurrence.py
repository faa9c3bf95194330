import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from mrstab.common.errors import BadT, TooLarge
from mrstab.common.graph_library import fixture_graphs, path_graph, cycle_graph
from mrstab.common.metric_graph import VertexSet, build_graph, shortest_path, path_from_vertices
from mrstab.common.profiles import is_bounded
from mrstab.estimators.recurrence import RecurrenceSample, RecurrenceProfile, Property5Profile, t_middle, \
    recurrence_constant, recurrence_oracle, recurrence_profile, sphere_detour, property5_constant, coverage
from mrstab.experiments.runner import axis_path
from mrstab.spaces.group_spec import GroupSpec, cayley_ball
from mrstab.spaces.tilings import tiling_graph, central_segment

T_VALUES = [Fraction(1, 4), Fraction(1, 3)]


@st.composite
def connected_graphs(draw, max_vertices=9):
    n = draw(st.integers(3, max_vertices))
    edges = {(draw(st.integers(0, v - 1)), v) for v in range(1, n)}
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=n))
    for u, v in extra:
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return build_graph(sorted(edges))


@pytest.fixture(scope='module')
def z2_ball():
    return cayley_ball(GroupSpec.parse('family=free_abelian k=2'), 24)


@pytest.fixture(scope='module')
def f2_ball():
    return cayley_ball(GroupSpec.parse('family=free k=2'), 8)


def fixture_path(g, max_length=4):
    ''' Geodesic from vertex 0 to the first vertex at distance min(max_length, eccentricity of 0) '''
    row = g.distance_matrix()[0]
    target = int((row == min(max_length, row.max())).argmax())
    return shortest_path(g, 0, target)


def test_t_middle():
    g = path_graph(9)
    p = shortest_path(g, 0, 8)
    assert t_middle(g, p, Fraction(1, 4)) == VertexSet([2, 3, 4, 5, 6])
    assert t_middle(g, p, Fraction(1, 3)) == VertexSet([3, 4, 5])
    assert t_middle(g, path_from_vertices(g, [3, 4, 3]), Fraction(1, 3)) == VertexSet()
    for t in [0, Fraction(1, 2), 1]:
        with pytest.raises(BadT):
            t_middle(g, p, t)


def test_recurrence_on_a_cycle():
    g = cycle_graph(8)
    sample = recurrence_constant(g, shortest_path(g, 0, 4), Fraction(1, 3), 5)
    assert sample.m_hat == 1
    assert sample.radius == 2
    assert sample.witness.verts == (0, 7, 6, 5, 4)


def test_unavoidable_middle_has_radius_zero():
    g = path_graph(9)
    sample = recurrence_constant(g, shortest_path(g, 0, 8), Fraction(1, 3), 5)
    assert sample.m_hat == 0
    assert not sample.avoidable
    assert sample.radius == 0


def test_slope_budget_below_one_is_rejected():
    g = cycle_graph(6)
    with pytest.raises(ValueError):
        recurrence_constant(g, shortest_path(g, 0, 3), Fraction(1, 3), Fraction(1, 2))


def test_estimator_matches_oracle_on_fixtures():
    checked = 0
    for name, g in fixture_graphs().items():
        p = fixture_path(g)
        if p.endpoint_dist < 2:
            continue
        for t in T_VALUES:
            for C in [2, 3]:
                assert recurrence_constant(g, p, t, C).m_hat == recurrence_oracle(g, p, t, C), (name, t, C)
        checked += 1
    assert checked >= 20


@settings(max_examples=40, deadline=None)
@given(connected_graphs())
def test_estimator_matches_oracle_on_random_graphs(g):
    p = shortest_path(g, 0, g.n_vertices - 1)
    for C in [2, 3]:
        assert recurrence_constant(g, p, Fraction(1, 3), C).m_hat == recurrence_oracle(g, p, Fraction(1, 3), C)


def test_oracle_refuses_large_graphs(f2_ball):
    p = axis_path(f2_ball, 4)
    with pytest.raises(TooLarge):
        recurrence_oracle(f2_ball, p)


def test_profile_is_monotone_on_fixtures():
    for name, g in fixture_graphs().items():
        p = fixture_path(g, max_length=6)
        profile = recurrence_profile(g, p, ts=T_VALUES, Cs=(1, 2, 3, 5))
        for t in T_VALUES:
            values = profile.values(t)
            assert values == sorted(values), name


def test_monotonicity_check_catches_a_drop():
    g = path_graph(2)
    p = path_from_vertices(g, [0, 1])
    profile = RecurrenceProfile()
    profile.add(RecurrenceSample(Fraction(1, 3), Fraction(2), (0, 1), 1, 3, p, True))
    profile.add(RecurrenceSample(Fraction(1, 3), Fraction(3), (0, 1), 1, 1, p, True))
    with pytest.raises(AssertionError):
        profile.check_monotone()


def test_tree_has_no_recurrence(f2_ball):
    p = axis_path(f2_ball, 12)
    profile = recurrence_profile(f2_ball, p, ts=T_VALUES, Cs=(2, 3, 5))
    assert profile.values() == [0] * 6
    rows = profile.to_frame()
    assert set(rows['quantity']) == {'m_hat(t=1/4)', 'm_hat(t=1/3)', 'recurrence_radius(t=1/4)',
                                     'recurrence_radius(t=1/3)'}


def test_flat_plane_recurrence_grows_with_length(z2_ball):
    short = recurrence_constant(z2_ball, axis_path(z2_ball, 12), Fraction(1, 3), 3)
    long = recurrence_constant(z2_ball, axis_path(z2_ball, 36), Fraction(1, 3), 3)
    # the detour has to climb above N_K(middle): height K + 1 on both sides
    assert short.m_hat == 3
    assert long.m_hat == 11
    assert long.m_hat >= 2 * short.m_hat


def test_hyperbolic_tiling_recurrence_stays_flat():
    g = tiling_graph(4, 5, 4)
    assert len(g.metadata['diameter']) - 1 >= 8
    values = []
    for length in [6, 8]:
        p = path_from_vertices(g, central_segment(g, length))
        values.append(recurrence_constant(g, p, Fraction(1, 3), 3).m_hat)
    assert is_bounded(values)


def test_sphere_detour_in_the_plane(z2_ball):
    p = axis_path(z2_ball, 8)
    q = sphere_detour(z2_ball, p, 4, 4)
    assert q.start == p.start and q.end == p.end
    assert q.arclength == 16
    with pytest.raises(ValueError):
        sphere_detour(z2_ball, p, 4, 5)


def test_sphere_detour_does_not_exist_in_a_tree(f2_ball):
    p = axis_path(f2_ball, 8)
    assert sphere_detour(f2_ball, p, 4, 2) is None


def test_property5_grows_linearly_in_the_plane(z2_ball):
    profile = Property5Profile(Fraction(1, 3), 3)
    for length in [8, 12, 16]:
        p = axis_path(z2_ball, length)
        result = property5_constant(z2_ball, p, 3)
        assert result.k_hat == length // 2
        profile.add(p.endpoint_dist, result, recurrence_constant(z2_ball, p, Fraction(1, 3), 3))
    verdicts = profile.verdicts()
    assert verdicts['property5'] == 'unbounded'
    assert verdicts['recurrence'] == 'unbounded'


def test_property5_vanishes_in_a_tree(f2_ball):
    result = property5_constant(f2_ball, axis_path(f2_ball, 8), 3)
    assert result.k_hat == 0
    assert result.candidates == 1


def test_property5_profile_needs_two_samples():
    assert Property5Profile().verdicts() == {'property5': 'inconclusive', 'recurrence': 'inconclusive'}


@pytest.fixture(scope='module')
def tiling45():
    return tiling_graph(4, 5, 6)


def test_property5_grows_while_recurrence_stays_flat_on_a_tiling(tiling45):
    k_hats, m_hats = [], []
    profile = Property5Profile(Fraction(1, 3), 3)
    for length in [2, 8, 22]:
        p = path_from_vertices(tiling45, central_segment(tiling45, length))
        result = property5_constant(tiling45, p, 3)
        sample = recurrence_constant(tiling45, p, Fraction(1, 3), 3)
        k_hats.append(result.k_hat)
        m_hats.append(sample.m_hat)
        if length >= 8:
            profile.add(p.endpoint_dist, result, sample)
    # a sphere detour of radius D fits the budget 3 * L only once L is exponential in D
    assert k_hats[0] == 1
    assert k_hats[-1] == 4
    assert k_hats == sorted(set(k_hats))
    assert max(m_hats) <= 2
    assert profile.verdicts() == {'property5': 'unbounded', 'recurrence': 'bounded'}


def test_sphere_detour_on_a_tiling_covers_its_radius(tiling45):
    p = path_from_vertices(tiling45, central_segment(tiling45, 8))
    for D in [1, 2, 3]:
        q = sphere_detour(tiling45, p, 4, D)
        assert q is not None
        assert coverage(tiling45, p, q) == D
    lengths = [sphere_detour(tiling45, p, 4, D).arclength for D in [1, 2, 3, 4]]
    assert lengths == sorted(set(lengths))
