from mrstab.common.errors import MarginViolation
from mrstab.common.metric_graph import shortest_path, delta_fourpoint
from mrstab.common.profiles import Verdicts, is_stable
from mrstab.estimators.base_estimator import Profile, Deadline
from mrstab.estimators.recurrence import DEFAULT_T, recurrence_constant
from mrstab.spaces.group_spec import GroupSpec, CONSTRUCTION_VERSION, DEFAULT_VERTEX_CAP, cayley_ball
from mrstab.spaces.orbits import orbit_map, orbit_path, max_subgroup_radius, distortion_profile
from mrstab.spaces.relhyp import PeripheralStructure, cone_off, cusp_space, peripheral_diam, flat_corner_quads

import numpy as np

TARGETS = ['cusp', 'cone']


def build_graph_cached(cache, kind, params, build):
    ''' build() directly, or through a graph cache keyed by (kind, params, construction version) '''
    if cache is None:
        return build()
    return cache.fetch(kind, {**params, 'version': CONSTRUCTION_VERSION}, build)


def relhyp_spaces(spec, peripherals, R, cache=None, vertex_cap=DEFAULT_VERTEX_CAP, N_max=None):
    """
    Ball of radius R, its peripheral structure, and the coned-off and cusped graphs built on it.
    :return: (ball, PeripheralStructure, cone MetricGraph, cusp MetricGraph)
    """
    params = {'spec': str(spec), 'radius': R}
    ball = build_graph_cached(cache, 'cayley_ball', params, lambda: cayley_ball(spec, R, vertex_cap))
    ps = PeripheralStructure(ball, peripherals, spec)
    params = {**params, 'peripherals': ps.symbols}
    cone = build_graph_cached(cache, 'cone', params, lambda: cone_off(ball, ps).graph)
    cusp = build_graph_cached(cache, 'cusp', {**params, 'N_max': N_max}, lambda: cusp_space(ball, ps, N_max).graph)
    return ball, ps, cone, cusp


def subgroup_radius(ps, h_gens, R, margin=None):
    ''' Largest H-ball radius that fits the margin; MarginViolation when not even the 1-ball fits '''
    lengths = [len(ps.oracle.normal_form(ps.alphabet.parse(h))) for h in h_gens]
    R_H = max_subgroup_radius(R, lengths, margin)
    if R_H < 1:
        raise MarginViolation(f'No H-ball of positive radius fits a ball of radius {R} with generators of '
                              f'lengths {lengths}; use a larger ball')
    return R_H


def far_geodesic(domain):
    ''' Lexicographically first pair of H-ball vertices at maximal distance, with the geodesic between them '''
    dm = domain.distance_matrix()
    u, v = divmod(int(np.argmax(dm)), domain.n_vertices)
    return shortest_path(domain, u, v)


def _series_verdict(values, positive, negative):
    if len(values) < Verdicts.STABLE_WINDOW:
        return 'inconclusive'
    return positive if is_stable(values) else negative


class CriterionReport(Profile):
    """
    Per ambient radius R: recurrence of an H-geodesic inside G, distortion of the orbit map into the cusped and the
    coned-off graph at the largest H-radius, the largest peripheral diameter of the orbit, and four-point deltas of
    the ball and the cusped ball over random 4-tuples and the corners of flat peripheral rectangles.
    Verdicts, each over the top radii:
      stable_in_G: m_hat bounded
      cusp_undistorted: kappa_hat into the cusped graph stable
      cone_undistorted_bounded: kappa_hat into the coned graph stable and max peripheral diameter bounded
    """
    QUANTITIES = ['m_hat', 'cusp_kappa_hat', 'cone_kappa_hat', 'max_peripheral_diam', 'delta_ball', 'delta_cusp']

    def __init__(self, spec, peripherals, h_gens, hypothesis_flags, complete=True):
        super(CriterionReport, self).__init__('criterion', complete)
        self.spec = spec
        self.peripherals = peripherals
        self.h_gens = h_gens
        self.hypothesis_flags = hypothesis_flags
        self.records = []
        self.diam_tables = {}

    def add(self, record, witness):
        record['witness_id'] = self.add_witness(witness)
        self.records.append(record)

    def series(self, quantity):
        return [r[quantity] for r in self.records]

    @property
    def theorem_applies(self):
        return all(self.hypothesis_flags)

    def verdict_triple(self):
        stable = _series_verdict(self.series('m_hat'), 'bounded', 'unbounded')
        cusp = _series_verdict(self.series('cusp_kappa_hat'), 'undistorted', 'distorted')
        cone = _series_verdict(self.series('cone_kappa_hat'), 'undistorted', 'distorted')
        diam = _series_verdict(self.series('max_peripheral_diam'), 'bounded', 'unbounded')
        if 'inconclusive' in (cone, diam):
            cone_and_diam = 'inconclusive'
        else:
            cone_and_diam = 'undistorted' if cone == 'undistorted' and diam == 'bounded' else 'distorted'
        return stable, cusp, cone_and_diam

    def verdicts(self):
        triple = self.verdict_triple()
        conclusive = 'inconclusive' not in triple
        positive = [v in Verdicts.POSITIVE for v in triple]
        agree = conclusive and len(set(positive)) == 1
        return {'stable_in_G': triple[0], 'cusp_undistorted': triple[1], 'cone_undistorted_bounded': triple[2],
                'agree': agree if conclusive else None, 'theorem_applies': self.theorem_applies,
                'hypothesis_flags': list(self.hypothesis_flags),
                'failure': bool(conclusive and self.theorem_applies and not agree),
                'thresholds_version': Verdicts.THRESHOLDS_VERSION}

    def rows(self):
        return [{'quantity': q, 'param_1': r['R'], 'param_2': r['R_H'], 'value': r[q], 'witness_id': r['witness_id']}
                for q in self.QUANTITIES for r in self.records]


def criterion_runner(spec, peripherals, h_gens, radii, t=DEFAULT_T, C=3, margin=None, delta_samples=2000, seed=0,
                     cache=None, vertex_cap=DEFAULT_VERTEX_CAP, deadline=None, progress=None):
    """
    Empirical three-way stability criterion for a subgroup H of a relatively hyperbolic pair (G, P).
    :param spec: GroupSpec or its text form
    :param peripherals: generator subsets, one string per peripheral subgroup
    :param h_gens: generators of H as word strings
    :param radii: increasing ambient radii
    :param cache: optional graph cache with a fetch(kind, params, build) method
    :param progress: optional callable invoked once per finished radius
    :return: CriterionReport
    """
    if not radii:
        raise ValueError('criterion_runner needs at least one radius')
    spec = spec if isinstance(spec, GroupSpec) else GroupSpec.parse(spec)
    deadline = Deadline.coerce(deadline)
    report = None
    for R in radii:
        if report is not None and deadline.expired():
            report.complete = False
            break
        ball, ps, cone, cusp = relhyp_spaces(spec, peripherals, R, cache, vertex_cap)
        if report is None:
            report = CriterionReport(str(spec), ps.symbols, list(h_gens), ps.hypothesis_flags)
        R_H = subgroup_radius(ps, h_gens, R, margin)
        m_G = orbit_map(ball, h_gens, R_H, spec, margin)
        path = orbit_path(m_G, far_geodesic(m_G.domain))
        recurrence = recurrence_constant(ball, path, t, C, deadline=deadline)
        kappas = {}
        for name, target in [('cusp', cusp), ('cone', cone)]:
            kappas[name] = distortion_profile(orbit_map(target, h_gens, R_H, spec, margin), [R_H]).kappas[0]
        diam = peripheral_diam(ball, ps, m_G.image_set())
        corners = flat_corner_quads(ps, delta_samples)
        report.diam_tables[R] = diam
        deltas = {name: delta_fourpoint(space, delta_samples, seed, quads=corners)
                  for name, space in [('ball', ball), ('cusp', cusp)]}
        report.add({'R': R, 'R_H': R_H, 'm_hat': recurrence.m_hat, 'cusp_kappa_hat': kappas['cusp'],
                    'cone_kappa_hat': kappas['cone'], 'max_peripheral_diam': diam.max_diam,
                    'delta_ball': deltas['ball'], 'delta_cusp': deltas['cusp']}, recurrence.witness.verts)
        report.complete = report.complete and recurrence.complete
        if progress is not None:
            progress()
    return report


class PullbackReport(Profile):
    """
    Recurrence of H-geodesic images in a target space X, pulled back to G through the orbit map.
    Per radius: image m_hat and recurrence radius M_X, the properness constant M (largest d_G between an orbit point
    and a ball vertex within M_X of it in X), the bound M - 1 on m_hat in G that these give, and the m_hat of the
    same H-geodesic's image in G measured directly.
    A budget path in G that meets N_{M_X} of the middle in X meets N_M of it in G, so the measured m_hat may not
    exceed the bound; any radius where it does is a failure.
    """
    QUANTITIES = ['image_m_hat', 'image_radius', 'properness_M', 'pulled_bound', 'pulled_m_hat']

    def __init__(self, target, complete=True):
        super(PullbackReport, self).__init__('pullback', complete)
        self.target = target
        self.records = []

    def add(self, record, witness):
        record['witness_id'] = self.add_witness(witness)
        self.records.append(record)

    def series(self, quantity):
        return [r[quantity] for r in self.records]

    def verdicts(self):
        image = _series_verdict(self.series('image_m_hat'), 'bounded', 'unbounded')
        pulled = _series_verdict(self.series('pulled_m_hat'), 'bounded', 'unbounded')
        violations = [r['R'] for r in self.records if r['pulled_m_hat'] > r['pulled_bound']]
        return {'image_recurrence': image, 'pulled_recurrence': pulled, 'bound_violations': violations,
                'failure': bool(violations) or (image == 'bounded' and pulled == 'unbounded')}

    def rows(self):
        return [{'quantity': q, 'param_1': r['R'], 'param_2': r['R_H'], 'value': r[q], 'witness_id': r['witness_id']}
                for q in self.QUANTITIES for r in self.records]


def properness_constant(ball, m_X, M_X):
    """
    max d_G(h, y) over orbit points h and ball vertices y with d_X(h, y) <= M_X.
    Ball vertices keep their ids in the coned and cusped graphs, so the orbit images index both metrics.
    """
    orbit = np.asarray(m_X.image_set(), dtype=np.int64)
    d_X = m_X.ambient.distance_rows(orbit)[:, :ball.n_vertices]
    d_G = ball.distance_rows(orbit)
    close = d_X <= M_X
    return int(d_G[close].max())


def pullback(spec, peripherals, h_gens, radii, target='cusp', t=DEFAULT_T, C=3, margin=None, cache=None,
             vertex_cap=DEFAULT_VERTEX_CAP, deadline=None, progress=None):
    """
    Bounded recurrence of orbit images in X should force bounded recurrence in G: image recurrence radius M_X, the
    finite fibres of the orbit map inside the ball give M, and the pulled-back recurrence is measured directly and
    checked against the bound M - 1.
    :param target: 'cusp' or 'cone'
    :return: PullbackReport
    """
    if target not in TARGETS:
        raise NotImplementedError(f'{target} has not been implemented. try: {", ".join(TARGETS)}')
    spec = spec if isinstance(spec, GroupSpec) else GroupSpec.parse(spec)
    deadline = Deadline.coerce(deadline)
    report = PullbackReport(target)
    for R in radii:
        if deadline.expired():
            report.complete = False
            break
        ball, ps, cone, cusp = relhyp_spaces(spec, peripherals, R, cache, vertex_cap)
        X = cusp if target == 'cusp' else cone
        R_H = subgroup_radius(ps, h_gens, R, margin)
        m_G = orbit_map(ball, h_gens, R_H, spec, margin)
        m_X = orbit_map(X, h_gens, R_H, spec, margin)
        p_H = far_geodesic(m_G.domain)
        image = recurrence_constant(X, orbit_path(m_X, p_H), t, C, deadline=deadline)
        M_X = max(image.radius, 1)
        M = properness_constant(ball, m_X, M_X)
        pulled = recurrence_constant(ball, orbit_path(m_G, p_H), t, C, deadline=deadline)
        report.add({'R': R, 'R_H': R_H, 'image_m_hat': image.m_hat, 'image_radius': image.radius,
                    'properness_M': M, 'pulled_bound': max(M - 1, 0), 'pulled_m_hat': pulled.m_hat},
                   pulled.witness.verts)
        report.complete = report.complete and image.complete and pulled.complete
        if progress is not None:
            progress()
    return report

