from mrstab.common.errors import TooLarge, NotGeodesic
from mrstab.common.metric_graph import hausdorff, shortest_path, check_margin
from mrstab.common.profiles import parse_rational, fraction_str
from mrstab.estimators.base_estimator import Profile, Deadline
from mrstab.estimators.recurrence import DEFAULT_T, recurrence_constant

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

EXACT_MAX_VERTICES = 60
MODES = ['exact_oracle', 'probe']


@dataclass(frozen=True)
class QgParams:
    kappa: Fraction
    lam: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'kappa', parse_rational(self.kappa))
        object.__setattr__(self, 'lam', parse_rational(self.lam))
        if self.kappa < 1 or self.lam < 0:
            raise ValueError(f'Need kappa >= 1 and lambda >= 0, got ({fraction_str(self.kappa)}, '
                             f'{fraction_str(self.lam)})')

    def max_steps(self, d):
        ''' Longest index range allowed between two vertices at distance d '''
        return math.floor(self.kappa * (d + self.lam))

    def allows(self, gap, dist):
        ''' (1/kappa)|i-j| - lambda <= d(v_i, v_j) <= kappa|i-j| + lambda '''
        return gap / self.kappa - self.lam <= dist <= self.kappa * gap + self.lam


def _pairwise_ok(dist, q):
    ''' dist: distance matrix of a vertex sequence, indexed by sequence position '''
    m = len(dist)
    gaps = np.abs(np.subtract.outer(np.arange(m), np.arange(m)))
    kn, kd = q.kappa.numerator, q.kappa.denominator
    ln, ld = q.lam.numerator, q.lam.denominator
    # both inequalities multiplied through by the denominators
    lower = gaps * kd * ld <= kn * (dist * ld + ln)
    upper = dist * kd * ld <= kn * ld * gaps + ln * kd
    return bool(lower.all() and upper.all())


def is_quasigeodesic(g, verts, q_params):
    """
    Full pairwise check of a vertex sequence (consecutive vertices need not be adjacent).
    :param q_params: QgParams
    """
    verts = [g.check_vertex(v) for v in verts]
    if not verts:
        return False
    uniq, pos = np.unique(verts, return_inverse=True)
    rows = g.distance_rows(uniq)[:, uniq]
    return _pairwise_ok(rows[np.ix_(pos, pos)], q_params)


@dataclass
class StabilitySample:
    q: QgParams
    d_hat: int
    witness: list
    mode: str
    complete: bool = True


def _check_geodesic(g, p):
    if not p.is_geodesic():
        raise NotGeodesic(f'Reference path {p.start} -> {p.end} has arclength {p.arclength} '
                          f'but the endpoints are {p.endpoint_dist} apart')


def _exact_search(g, p, q, deadline):
    """
    Depth-first search over vertex sequences from a to b, extending a prefix only by vertices that satisfy the
    pairwise constraint against every earlier vertex and can still reach b in the remaining index range.
    """
    dm = g.distance_matrix()
    a, b = p.start, p.end
    reference = list(p.verts)
    to_ref = dm[:, reference].min(axis=1)
    n_max = q.max_steps(p.endpoint_dist)
    best = {'d_hat': 0, 'witness': list(reference), 'complete': True}
    step_max = math.floor(q.kappa + q.lam)
    prefix = [a]

    def extend():
        if deadline.expired():
            best['complete'] = False
            return
        i = len(prefix) - 1
        if prefix[-1] == b:
            # Hausdorff distance of the finished sequence to p
            seq = sorted(set(prefix))
            d_hat = int(max(to_ref[seq].max(), dm[np.ix_(reference, seq)].min(axis=1).max()))
            if d_hat > best['d_hat']:
                best['d_hat'], best['witness'] = d_hat, list(prefix)
        if i + 1 > n_max:
            return
        last = prefix[-1]
        for v in np.flatnonzero(dm[last] <= step_max):
            v = int(v)
            # b must stay reachable: d(v, b) <= kappa * (remaining steps) + lambda
            if dm[v, b] > q.kappa * (n_max - i - 1) + q.lam:
                continue
            if all(q.allows(i + 1 - j, int(dm[u, v])) for j, u in enumerate(prefix)):
                prefix.append(v)
                extend()
                prefix.pop()
                if not best['complete']:
                    return

    extend()
    return best


def _probe_candidates(g, p, q_max):
    """
    Out-travel-return detours: leave p at p_i, walk out to a vertex w1 at distance D from p_i and from p, cross to a
    vertex w2 at distance D from p_j and from p (the closest such pair), and come back to p at p_j.
    Only detours that q_max could certify between p_i and p_j are built. The pool depends on q_max alone, so
    certifying it for every (kappa, lambda) of a sweep is monotone in both.
    """
    verts = list(p.verts)
    n = len(verts)
    rows = g.distance_rows(verts)
    to_p = rows.min(axis=0)
    candidates = []
    for span in range(1, n):
        d_max = math.floor(((q_max.kappa - 1) * span + q_max.lam) / 2)
        for D in range(1, d_max + 1):
            for i in sorted({(n - 1 - span) // 2, 0}):
                j = i + span
                w1s = np.flatnonzero((rows[i] == D) & (to_p == D))
                w2s = np.flatnonzero((rows[j] == D) & (to_p == D))
                if len(w1s) == 0 or len(w2s) == 0:
                    continue
                cross = g.distance_rows(w1s)[:, w2s]
                k = int(np.argmin(cross))
                if 2 * D + cross.flat[k] > q_max.kappa * span + q_max.lam:
                    continue
                w1, w2 = int(w1s[k // len(w2s)]), int(w2s[k % len(w2s)])
                seq = verts[:i + 1]
                for x, y in [(verts[i], w1), (w1, w2), (w2, verts[j])]:
                    seq += list(shortest_path(g, x, y).verts[1:])
                candidates.append(seq + verts[j + 1:])
    return candidates


def stability_constant(g, p, q_params, mode='probe', margin=None, deadline=None, candidates=None):
    """
    Largest Hausdorff distance from the geodesic p over discrete (kappa, lambda)-quasigeodesics with the same
    endpoints. exact_oracle searches all of them (graphs up to 60 vertices); probe certifies out-travel-return
    detours and only bounds the constant from below.
    :param candidates: precomputed probe candidates (shared across a parameter sweep)
    :return: StabilitySample
    """
    if mode not in MODES:
        raise NotImplementedError(f'{mode} has not been implemented. try: {", ".join(MODES)}')
    q = q_params if isinstance(q_params, QgParams) else QgParams(*q_params)
    _check_geodesic(g, p)
    check_margin(g, [p.start, p.end], margin)
    deadline = Deadline.coerce(deadline)
    if mode == 'exact_oracle':
        if g.n_vertices > EXACT_MAX_VERTICES:
            raise TooLarge(f'Exact stability search is limited to {EXACT_MAX_VERTICES} vertices, '
                           f'got {g.n_vertices}')
        best = _exact_search(g, p, q, deadline)
        return StabilitySample(q, best['d_hat'], best['witness'], mode, best['complete'])
    sample = StabilitySample(q, 0, list(p.verts), mode)
    for seq in (candidates if candidates is not None else _probe_candidates(g, p, q)):
        if deadline.expired():
            sample.complete = False
            break
        if is_quasigeodesic(g, seq, q):
            d_hat = hausdorff(g, seq, p.verts)
            if d_hat > sample.d_hat:
                sample.d_hat, sample.witness = d_hat, seq
    return sample


class StabilityProfile(Profile):
    ''' D_hat over a (kappa, lambda) grid. Rows: quantity "D_hat", param_1 = kappa, param_2 = lambda '''
    def __init__(self, mode, name='stability', complete=True):
        super(StabilityProfile, self).__init__(name, complete)
        self.mode = mode
        self.samples = []
        self.witness_ids = []
        self.lengths = []

    def add(self, sample, length=None):
        self.samples.append(sample)
        self.lengths.append(length)
        self.witness_ids.append(self.add_witness(sample.witness))
        self.complete = self.complete and sample.complete

    def check_monotone(self):
        done = [(s, l) for s, l in zip(self.samples, self.lengths) if s.complete]
        for s, l in done:
            for s2, l2 in done:
                if l2 == l and s2.q.kappa >= s.q.kappa and s2.q.lam >= s.q.lam and s2.d_hat < s.d_hat:
                    raise AssertionError(f'D_hat{s2.q} = {s2.d_hat} is below D_hat{s.q} = {s.d_hat}')

    def rows(self):
        quantity = 'D_hat' if self.mode == 'exact_oracle' else 'D_hat_lower'
        return [{'quantity': quantity if l is None else f'{quantity}(d={l})', 'param_1': s.q.kappa,
                 'param_2': s.q.lam, 'value': s.d_hat, 'witness_id': w}
                for s, l, w in zip(self.samples, self.lengths, self.witness_ids)]


def stability_profile(g, p, kappas=(1, 2, 3), lambdas=(0,), mode='probe', margin=None, deadline=None,
                      profile=None, length=None):
    ''' Sweep stability_constant over a (kappa, lambda) grid and assert that D_hat grows with both '''
    deadline = Deadline.coerce(deadline)
    profile = profile if profile is not None else StabilityProfile(mode)
    candidates = None
    if mode == 'probe':
        q_max = QgParams(max(map(parse_rational, kappas)), max(map(parse_rational, lambdas)))
        candidates = _probe_candidates(g, p, q_max)
    for kappa in kappas:
        for lam in lambdas:
            if deadline.expired():
                profile.complete = False
                break
            profile.add(stability_constant(g, p, QgParams(kappa, lam), mode, margin, deadline, candidates), length)
    profile.check_monotone()
    return profile


def middle_recurrence_bound_check(g, p, kappa, t=DEFAULT_T, deadline=None):
    """
    Effective stability from middle recurrence: with d = max(m, 1), m the recurrence radius of p at slope budget
    4 kappa + 1, every (kappa, kappa)-quasigeodesic between the endpoints should stay within d + 4 kappa d / t + kappa
    of p. Checked against the exact oracle.
    :return: dict report
    """
    kappa = parse_rational(kappa)
    t = parse_rational(t)
    recurrence = recurrence_constant(g, p, t, 4 * kappa + 1, deadline=deadline)
    d = max(recurrence.radius, 1)
    bound = d + 4 * kappa * d / t + kappa
    sample = stability_constant(g, p, QgParams(kappa, kappa), 'exact_oracle', deadline=deadline)
    return {'kappa': kappa, 't': t, 'recurrence_radius': recurrence.radius, 'bound': bound, 'd_hat': sample.d_hat,
            'holds': sample.d_hat <= bound, 'complete': sample.complete and recurrence.complete,
            'witness': sample.witness}
