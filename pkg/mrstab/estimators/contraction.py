from mrstab.common.errors import EmptySet, HypothesisViolated
from mrstab.common.metric_graph import VertexSet, dist_to_set, center_depths
from mrstab.common.profiles import Verdicts, SampledFunction, sublinear_envelope, fit_exponent, parse_rational, \
    fraction_str
from mrstab.estimators.base_estimator import Profile, Deadline, format_value

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import pandas as pd

CONTRACTION_COLUMNS = ['r', 'rho_hat', 'rho_bar']


def projection(g, Y, x, eps=1):
    ''' {y in Y : d(x, y) <= d(x, Y) + eps} '''
    if len(Y) == 0:
        raise EmptySet('Projection onto an empty set')
    Y = np.asarray(list(Y), dtype=np.int64)
    d = g.distance_rows([g.check_vertex(x)])[0][Y]
    return VertexSet(Y[d <= d.min() + eps].tolist())


class ContractionProfile(Profile):
    """
    rho_hat(r): largest diam(pi(x) u pi(x')) over pairs with d(x, Y) = r and d(x, x') <= r, for every r >= 1 that
    occurs; rho_bar is its sublinear envelope.
    """
    def __init__(self, eps=1, name='contraction', complete=True):
        super(ContractionProfile, self).__init__(name, complete)
        self.eps = eps
        self.radii = []
        self.rho_hat = []
        self.witness_ids = []

    @property
    def rho_bar(self):
        return sublinear_envelope(self.radii, self.rho_hat)

    def envelope(self):
        ''' rho_bar as a SampledFunction, usable as the contraction function of verify_contract_lemma '''
        return SampledFunction(self.radii, self.rho_bar)

    @property
    def exponent(self):
        if not self.radii:
            return 0.0
        top = len(self.radii) // 2
        return fit_exponent(self.radii[top:], [float(v) for v in self.rho_bar[top:]])

    @property
    def verdict(self):
        if len(self.radii) < Verdicts.STABLE_WINDOW:
            return 'inconclusive'
        ratio = self.rho_bar[-1] / self.radii[-1]
        if self.exponent <= Verdicts.SUBLINEAR_MAX_EXPONENT and ratio <= Verdicts.SUBLINEAR_MAX_RATIO:
            return 'sublinear'
        return 'not_sublinear'

    def rows(self):
        rows = []
        for r, v, bar, w in zip(self.radii, self.rho_hat, self.rho_bar, self.witness_ids):
            rows.append({'quantity': 'rho_hat', 'param_1': r, 'param_2': self.eps, 'value': v, 'witness_id': w})
            rows.append({'quantity': 'rho_bar', 'param_1': r, 'param_2': self.eps, 'value': bar, 'witness_id': w})
        return rows

    def contraction_frame(self):
        ''' One row per r, sorted by r '''
        records = [{'r': r, 'rho_hat': format_value(v), 'rho_bar': format_value(bar)}
                   for r, v, bar in sorted(zip(self.radii, self.rho_hat, self.rho_bar))]
        return pd.DataFrame(records, columns=CONTRACTION_COLUMNS)

    def verdicts(self):
        return {'contraction': self.verdict, 'contraction_exponent': round(self.exponent, 6)}


def contraction_profile(g, Y, eps=1, radii=None, margin=None, deadline=None, name='contraction'):
    """
    Exhaustive contraction sweep over the full distance matrix.
    For each vertex x the projection pi(x) is a mask over Y; F[x, y'] = max over y in pi(x) of d(y, y') turns the
    cross term of diam(pi(x) u pi(x')) into a masked max.
    :param radii: restrict to these r (default: every r >= 1 realised by some vertex)
    :param margin: only points x at least this far inside the recorded radius of g are used
    :return: ContractionProfile
    """
    if len(Y) == 0:
        raise EmptySet('Contraction profile of an empty set')
    deadline = Deadline.coerce(deadline)
    Y = np.asarray(sorted(set(int(y) for y in Y)), dtype=np.int64)
    dm = g.distance_matrix().astype(np.int64)
    to_y = dm[:, Y]
    d_Y = to_y.min(axis=1)
    proj = to_y <= (d_Y + eps)[:, None]
    on_y = dm[np.ix_(Y, Y)]
    F = np.stack([on_y[proj[x]].max(axis=0) for x in range(g.n_vertices)])
    self_diam = np.where(proj, F, -1).max(axis=1)

    usable = np.ones(g.n_vertices, dtype=bool)
    depths = center_depths(g) if margin is not None and 'radius' in g.metadata else None
    if depths is not None:
        usable = depths <= g.metadata['radius'] - margin
    present = sorted(set(d_Y[usable & (d_Y >= 1)].tolist()))
    radii = present if radii is None else [r for r in radii if r in present]

    profile = ContractionProfile(eps, name)
    for r in radii:
        if deadline.expired():
            profile.complete = False
            break
        best, pair = -1, None
        for x in np.flatnonzero(usable & (d_Y == r)):
            near = np.flatnonzero(dm[x] <= r)
            cross = np.where(proj[near], F[x][None, :], -1).max(axis=1)
            values = np.maximum(np.maximum(cross, self_diam[near]), self_diam[x])
            k = int(np.argmax(values))
            if values[k] > best:
                best, pair = int(values[k]), [int(x), int(near[k])]
        profile.radii.append(int(r))
        profile.rho_hat.append(Fraction(best))
        profile.witness_ids.append(profile.add_witness(pair))
    return profile


@dataclass
class LemmaReport:
    """
    :param pieces: (start index, end index, r_i) per piece of the greedy decomposition of h
    :param lhs: rho(K) / K
    :param rhs: (1 - (2K + rho(K)) / |h|) / slope(h), None when h is closed
    :param chain_bound: 2K + sum of rho(r_i), an upper bound for |h|
    :param radii_covered: every r_i lies in the sampled range of rho
    """
    K: int
    pieces: list
    lhs: Fraction
    rhs: Fraction
    holds: bool
    chain_bound: Fraction
    chain_holds: bool
    properties_hold: bool
    radii_covered: bool
    degenerate: bool = False
    notes: list = field(default_factory=list)

    @property
    def radii(self):
        return [r for _, _, r in self.pieces]


def verify_contract_lemma(g, gamma, h, rho):
    """
    Check the contraction lemma on a path h that stays at distance >= K from gamma with both endpoints at exactly K.
    h is cut greedily: from the current start x_i with r_i = d(x_i, gamma), the piece runs to the last vertex of h
    within r_i of x_i. Every piece but the last then ends at distance exactly r_i from its start (property 1) and
    every r_i >= K (property 2).
    :param gamma: VertexSet
    :param h: PathRec
    :param rho: SampledFunction with rho(r)/r nonincreasing
    :return: LemmaReport
    """
    to_gamma = dist_to_set(g, gamma)
    K = int(to_gamma[h.start])
    if K < 1 or to_gamma[h.end] != K:
        raise HypothesisViolated(f'Endpoints of h must both lie at the same distance K >= 1 from gamma, got '
                                 f'{to_gamma[h.start]} and {to_gamma[h.end]}')
    dips = [v for v in h.verts if to_gamma[v] < K]
    if dips:
        raise HypothesisViolated(f'h enters N_{K - 1}(gamma) at vertices {dips[:5]}')
    verts = list(h.verts)
    pieces, start, properties = [], 0, True
    while start < len(verts) - 1:
        r = int(to_gamma[verts[start]])
        from_start = g.distance_rows([verts[start]])[0][verts]
        end = int(np.flatnonzero(from_start[start + 1:] <= r).max()) + start + 1
        pieces.append((start, end, r))
        last = end == len(verts) - 1
        properties &= r >= K and (last or int(from_start[end]) == r)
        start = end
    rho_K = Fraction(rho(K))
    lhs = rho_K / K
    chain_bound = 2 * K + sum((Fraction(rho(r)) for _, _, r in pieces), Fraction(0))
    report = LemmaReport(K, pieces, lhs, None, True, chain_bound, h.endpoint_dist <= chain_bound, properties,
                         all(rho.covers(r) for _, _, r in pieces))
    if h.endpoint_dist == 0:
        report.degenerate = True
        report.notes.append('closed path: the inequality holds trivially')
        return report
    slope_h = Fraction(h.arclength, h.endpoint_dist)
    report.rhs = (1 - (2 * K + rho_K) / h.endpoint_dist) / slope_h
    report.holds = lhs >= report.rhs
    return report


def contraction_chain_check(rho, t, kappa, lam, C, L):
    """
    Plug the envelope into the constant chain of the recurrence-from-contraction argument:
    K = ((1 - 2t) L / (kappa^2 C) - 2 lambda) / 8 and the requirement rho(K)/K >= 3 (1 - 2t) / (16 kappa^2 C).
    The check applies when K > 0, rho(K)/K <= 1 and L > 4 lambda kappa^2 / (1 - 2t).
    :return: dict report
    """
    t, kappa, lam, C = (parse_rational(x) for x in (t, kappa, lam, C))
    K = ((1 - 2 * t) * L / (kappa ** 2 * C) - 2 * lam) / 8
    threshold = 3 * (1 - 2 * t) / (16 * kappa ** 2 * C)
    ratio = rho(K) / K if K > 0 else None
    applicable = K > 0 and ratio <= 1 and L > 4 * lam * kappa ** 2 / (1 - 2 * t)
    return {'L': L, 'K': K, 'ratio': ratio, 'threshold': threshold, 'applicable': bool(applicable),
            'holds': bool(applicable and ratio >= threshold),
            'summary': f'K={fraction_str(K)} threshold={fraction_str(threshold)}'}
