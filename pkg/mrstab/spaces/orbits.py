from mrstab.common.errors import ImageEscapesBall
from mrstab.common.metric_graph import MetricGraph, shortest_path, concat_paths, dist_from
from mrstab.common.profiles import Verdicts, is_stable, fit_exponent
from mrstab.estimators.base_estimator import Profile, Deadline
from mrstab.spaces.group_spec import GroupSpec, CONSTRUCTION_VERSION
from mrstab.spaces.words import inverse

from fractions import Fraction
import math

import numpy as np


def ambient_oracle(ambient, spec=None):
    ''' Word oracle matching the labels of an ambient graph (Cayley ball, or a cone/cusp built on one) '''
    spec = spec or GroupSpec.parse(ambient.metadata['group'])
    return spec.make_oracle()


def max_subgroup_radius(ambient_radius, gen_lengths, margin=None):
    ''' Largest H-ball radius whose orbit provably stays margin inside an ambient ball of the given radius '''
    margin = Fraction(ambient_radius, 4) if margin is None else Fraction(margin)
    longest = max([1] + [int(l) for l in gen_lengths])
    return max(0, math.floor((ambient_radius - margin) / longest))


class OrbitMap:
    """
    The orbit map of a subgroup H = <h_gens> restricted to a ball of H.
    :param domain: Cayley ball of H on the given generators; vertex 0 is the identity and labels are the ambient
                   normal forms of the elements
    :param image: ambient vertex id of each domain vertex (not necessarily injective)
    :param basepoint: ambient vertex of the identity
    """
    def __init__(self, ambient, domain, image, h_gens, alphabet):
        self.ambient = ambient
        self.domain = domain
        self.image = np.asarray(image, dtype=np.int64)
        self.h_gens = [tuple(h) for h in h_gens]
        self.alphabet = alphabet
        self.basepoint = int(self.image[0])

    @property
    def radius(self):
        return self.domain.metadata['radius']

    def __call__(self, v):
        return int(self.image[v])

    def image_set(self):
        return sorted(set(self.image.tolist()))

    def domain_depths(self):
        return dist_from(self.domain, 0)


def orbit_map(ambient, h_gens, R_H, spec=None, margin=None):
    """
    Build the H-ball of radius R_H on the generators h_gens (elements compared through the ambient oracle, so hidden
    relations among the h_gens are respected) and map it into the ambient graph via its labels.
    :param ambient: Cayley ball, coned-off or cusped graph labelled by normal forms, with 'group' and 'radius' metadata
    :param h_gens: subgroup generators, as words or word strings
    :param R_H: radius of the H-ball
    :param spec: GroupSpec of the ambient group, read from the metadata when omitted
    :param margin: images must stay at word length <= radius - margin (default radius / 4)
    :return: OrbitMap
    """
    if R_H < 0:
        raise ValueError(f'Subgroup ball radius must be nonnegative, got {R_H}')
    oracle = ambient_oracle(ambient, spec)
    alphabet = oracle.alphabet
    R = ambient.metadata['radius']
    limit = R - (Fraction(R, 4) if margin is None else Fraction(margin))
    gens = [oracle.normal_form(alphabet.parse(h) if isinstance(h, str) else tuple(h)) for h in h_gens]
    gens = [h for h in gens if h]
    steps = [s for h in gens for s in (h, inverse(h))]

    words, index, frontier, edges = [()], {(): 0}, [0], set()
    for r in range(R_H + 1):
        next_frontier = []
        for v in frontier:
            for s in steps:
                w = oracle.normal_form(words[v] + s)
                u = index.get(w)
                if u is None:
                    if r == R_H:
                        continue
                    u = len(words)
                    words.append(w)
                    index[w] = u
                    next_frontier.append(u)
                # a generator equal to the identity in G contributes no edge
                if u != v:
                    edges.add((min(u, v), max(u, v)))
        frontier = next_frontier

    image = []
    for w in words:
        label = alphabet.format(w)
        if not ambient.has_label(label) or len(w) > limit:
            raise ImageEscapesBall(f'Orbit point {label} (word length {len(w)}) is outside the trusted part of the '
                                   f'ambient ball (radius {R}, limit {float(limit):g}); lower R_H below {R_H}')
        image.append(ambient.vertex_of(label))

    adjacency = [[] for _ in words]
    for u, v in sorted(edges):
        adjacency[u].append(v)
        adjacency[v].append(u)
    metadata = {'kind': 'subgroup_ball', 'group': ambient.metadata['group'], 'radius': R_H, 'identity': 0,
                'center': [0], 'subgroup': [alphabet.format(h) for h in gens], 'version': CONSTRUCTION_VERSION}
    domain = MetricGraph(len(words), adjacency, labels=[alphabet.format(w) for w in words], metadata=metadata)
    return OrbitMap(ambient, domain, image, gens, alphabet)


def orbit_path(m, domain_path):
    """
    Extend a path in the H-ball to the ambient graph by joining consecutive orbit points with ambient geodesics.
    :param domain_path: PathRec or vertex sequence in m.domain
    :return: PathRec in m.ambient
    """
    verts = domain_path.verts if hasattr(domain_path, 'verts') else list(domain_path)
    images = [m(v) for v in verts]
    pieces = [[images[0]]]
    for a, b in zip(images, images[1:]):
        if a != b:
            pieces.append(list(shortest_path(m.ambient, a, b).verts))
    return concat_paths(m.ambient, pieces)


class DistortionProfile(Profile):
    """
    Per H-ball radius r, the smallest (kappa, lambda) making the orbit map on the r-ball a quasi-isometric embedding:
    kappa_hat = max(1, d_X/d_H, d_H/d_X) over pairs with d_X > 0, lambda_hat = max d_H / kappa_hat over pairs the
    orbit map collapses.
    """
    def __init__(self, complete=True):
        super(DistortionProfile, self).__init__('distortion', complete)
        self.radii = []
        self.kappas = []
        self.lambdas = []
        self.witness_ids = []

    def add_sample(self, r, kappa, lam, pair):
        if self.kappas and kappa < self.kappas[-1]:
            raise AssertionError(f'kappa_hat dropped from {self.kappas[-1]} to {kappa} at radius {r}')
        self.radii.append(r)
        self.kappas.append(kappa)
        self.lambdas.append(lam)
        self.witness_ids.append(self.add_witness(pair))

    @property
    def verdict(self):
        if len(self.radii) < Verdicts.STABLE_WINDOW:
            return 'inconclusive'
        return 'undistorted' if is_stable(self.kappas) else 'distorted'

    @property
    def exponent(self):
        return fit_exponent(self.radii, [float(k) for k in self.kappas])

    def rows(self):
        rows = []
        for r, k, l, w in zip(self.radii, self.kappas, self.lambdas, self.witness_ids):
            rows.append({'quantity': 'kappa_hat', 'param_1': r, 'value': k, 'witness_id': w})
            rows.append({'quantity': 'lambda_hat', 'param_1': r, 'value': l, 'witness_id': w})
        return rows

    def verdicts(self):
        return {'distortion': self.verdict, 'distortion_exponent': round(self.exponent, 6)}


def _best_ratio(num, den):
    ''' Exact max of num/den over entries with den > 0, with the flat index achieving it '''
    keep = den > 0
    if not keep.any():
        return Fraction(0), None
    ratios = np.where(keep, num / np.where(keep, den, 1), -1.0)
    i = int(np.argmax(ratios))
    return Fraction(int(num.flat[i]), int(den.flat[i])), i


def distortion_profile(m, radii=None, deadline=None):
    """
    Exhaustive pair sweep over nested H-balls. The witness of each radius is the pair of orbit points realising
    kappa_hat.
    :param radii: increasing radii, default 3..R_H
    :param deadline: seconds or Deadline; radii not reached are dropped and the profile is marked incomplete
    :return: DistortionProfile
    """
    deadline = Deadline.coerce(deadline)
    radii = list(radii) if radii is not None else list(range(3, m.radius + 1))
    if radii and (radii[0] < 1 or radii[-1] > m.radius):
        raise ValueError(f'Radii must lie in 1..{m.radius}, got {radii}')
    depth = m.domain_depths()
    dh_all = m.domain.distance_matrix().astype(np.int64)
    uniq, pos = np.unique(m.image, return_inverse=True)
    dx_all = m.ambient.distance_rows(uniq)[:, uniq][pos][:, pos]

    profile = DistortionProfile()
    for r in radii:
        if deadline.expired():
            profile.complete = False
            break
        keep = np.flatnonzero(depth <= r)
        dh, dx = dh_all[np.ix_(keep, keep)], dx_all[np.ix_(keep, keep)]
        stretch, i_s = _best_ratio(dx, dh)
        squash, i_q = _best_ratio(dh, np.where(dh > 0, dx, 0))
        kappa = max(Fraction(1), stretch, squash)
        collapsed = (dx == 0) & (dh > 0)
        lam = Fraction(int(dh[collapsed].max())) / kappa if collapsed.any() else Fraction(0)
        i = i_q if i_q is not None and squash >= stretch else i_s
        pair = None if i is None else [m(keep[i // len(keep)]), m(keep[i % len(keep)])]
        profile.add_sample(r, kappa, lam, pair)
    return profile
