from mrstab.common.errors import BadT, TooLarge, BudgetExceeded
from mrstab.common.metric_graph import VertexSet, PathRec, dist_to_set, shortest_path_avoiding, \
    concat_paths, to_networkx, check_margin
from mrstab.common.profiles import parse_rational, fraction_str, is_bounded
from mrstab.estimators.base_estimator import Profile, Deadline

from dataclasses import dataclass
from fractions import Fraction
import math

import networkx as nx

DEFAULT_T = Fraction(1, 3)
ORACLE_MAX_VERTICES = 60


def check_t(t):
    t = parse_rational(t)
    if not 0 < t < Fraction(1, 2):
        raise BadT(f't must lie strictly between 0 and 1/2, got {fraction_str(t)}')
    return t


def t_middle(g, p, t):
    """
    Vertices x of p with min(d(x, a), d(x, b)) >= t * d(a, b), a and b the endpoints of p. Distances are measured
    in g, so the middle need not be a subpath.
    :return: VertexSet (empty for a closed path)
    """
    t = check_t(t)
    d = p.endpoint_dist
    if d == 0:
        return VertexSet()
    rows = g.distance_rows([p.start, p.end])
    threshold = t * d
    return VertexSet({v for v in p.verts if min(rows[0][v], rows[1][v]) >= threshold})


def path_budget(C, d):
    ''' Longest admissible detour: arclength <= C * d '''
    return math.floor(parse_rational(C) * d)


@dataclass
class RecurrenceSample:
    """
    :param m_hat: largest K for which some path between the endpoints avoids N_K(t-middle) within the budget
                  (0 when even the middle itself cannot be avoided)
    :param witness: the shortest avoiding path at K = m_hat, or the geodesic when nothing avoids the middle
    :param avoidable: whether any budget path avoids the middle at all
    :param degenerate: closed path or empty middle
    """
    t: Fraction
    C: Fraction
    endpoints: tuple
    distance: int
    m_hat: int
    witness: PathRec
    avoidable: bool
    degenerate: bool = False
    complete: bool = True

    @property
    def radius(self):
        ''' Smallest K every budget path meets: m_hat + 1, or 0 when the middle cannot be avoided '''
        return self.m_hat + 1 if self.avoidable else 0


def recurrence_constant(g, p, t=DEFAULT_T, C=3, margin=None, deadline=None):
    """
    Middle recurrence of p by neighborhood deletion: for K = 0, 1, ... delete N_K(t-middle) and look for the
    shortest path between the endpoints in what is left. The sweep stops once the endpoints are deleted, get
    disconnected, or the shortest path exceeds C * d(a, b). The shortest length L(K) can only grow with K.
    :param margin: when given, both endpoints must lie this far inside the recorded radius of g
    :param deadline: seconds or Deadline; on expiry the sample is returned with complete=False
    :return: RecurrenceSample
    """
    t, C = check_t(t), parse_rational(C)
    if C < 1:
        raise ValueError(f'Slope budget C must be at least 1, got {fraction_str(C)}')
    deadline = Deadline.coerce(deadline)
    check_margin(g, [p.start, p.end], margin)
    d = p.endpoint_dist
    middle = t_middle(g, p, t)
    sample = RecurrenceSample(t, C, (p.start, p.end), d, 0, p, avoidable=False)
    if d == 0 or len(middle) == 0:
        sample.degenerate = True
        return sample
    budget = path_budget(C, d)
    to_middle = dist_to_set(g, middle)
    limit = int(min(to_middle[p.start], to_middle[p.end]))
    last_length = None
    for K in range(limit):
        if deadline.expired():
            sample.complete = False
            break
        blocked = to_middle <= K
        q = shortest_path_avoiding(g, p.start, p.end, blocked)
        if q is None or q.arclength > budget:
            break
        if last_length is not None and q.arclength < last_length:
            raise AssertionError(f'Avoiding path got shorter ({last_length} -> {q.arclength}) at K={K}')
        last_length = q.arclength
        sample.m_hat, sample.witness, sample.avoidable = K, q, True
    return sample


def recurrence_oracle(g, p, t=DEFAULT_T, C=3, deadline=None):
    """
    Exact middle recurrence by enumerating every simple path between the endpoints within the budget (networkx
    all_simple_paths), restricted to vertices that some budget path can visit.
    :return: m_hat
    """
    if g.n_vertices > ORACLE_MAX_VERTICES:
        raise TooLarge(f'Simple path enumeration is limited to {ORACLE_MAX_VERTICES} vertices, got {g.n_vertices}')
    t, C = check_t(t), parse_rational(C)
    deadline = Deadline.coerce(deadline)
    d = p.endpoint_dist
    middle = t_middle(g, p, t)
    if d == 0 or len(middle) == 0:
        return 0
    budget = path_budget(C, d)
    rows = g.distance_rows([p.start, p.end])
    reachable = [v for v in range(g.n_vertices) if rows[0][v] + rows[1][v] <= budget]
    G = to_networkx(g).subgraph(reachable)
    to_middle = dist_to_set(g, middle)
    ceiling = int(min(to_middle[p.start], to_middle[p.end])) - 1
    best = -1
    for path in nx.all_simple_paths(G, p.start, p.end, cutoff=budget):
        best = max(best, int(to_middle[path].min()) - 1)
        if best >= ceiling:
            break
        if deadline.expired():
            raise BudgetExceeded(f'Simple path enumeration on {g.n_vertices} vertices ran out of time')
    return max(best, 0)


class RecurrenceProfile(Profile):
    """
    Middle recurrence samples over a (t, C) grid, possibly for several endpoint pairs.
    Rows: quantity "m_hat(t=..)" and "recurrence_radius(t=..)", param_1 = d(a, b), param_2 = C.
    """
    def __init__(self, name='recurrence', complete=True):
        super(RecurrenceProfile, self).__init__(name, complete)
        self.samples = []
        self.witness_ids = []
        self.endpoint_pairs = {}

    def add(self, sample):
        self.samples.append(sample)
        self.witness_ids.append(self.add_witness(sample.witness.verts))
        self.endpoint_pairs.setdefault(sample.endpoints, len(self.endpoint_pairs))
        self.complete = self.complete and sample.complete

    def check_monotone(self):
        ''' m_hat nondecreasing in C and in t (a larger t shrinks the middle), per endpoint pair '''
        table = {(s.endpoints, s.t, s.C): s.m_hat for s in self.samples if s.complete}
        for (ends, t, C), m in table.items():
            for (ends2, t2, C2), m2 in table.items():
                if ends2 == ends and t2 >= t and C2 >= C and m2 < m:
                    raise AssertionError(f'm_hat({fraction_str(t2)}, {fraction_str(C2)}) = {m2} is below '
                                         f'm_hat({fraction_str(t)}, {fraction_str(C)}) = {m} for endpoints {ends}')

    def values(self, t=None, C=None):
        return [s.m_hat for s in self.samples if (t is None or s.t == t) and (C is None or s.C == C)]

    def rows(self):
        rows = []
        for s, w in zip(self.samples, self.witness_ids):
            tag = f'(t={fraction_str(s.t)})'
            rows.append({'quantity': f'm_hat{tag}', 'param_1': s.distance, 'param_2': s.C, 'value': s.m_hat,
                         'witness_id': w})
            rows.append({'quantity': f'recurrence_radius{tag}', 'param_1': s.distance, 'param_2': s.C,
                         'value': s.radius, 'witness_id': w})
        return rows


def recurrence_profile(g, p, ts=(DEFAULT_T,), Cs=(2, 3, 5), margin=None, deadline=None, profile=None):
    """
    Sweep recurrence_constant over a (t, C) grid for one path and assert the monotonicity of m_hat.
    Pass an existing profile to collect several paths in one table.
    """
    deadline = Deadline.coerce(deadline)
    profile = profile if profile is not None else RecurrenceProfile()
    for t in ts:
        for C in Cs:
            if deadline.expired():
                profile.complete = False
                break
            profile.add(recurrence_constant(g, p, t, C, margin=margin, deadline=deadline))
    profile.check_monotone()
    return profile


def sphere_detour(g, p, center_index, D):
    """
    Leave p at distance D before p[center_index], follow the shortest route outside the open ball of radius D about
    it, and rejoin p at distance D after. In the hyperbolic plane this route runs along the sphere.
    :return: PathRec, or None when the sphere route does not exist inside g
    """
    if D < 1 or center_index - D < 0 or center_index + D > len(p.verts) - 1:
        raise ValueError(f'Detour radius {D} does not fit around index {center_index} of a path with '
                         f'{len(p.verts)} vertices')
    center = p.verts[center_index]
    u, w = p.verts[center_index - D], p.verts[center_index + D]
    blocked = g.distance_rows([center])[0] < D
    arc = shortest_path_avoiding(g, u, w, blocked)
    if arc is None:
        return None
    return concat_paths(g, [p.verts[:center_index - D + 1], arc.verts, p.verts[center_index + D:]])


def coverage(g, p, q):
    ''' max over the vertices x of p of d(x, q) '''
    return int(dist_to_set(g, q.verts)[list(p.verts)].max())


@dataclass
class Property5Result:
    k_hat: int
    witness: PathRec
    candidates: int
    complete: bool = True


def property5_constant(g, p, C=3, t=DEFAULT_T, margin=None, deadline=None):
    """
    Lower bound on the constant K for which every detour of slope at most C between the endpoints of p passes within
    K of all of p: the largest coverage over candidate detours that respect the budget. Candidates are the
    neighborhood-deletion witnesses of recurrence_constant and the sphere detours about the centre of p.
    :return: Property5Result
    """
    C = parse_rational(C)
    deadline = Deadline.coerce(deadline)
    check_margin(g, [p.start, p.end], margin)
    budget = path_budget(C, p.endpoint_dist)
    candidates = [p]
    middle = t_middle(g, p, t) if p.endpoint_dist > 0 else VertexSet()
    if len(middle):
        to_middle = dist_to_set(g, middle)
        for K in range(int(min(to_middle[p.start], to_middle[p.end]))):
            q = shortest_path_avoiding(g, p.start, p.end, to_middle <= K)
            if q is None or q.arclength > budget:
                break
            candidates.append(q)
    center = len(p.verts) // 2
    for D in range(1, min(center, len(p.verts) - 1 - center) + 1):
        q = sphere_detour(g, p, center, D)
        if q is not None and q.arclength <= budget:
            candidates.append(q)
    result = Property5Result(0, p, len(candidates))
    for q in candidates:
        if deadline.expired():
            result.complete = False
            break
        k = coverage(g, p, q)
        if k > result.k_hat:
            result.k_hat, result.witness = k, q
    return result


class Property5Profile(Profile):
    """
    K_hat next to m_hat for a family of paths of growing length at one slope budget C.
    Rows: quantity "K_hat" and "m_hat(t=..)", param_1 = d(a, b), param_2 = C.
    """
    def __init__(self, t=DEFAULT_T, C=3, complete=True):
        super(Property5Profile, self).__init__('property5', complete)
        self.t, self.C = parse_rational(t), parse_rational(C)
        self.distances = []
        self.k_hats = []
        self.m_hats = []
        self.witness_ids = []

    def add(self, distance, result, sample):
        self.distances.append(distance)
        self.k_hats.append(result.k_hat)
        self.m_hats.append(sample.m_hat)
        self.witness_ids.append(self.add_witness(result.witness.verts))
        self.complete = self.complete and result.complete and sample.complete

    def verdicts(self):
        if len(self.distances) < 2:
            return {'property5': 'inconclusive', 'recurrence': 'inconclusive'}
        order = sorted(range(len(self.distances)), key=lambda i: self.distances[i])
        k = [self.k_hats[i] for i in order]
        growing = all(a < b for a, b in zip(k, k[1:]))
        flat = is_bounded(self.m_hats)
        return {'property5': 'unbounded' if growing else 'bounded', 'recurrence': 'bounded' if flat else 'unbounded'}

    def rows(self):
        rows = []
        for d, k, m, w in zip(self.distances, self.k_hats, self.m_hats, self.witness_ids):
            rows.append({'quantity': 'K_hat', 'param_1': d, 'param_2': self.C, 'value': k, 'witness_id': w})
            rows.append({'quantity': f'm_hat(t={fraction_str(self.t)})', 'param_1': d, 'param_2': self.C,
                         'value': m, 'witness_id': None})
        return rows
