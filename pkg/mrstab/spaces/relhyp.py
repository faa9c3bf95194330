from mrstab.common.errors import PeripheralNotSubgenerated, CosetOutsideBall
from mrstab.common.metric_graph import MetricGraph, VertexSet
from mrstab.spaces.group_spec import CONSTRUCTION_VERSION
from mrstab.spaces.orbits import ambient_oracle
from mrstab.spaces.words import FreeOracle, FreeAbelianOracle, inverse

from dataclasses import dataclass
import math

import numpy as np
import pandas as pd


def one_ended_linear_divergence(family, rank):
    """
    Asserted per peripheral family, never measured: free abelian groups of rank >= 2 are one-ended with linear
    divergence; free groups (including Z) are not.
    """
    return family == 'free_abelian' and rank >= 2


def default_depth_cap(radius):
    ''' Horoball depth past which no shortcut between vertices of a radius-R ball gets shorter '''
    return math.ceil(math.log2(2 * radius)) + 1


@dataclass(frozen=True)
class Coset:
    """
    A left coset gP of a peripheral subgroup, restricted to the ball.
    :param peripheral: index of P in the peripheral structure
    :param key: canonical name of the coset (formatted word)
    :param rep: smallest vertex id in the coset, i.e. a minimal length representative
    :param vertices: the coset's vertices inside the ball
    """
    peripheral: int
    key: str
    rep: int
    vertices: VertexSet


@dataclass(frozen=True)
class ProjectionSet:
    coset: int
    vertices: VertexSet
    diameter: int


class PeripheralStructure:
    """
    Peripheral subgroups P_i, each generated by a subset of the ambient generators, and the enumeration of their
    left cosets meeting a Cayley ball. Every ball vertex lies in exactly one coset per peripheral.
    :param ball: Cayley ball from cayley_ball
    :param peripherals: generator subsets, as symbol strings (e.g. ['a'] or ['xy'])
    :param spec: GroupSpec of the ball, read from its metadata when omitted
    """
    def __init__(self, ball, peripherals, spec=None):
        if ball.metadata.get('kind') != 'cayley_ball':
            raise ValueError(f'Peripheral structures live on Cayley balls, got a {ball.metadata.get("kind")} graph')
        self.ball = ball
        self.oracle = ambient_oracle(ball, spec)
        self.alphabet = self.oracle.alphabet
        self.radius = ball.metadata['radius']
        self.symbols = []
        self.subsets = []
        for p in peripherals:
            symbols = ''.join(sorted(set(p.replace(',', '').replace(' ', ''))))
            unknown = [s for s in symbols if s not in self.alphabet.symbols]
            if not symbols or unknown:
                raise PeripheralNotSubgenerated(f'Peripheral {p!r} is not generated by a subset of the ambient '
                                                f'generators {self.alphabet.symbols}')
            self.symbols.append(symbols)
            self.subsets.append({self.alphabet.to_letter[s] for s in symbols})
        self.families = [self.oracle.subgroup_family(subset) for subset in self.subsets]
        self.subgroup_oracles = []
        for (family, _), subset in zip(self.families, self.subsets):
            if family == 'free':
                self.subgroup_oracles.append(FreeOracle(subset))
            elif family == 'free_abelian':
                self.subgroup_oracles.append(FreeAbelianOracle(subset))
            else:
                raise NotImplementedError(f'{family} peripherals have not been implemented. try: free, free_abelian')

        self.words = [self.alphabet.parse(ball.label(v)) for v in range(ball.n_vertices)]
        self.depths = np.array([len(w) for w in self.words], dtype=np.int64)
        self.cosets, self.coset_index = [], {}
        self._membership = np.zeros((len(self.subsets), ball.n_vertices), dtype=np.int64)
        for i, subset in enumerate(self.subsets):
            groups = {}
            for v, w in enumerate(self.words):
                groups.setdefault(self.oracle.coset_key(w, subset), []).append(v)
            for key, members in sorted(groups.items(), key=lambda kv: kv[1][0]):
                coset = Coset(i, self.alphabet.format(key), members[0], VertexSet(members))
                self.coset_index[(i, coset.key)] = len(self.cosets)
                self._membership[i, members] = len(self.cosets)
                self.cosets.append(coset)

    def __len__(self):
        return len(self.cosets)

    @property
    def hypothesis_flags(self):
        return [one_ended_linear_divergence(family, rank) for family, rank in self.families]

    @property
    def hypothesis_holds(self):
        ''' Every peripheral is one-ended with linear divergence '''
        return all(self.hypothesis_flags)

    def coset_of(self, peripheral, v):
        return self._membership[peripheral, v]

    def resolve(self, coset):
        ''' Coset index from a Coset, an index, or a (peripheral, word) pair naming any element of the coset '''
        if isinstance(coset, Coset):
            coset = self.coset_index.get((coset.peripheral, coset.key))
        elif isinstance(coset, tuple):
            i, word = coset
            word = self.alphabet.parse(word) if isinstance(word, str) else tuple(word)
            key = self.alphabet.format(self.oracle.coset_key(self.oracle.normal_form(word), self.subsets[i]))
            coset = self.coset_index.get((i, key))
        if coset is None or not 0 <= coset < len(self.cosets):
            raise CosetOutsideBall(f'Coset does not meet the ball of radius {self.radius}')
        return coset

    def subgroup_element(self, u, v, peripheral):
        ''' The element u^-1 v of P_i written in P_i's generators; ValueError unless u and v share a coset '''
        w = self.oracle.normal_form(inverse(self.words[u]) + self.words[v])
        if any(abs(l) not in self.subsets[peripheral] for l in w):
            raise ValueError(f'{self.ball.label(u)} and {self.ball.label(v)} are not in the same '
                             f'{self.symbols[peripheral]}-coset')
        return w

    def intrinsic_distance(self, u, v, peripheral):
        ''' d_P(u, v): word length of u^-1 v in the peripheral's own generators '''
        return self.subgroup_oracles[peripheral].word_length(self.subgroup_element(u, v, peripheral))

    def intrinsic_distances(self, coset, vertices=None):
        ''' Pairwise d_P matrix over (a subset of) a coset's vertices '''
        c = self.cosets[self.resolve(coset)]
        vertices = list(c.vertices if vertices is None else vertices)
        sub = self.subgroup_oracles[c.peripheral]
        coords = [self.subgroup_element(c.rep, v, c.peripheral) for v in vertices]
        dist = np.zeros((len(vertices), len(vertices)), dtype=np.int64)
        for i in range(len(vertices)):
            for j in range(i + 1, len(vertices)):
                dist[i, j] = dist[j, i] = sub.word_length(inverse(coords[i]) + coords[j])
        return dist


def _check_same_ball(ball, ps):
    if ps.ball.graph_id != ball.graph_id:
        raise ValueError('Peripheral structure was enumerated on a different ball')


class ConedGraph:
    """
    The ball with every peripheral coset turned into a clique. Vertices are those of the base ball.
    :param added_edges: sorted coset edges that were not already base edges
    """
    def __init__(self, base, graph, added_edges, structure):
        self.base = base
        self.graph = graph
        self.added_edges = added_edges
        self.structure = structure
        self.vertex_map = np.arange(base.n_vertices)


def cone_off(ball, ps):
    """
    Coned-off Cayley ball: join every pair of vertices in the same peripheral coset.
    :return: ConedGraph
    """
    _check_same_ball(ball, ps)
    base_edges = set(ball.edges())
    added = set()
    for c in ps.cosets:
        members = list(c.vertices)
        for i, u in enumerate(members):
            for v in members[i + 1:]:
                if (u, v) not in base_edges:
                    added.add((u, v))
    added = sorted(added)
    adjacency = [list(nbrs) for nbrs in ball.adjacency]
    for u, v in added:
        adjacency[u].append(v)
        adjacency[v].append(u)
    meta = ball.metadata
    metadata = {'kind': 'cone', 'group': meta['group'], 'radius': meta['radius'], 'identity': 0, 'center': [0],
                'peripherals': ps.symbols, 'version': CONSTRUCTION_VERSION}
    graph = MetricGraph(ball.n_vertices, adjacency, labels=ball.labels, metadata=metadata)
    return ConedGraph(ball, graph, added, ps)


class CuspedGraph:
    """
    The ball with a combinatorial horoball glued along every peripheral coset, truncated at depth n_max.
    Horoball vertex (u, n) of coset c is horoballs[c][n - 1][position of u in the coset]; depth 0 is u itself.
    base_of maps every cusp vertex to the ball vertex below it and depth_of gives its depth.
    """
    def __init__(self, base, graph, n_max, horoballs, base_of, depth_of, structure):
        self.base = base
        self.graph = graph
        self.n_max = n_max
        self.horoballs = horoballs
        self.base_of = base_of
        self.depth_of = depth_of
        self.structure = structure

    def horoball_vertex(self, coset, u, n):
        if n == 0:
            return u
        c = self.structure.cosets[coset]
        return int(self.horoballs[coset][n - 1][c.vertices.index(u)])


def cusp_space(ball, ps, N_max=None):
    """
    Cusped ball. For each coset c and depth 1 <= n <= N_max there is a copy (u, n) of each u in c; vertical edges
    join (u, n-1) and (u, n), horizontal edges join (u, n) and (v, n) when 0 < d_P(u, v) <= 2^n.
    N_max = 0 gives back the ball itself.
    :param N_max: depth cap, default ceil(log2(2R)) + 1
    :return: CuspedGraph
    """
    _check_same_ball(ball, ps)
    R = ball.metadata['radius']
    N_max = default_depth_cap(R) if N_max is None else int(N_max)
    if N_max < 0:
        raise ValueError(f'Horoball depth cap must be nonnegative, got {N_max}')
    n = ball.n_vertices
    adjacency = [list(nbrs) for nbrs in ball.adjacency]
    labels = list(ball.labels)
    base_of, depth_of = list(range(n)), [0] * n
    horoballs = []
    for ci, c in enumerate(ps.cosets):
        layers, below = [], list(c.vertices)
        d_P = ps.intrinsic_distances(ci) if N_max > 0 and len(c.vertices) > 1 else None
        for depth in range(1, N_max + 1):
            layer = list(range(len(labels), len(labels) + len(c.vertices)))
            for u, v_below in zip(c.vertices, below):
                labels.append(f'{ball.label(u)}@{ps.symbols[c.peripheral]}{depth}')
                adjacency.append([v_below])
                adjacency[v_below].append(len(labels) - 1)
                base_of.append(u)
                depth_of.append(depth)
            if d_P is not None:
                for i, j in zip(*np.nonzero(np.triu((d_P > 0) & (d_P <= 2 ** depth)))):
                    adjacency[layer[i]].append(layer[j])
                    adjacency[layer[j]].append(layer[i])
            layers.append(layer)
            below = layer
        horoballs.append(layers)
    meta = ball.metadata
    metadata = {'kind': 'cusp', 'group': meta['group'], 'radius': R, 'identity': 0, 'center': [0], 'n_base': n,
                'depth_cap': N_max, 'peripherals': ps.symbols, 'version': CONSTRUCTION_VERSION}
    graph = MetricGraph(len(labels), adjacency, labels=labels, metadata=metadata)
    return CuspedGraph(ball, graph, N_max, horoballs, np.array(base_of), np.array(depth_of), ps)


def comparison_map(cusp, cone):
    ''' The 1-Lipschitz map cusp -> cone sending a horoball vertex (u, n) to u, as an array over cusp vertices '''
    if cusp.base.graph_id != cone.base.graph_id:
        raise ValueError('Cusped and coned graphs must be built on the same ball')
    return cone.vertex_map[cusp.base_of]


def almost_projection(ball, ps, coset, x):
    """
    All coset vertices y with d_G(x, y) <= d_G(x, coset) + 1, with their diameter in the coset's intrinsic metric.
    :param coset: Coset, coset index, or (peripheral index, word) naming an element of the coset
    :return: ProjectionSet
    """
    _check_same_ball(ball, ps)
    ci = ps.resolve(coset)
    x = ball.check_vertex(x)
    members = np.array(ps.cosets[ci].vertices)
    d = ball.distance_rows([x])[0][members]
    chosen = VertexSet(members[d <= d.min() + 1].tolist())
    return ProjectionSet(ci, chosen, int(ps.intrinsic_distances(ci, chosen).max(initial=0)))


class PeripheralDiamTable:
    """
    diam_P(H) per coset: the intrinsic diameter of the union of the almost-projections of an orbit.
    Cosets whose union reaches the outer shell of the ball are partial (their true projection may leave the ball)
    and are left out of max_diam.
    """
    COLUMNS = ['peripheral', 'coset', 'rep', 'diam', 'partial']

    def __init__(self, radius, records):
        self.radius = radius
        self.records = records

    @property
    def max_diam(self):
        full = [r['diam'] for r in self.records if not r['partial']]
        return max(full) if full else 0

    def diam_of(self, coset_key, peripheral=0):
        return next(r['diam'] for r in self.records if r['coset'] == coset_key and r['peripheral'] == peripheral)

    def to_frame(self):
        return pd.DataFrame(self.records, columns=self.COLUMNS)


def peripheral_diam(ball, ps, H_orbit):
    """
    :param H_orbit: nonempty ball vertices (e.g. OrbitMap.image_set())
    :return: PeripheralDiamTable
    """
    _check_same_ball(ball, ps)
    H_orbit = VertexSet(H_orbit, n_vertices=ball.n_vertices)
    if len(H_orbit) == 0:
        raise ValueError('H_orbit must be nonempty')
    rows = ball.distance_rows(list(H_orbit))
    shell = ps.depths >= ps.radius
    records = []
    for ci, c in enumerate(ps.cosets):
        members = np.array(c.vertices)
        sub = rows[:, members]
        union = members[(sub <= sub.min(axis=1, keepdims=True) + 1).any(axis=0)]
        diam = int(ps.intrinsic_distances(ci, union).max(initial=0))
        records.append({'peripheral': c.peripheral, 'coset': c.key, 'rep': c.rep, 'diam': diam,
                        'partial': bool(shell[union].any())})
    return PeripheralDiamTable(ps.radius, records)


def flat_corner_quads(ps, limit):
    """
    Corners rep s^(+-a) t^(+-b) of the rectangles centred on the representative of each coset of a free abelian
    peripheral, s and t two of its generators. Sides 2a and 2b give a four-point defect of 2 min(a, b) inside the
    flat. Cosets are taken in order of their representative until `limit` quads are collected.
    :return: int array of shape (k, 4) over ball vertices
    """
    quads = []
    for c in ps.cosets:
        family, rank = ps.families[c.peripheral]
        if family != 'free_abelian' or rank < 2:
            continue
        letters = sorted(ps.subsets[c.peripheral])
        at = {}
        for v in c.vertices:
            exps = [0] * len(letters)
            for l in ps.subgroup_element(c.rep, v, c.peripheral):
                exps[letters.index(abs(l))] += 1 if l > 0 else -1
            at[tuple(exps)] = v
        for i in range(len(letters)):
            for j in range(i + 1, len(letters)):
                for a in range(1, ps.radius + 1):
                    for b in range(1, ps.radius + 1):
                        corners = []
                        for sa, sb in [(a, b), (a, -b), (-a, -b), (-a, b)]:
                            exps = [0] * len(letters)
                            exps[i], exps[j] = sa, sb
                            corners.append(at.get(tuple(exps)))
                        if None in corners:
                            continue
                        quads.append(corners)
                        if len(quads) >= limit:
                            return np.array(quads, dtype=np.int64)
    return np.array(quads, dtype=np.int64).reshape(-1, 4)
