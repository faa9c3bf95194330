from mrstab.common.errors import DisconnectedGraph, SelfLoop, DuplicateEdge, InvalidVertex, ZeroDisplacement, \
    EmptySet, TooLarge, MarginViolation

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
import hashlib
from itertools import combinations, islice
import json
import math
import re

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path as csgraph_shortest_path

# Full distance matrices are only ever materialised below this many vertices
DISTANCE_MATRIX_LIMIT = 20000
FOURPOINT_BATCH = 200000
FOURPOINT_SAMPLE_BATCH = 64
HEADER_RE = re.compile(r'^# vertices=(\d+) provenance=(.*)$')
LABEL_RE = re.compile(r'^# label (\d+) (.*)$')


class MetricGraph:
    """
    Finite, connected, simple graph with unit edge weights. Vertices are the integers 0..n-1 and may carry string
    labels (e.g. the normal form of a group element). Metadata records how the graph was built and has to be json
    serializable so it survives the adjacency text format.
    The graph is never mutated after construction; distance rows and the optional full distance matrix are caches.
    """
    def __init__(self, n_vertices, adjacency, labels=None, metadata=None, distance_matrix_limit=DISTANCE_MATRIX_LIMIT):
        self._n = int(n_vertices)
        self._adj = tuple(tuple(sorted(int(v) for v in nbrs)) for nbrs in adjacency)
        if len(self._adj) != self._n:
            raise ValueError(f'Adjacency has {len(self._adj)} rows for {self._n} vertices')
        self._labels = tuple(str(l) for l in labels) if labels is not None else None
        if self._labels is not None and len(self._labels) != self._n:
            raise ValueError(f'Got {len(self._labels)} labels for {self._n} vertices')
        self._metadata = json.loads(json.dumps(metadata or {}, sort_keys=True))
        self.distance_matrix_limit = distance_matrix_limit
        self._clear_caches()

    def _clear_caches(self):
        self._csr = None
        self._dm = None
        self._label_index = None
        self._graph_id = None

    def __getstate__(self):
        state = self.__dict__.copy()
        for key in ['_csr', '_dm', '_label_index']:
            state[key] = None
        return state

    def __eq__(self, other):
        if not isinstance(other, MetricGraph):
            return NotImplemented
        return (self._n, self._adj, self._labels, self._metadata) == \
               (other._n, other._adj, other._labels, other._metadata)

    def __hash__(self):
        return hash(self.graph_id)

    def __repr__(self):
        return f'MetricGraph(n_vertices={self._n}, n_edges={self.n_edges}, provenance={self._metadata})'

    @property
    def n_vertices(self):
        return self._n

    @property
    def adjacency(self):
        return self._adj

    @property
    def labels(self):
        return self._labels

    @property
    def metadata(self):
        return json.loads(json.dumps(self._metadata))

    @property
    def n_edges(self):
        return sum(len(nbrs) for nbrs in self._adj) // 2

    def neighbors(self, v):
        return self._adj[v]

    def edges(self):
        ''' Sorted (u, v) pairs with u < v '''
        return [(u, v) for u in range(self._n) for v in self._adj[u] if u < v]

    def label(self, v):
        return self._labels[v] if self._labels is not None else str(v)

    def vertex_of(self, label):
        if self._label_index is None:
            names = self._labels if self._labels is not None else [str(v) for v in range(self._n)]
            self._label_index = {l: v for v, l in enumerate(names)}
        if label not in self._label_index:
            raise InvalidVertex(f'No vertex labelled {label!r}')
        return self._label_index[label]

    def has_label(self, label):
        try:
            self.vertex_of(label)
        except InvalidVertex:
            return False
        return True

    @property
    def graph_id(self):
        if self._graph_id is None:
            self._graph_id = hashlib.sha256(to_adjacency_text(self).encode('utf8')).hexdigest()
        return self._graph_id

    @property
    def csr(self):
        if self._csr is None:
            rows = np.repeat(np.arange(self._n), [len(nbrs) for nbrs in self._adj])
            cols = np.fromiter((v for nbrs in self._adj for v in nbrs), dtype=np.int64, count=len(rows))
            self._csr = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(self._n, self._n))
        return self._csr

    def check_vertex(self, v):
        if not isinstance(v, (int, np.integer)) or v < 0 or v >= self._n:
            raise InvalidVertex(f'{v} is not a vertex of a graph with {self._n} vertices')
        return int(v)

    def distance_rows(self, sources):
        ''' Distances from each source to every vertex, as an int array of shape (len(sources), n) '''
        sources = np.asarray(list(sources), dtype=np.int64)
        if self._dm is not None:
            return self._dm[sources]
        if len(sources) == 0:
            return np.zeros((0, self._n), dtype=np.int64)
        rows = csgraph_shortest_path(self.csr, method='D', directed=False, unweighted=True, indices=sources)
        return rows.astype(np.int64)

    def distance_matrix(self):
        if self._dm is None:
            if self._n > self.distance_matrix_limit:
                raise TooLarge(f'Refusing a full distance matrix for {self._n} vertices '
                               f'(limit {self.distance_matrix_limit})')
            self._dm = self.distance_rows(range(self._n)).astype(np.int32)
        return self._dm


@dataclass(frozen=True)
class PathRec:
    """
    A path in a MetricGraph: consecutive vertices are adjacent.
    :param verts: vertex ids in order
    :param arclength: number of edges, i.e. len(verts) - 1
    :param endpoint_dist: graph distance between the first and last vertex
    :param graph_id: content hash of the owning graph
    """
    verts: tuple
    arclength: int
    endpoint_dist: int
    graph_id: str

    @property
    def start(self):
        return self.verts[0]

    @property
    def end(self):
        return self.verts[-1]

    def is_geodesic(self):
        return self.arclength == self.endpoint_dist

    def __len__(self):
        return len(self.verts)


class VertexSet(tuple):
    ''' Sorted tuple of distinct vertex ids '''
    def __new__(cls, ids=(), n_vertices=None):
        ids = sorted(int(i) for i in ids)
        if any(a == b for a, b in zip(ids, ids[1:])):
            raise ValueError(f'Duplicate vertex ids in {ids}')
        if n_vertices is not None and ids and (ids[0] < 0 or ids[-1] >= n_vertices):
            raise InvalidVertex(f'Vertex ids {ids[0]}..{ids[-1]} out of range for {n_vertices} vertices')
        return super(VertexSet, cls).__new__(cls, ids)

    @classmethod
    def from_mask(cls, mask):
        return cls(np.flatnonzero(mask).tolist())

    def mask(self, n):
        m = np.zeros(n, dtype=bool)
        m[list(self)] = True
        return m


def build_graph(edges, labels=None, metadata=None, n_vertices=None):
    """
    Validate an undirected edge list and build a MetricGraph.
    :param edges: iterable of (u, v) pairs; each undirected edge listed once in either orientation
    :param labels: optional vertex labels
    :param metadata: json serializable provenance
    :param n_vertices: vertex count if larger than the largest id + 1
    :return: MetricGraph
    """
    edges = [(int(u), int(v)) for u, v in edges]
    if not edges and not n_vertices == 1:
        raise ValueError('Edge list must be nonempty')
    n = max([max(u, v) for u, v in edges] + [(n_vertices or 1) - 1]) + 1
    if min([min(u, v) for u, v in edges] + [0]) < 0:
        raise InvalidVertex('Vertex ids must be nonnegative')
    adjacency = [set() for _ in range(n)]
    for u, v in edges:
        if u == v:
            raise SelfLoop(f'Self loop at vertex {u}')
        if v in adjacency[u]:
            raise DuplicateEdge(f'Edge ({u}, {v}) listed twice')
        adjacency[u].add(v)
        adjacency[v].add(u)
    _check_connected(adjacency)
    return MetricGraph(n, adjacency, labels=labels, metadata=metadata)


def _check_connected(adjacency):
    seen = _bfs(adjacency, [0])
    missing = [v for v, d in enumerate(seen) if d < 0]
    if missing:
        raise DisconnectedGraph(f'{len(missing)} of {len(adjacency)} vertices unreachable from vertex 0, '
                                f'e.g. {missing[:5]}')


def from_networkx(G, metadata=None):
    ''' Relabel the nodes of a networkx graph in sorted order; the original node names become labels '''
    nodes = sorted(G.nodes())
    index = {node: i for i, node in enumerate(nodes)}
    edges = [(index[u], index[v]) for u, v in G.edges()]
    return build_graph(edges, labels=[str(node) for node in nodes], metadata=metadata, n_vertices=len(nodes))


def to_networkx(g):
    G = nx.Graph()
    G.add_nodes_from(range(g.n_vertices))
    G.add_edges_from(g.edges())
    return G


def induced_subgraph(g, vertices, metadata=None):
    """
    Subgraph induced on a vertex set, renumbered in increasing order of the original ids.
    :return: (MetricGraph, VertexSet of original ids; position i holds the original id of new vertex i)
    """
    keep = VertexSet(vertices, n_vertices=g.n_vertices)
    index = {v: i for i, v in enumerate(keep)}
    edges = [(index[u], index[v]) for u in keep for v in g.neighbors(u) if u < v and v in index]
    labels = [g.label(v) for v in keep]
    meta = {'induced_from': g.graph_id[:16], **(metadata or {})}
    return build_graph(edges, labels=labels, metadata=meta, n_vertices=len(keep)), keep


def _bfs(adjacency, sources, blocked=None, cutoff=None):
    ''' Multi-source BFS; -1 marks vertices not reached. blocked vertices are never entered '''
    dist = [-1] * len(adjacency)
    queue = deque()
    for s in sources:
        if (blocked is None or not blocked[s]) and dist[s] < 0:
            dist[s] = 0
            queue.append(s)
    while queue:
        u = queue.popleft()
        du = dist[u]
        if cutoff is not None and du >= cutoff:
            continue
        for v in adjacency[u]:
            if dist[v] < 0 and (blocked is None or not blocked[v]):
                dist[v] = du + 1
                queue.append(v)
    return dist


def _descend(adjacency, start, dist_to_target):
    ''' Greedy walk to the target taking the smallest-id neighbour one step closer: the lexicographically least geodesic '''
    path = [start]
    cur = start
    while dist_to_target[cur] > 0:
        want = dist_to_target[cur] - 1
        cur = next(v for v in adjacency[cur] if dist_to_target[v] == want)
        path.append(cur)
    return path


def dist_from(g, source):
    ''' Exact distances from source to every vertex (numpy int array indexed by vertex id) '''
    source = g.check_vertex(source)
    return g.distance_rows([source])[0]


def distance(g, a, b):
    a, b = g.check_vertex(a), g.check_vertex(b)
    return int(dist_from(g, a)[b])


def dist_to_set(g, S, blocked=None):
    ''' d(v, S) for every vertex v; -1 where S is unreachable outside the blocked vertices '''
    if len(S) == 0:
        raise EmptySet('Distance to an empty vertex set is undefined')
    return np.array(_bfs(g.adjacency, list(S), blocked=blocked), dtype=np.int64)


def path_from_vertices(g, verts):
    ''' Wrap a vertex sequence as a PathRec, checking that consecutive vertices are adjacent '''
    verts = tuple(g.check_vertex(v) for v in verts)
    if not verts:
        raise ValueError('A path needs at least one vertex')
    for u, v in zip(verts, verts[1:]):
        if v not in g.neighbors(u):
            raise ValueError(f'Vertices {u} and {v} are consecutive on the path but not adjacent')
    return PathRec(verts=verts, arclength=len(verts) - 1, endpoint_dist=distance(g, verts[0], verts[-1]),
                   graph_id=g.graph_id)


def shortest_path(g, a, b):
    ''' Geodesic from a to b; among geodesics the lexicographically smallest vertex sequence '''
    a, b = g.check_vertex(a), g.check_vertex(b)
    to_b = _bfs(g.adjacency, [b])
    verts = tuple(_descend(g.adjacency, a, to_b))
    return PathRec(verts=verts, arclength=len(verts) - 1, endpoint_dist=len(verts) - 1, graph_id=g.graph_id)


def shortest_path_avoiding(g, a, b, blocked):
    """
    Lexicographically least shortest path from a to b in the graph with the blocked vertices removed.
    :param blocked: boolean mask over the vertices
    :return: PathRec (endpoint_dist is measured in g itself), or None if a or b is blocked or they are disconnected
    """
    a, b = g.check_vertex(a), g.check_vertex(b)
    if blocked[a] or blocked[b]:
        return None
    to_b = _bfs(g.adjacency, [b], blocked=blocked)
    if to_b[a] < 0:
        return None
    verts = tuple(_descend(g.adjacency, a, to_b))
    return PathRec(verts=verts, arclength=len(verts) - 1, endpoint_dist=distance(g, a, b), graph_id=g.graph_id)


def concat_paths(g, pieces):
    ''' Join vertex sequences that share endpoints (piece i ends where piece i+1 starts) '''
    verts = list(pieces[0])
    for piece in pieces[1:]:
        if piece[0] != verts[-1]:
            raise ValueError(f'Pieces do not meet: {verts[-1]} vs {piece[0]}')
        verts.extend(piece[1:])
    return path_from_vertices(g, verts)


def slope(p):
    ''' arclength / endpoint distance, as an exact rational '''
    if p.endpoint_dist == 0:
        raise ZeroDisplacement(f'Path from {p.start} to {p.end} has coinciding endpoints')
    return Fraction(p.arclength, p.endpoint_dist)


def neighborhood(g, S, K):
    ''' All vertices within distance K of S '''
    if len(S) == 0:
        raise EmptySet('Neighborhood of an empty set')
    if K < 0:
        raise ValueError(f'Neighborhood radius must be nonnegative, got {K}')
    dist = _bfs(g.adjacency, [g.check_vertex(v) for v in S], cutoff=K)
    return VertexSet(v for v, d in enumerate(dist) if 0 <= d <= K)


def hausdorff(g, A, B):
    ''' Smallest D with A inside N_D(B) and B inside N_D(A) '''
    if len(A) == 0 or len(B) == 0:
        raise EmptySet('Hausdorff distance needs two nonempty sets')
    to_a, to_b = dist_to_set(g, A), dist_to_set(g, B)
    return int(max(to_b[list(A)].max(), to_a[list(B)].max()))


def diameter(g):
    if g.n_vertices <= g.distance_matrix_limit:
        return int(g.distance_matrix().max())
    chunks = np.array_split(np.arange(g.n_vertices), 64)
    return int(max(g.distance_rows(chunk).max() for chunk in chunks if len(chunk)))


def _fourpoint_defects(g, quads):
    verts, pos = np.unique(quads, return_inverse=True)
    pos = pos.reshape(quads.shape)
    rows = g.distance_rows(verts)
    x, y, z, w = quads.T
    px, py, pz = pos[:, 0], pos[:, 1], pos[:, 2]
    sums = np.stack([rows[px, y] + rows[pz, w],
                     rows[px, z] + rows[py, w],
                     rows[px, w] + rows[py, z]], axis=1)
    sums.sort(axis=1)
    return (sums[:, 2] - sums[:, 1]) / 2


def _max_defect(g, quads, batch):
    best = 0.0
    for start in range(0, len(quads), batch):
        best = max(best, float(_fourpoint_defects(g, quads[start:start + batch]).max()))
    return best


def delta_fourpoint(g, sample_count, seed=0, exhaustive=None, quads=None):
    """
    Four-point hyperbolicity defect: for x, y, z, w the three pair sums d(x,y)+d(z,w), d(x,z)+d(y,w), d(x,w)+d(y,z)
    are sorted and the defect is half the gap between the two largest. Returns the max defect over sampled 4-tuples,
    a lower bound on the true delta.
    :param sample_count: number of random 4-subsets of all vertices; all 4-subsets are used when there are no more
                         than this many
    :param seed: seed for the sampler
    :param exhaustive: force (True) or forbid (False) the exhaustive sweep
    :param quads: extra 4-tuples that are always evaluated (e.g. corners of flat squares)
    """
    if sample_count < 1:
        raise ValueError(f'sample_count must be positive, got {sample_count}')
    n = g.n_vertices
    if n < 4:
        return 0.0
    best = 0.0
    if quads is not None and len(quads):
        quads = np.asarray(quads, dtype=np.int64).reshape(-1, 4)
        if quads.min() < 0 or quads.max() >= n:
            raise InvalidVertex(f'4-tuples must use vertices of a graph with {n} vertices')
        best = _max_defect(g, quads, FOURPOINT_SAMPLE_BATCH)
    if exhaustive is None:
        exhaustive = math.comb(n, 4) <= sample_count
    if exhaustive:
        tuples = combinations(range(n), 4)
        while True:
            batch = np.array(list(islice(tuples, FOURPOINT_BATCH)), dtype=np.int64)
            if len(batch) == 0:
                break
            best = max(best, float(_fourpoint_defects(g, batch).max()))
        return best
    rng = np.random.default_rng(seed)
    sampled = np.array([rng.choice(n, size=4, replace=False) for _ in range(sample_count)], dtype=np.int64)
    # distance rows are only held for one batch of 4-tuples at a time
    return max(best, _max_defect(g, sampled, FOURPOINT_SAMPLE_BATCH))


def to_adjacency_text(g):
    ''' Deterministic text serialization: header, optional label comment lines, one sorted "u v" line per edge '''
    provenance = json.dumps(g._metadata, sort_keys=True, separators=(',', ':'))
    lines = [f'# vertices={g.n_vertices} provenance={provenance}']
    if g.labels is not None:
        lines += [f'# label {v} {l}' for v, l in enumerate(g.labels)]
    lines += [f'{u} {v}' for u, v in g.edges()]
    return '\n'.join(lines) + '\n'


def from_adjacency_text(text):
    lines = text.splitlines()
    if not lines:
        raise ValueError('Empty adjacency text')
    header = HEADER_RE.match(lines[0])
    if header is None:
        raise ValueError(f'Bad adjacency header: {lines[0][:80]!r}')
    n, metadata = int(header.group(1)), json.loads(header.group(2))
    labels, edges = {}, []
    for line in lines[1:]:
        if line.startswith('#'):
            label = LABEL_RE.match(line)
            if label is None:
                raise ValueError(f'Bad comment line: {line[:80]!r}')
            labels[int(label.group(1))] = label.group(2)
        elif line.strip():
            u, v = line.split()
            edges.append((int(u), int(v)))
    if labels and len(labels) != n:
        raise ValueError(f'Expected {n} labels, found {len(labels)}')
    return build_graph(edges, labels=[labels[v] for v in range(n)] if labels else None, metadata=metadata,
                       n_vertices=n)


def center_depths(g):
    ''' Distance of every vertex from the recorded center (identity of a ball, central face of a tiling) '''
    center = g.metadata.get('center', [g.metadata['identity']] if 'identity' in g.metadata else None)
    if center is None:
        return None
    return dist_to_set(g, center)


def check_margin(g, vertices, margin):
    """
    Raise MarginViolation unless every vertex lies at least `margin` inside the recorded radius of g.
    Graphs without a recorded center and radius have no boundary and always pass.
    """
    meta = g.metadata
    if margin is None or margin <= 0 or 'radius' not in meta:
        return
    depths = center_depths(g)
    if depths is None:
        return
    limit = meta['radius'] - margin
    outside = [int(v) for v in vertices if depths[v] > limit]
    if outside:
        raise MarginViolation(f'Vertices {outside[:5]} lie deeper than {limit} '
                              f'(radius {meta["radius"]}, margin {margin})')
