from mrstab.common.errors import NotHyperbolicType, BallTooLarge
from mrstab.common.metric_graph import MetricGraph, shortest_path
from mrstab.spaces.group_spec import CONSTRUCTION_VERSION, DEFAULT_VERTEX_CAP

from bisect import bisect_right

import numpy as np

DIAMETER_TRIES = 8


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i, j):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def _outer_arcs(c):
    """
    Split the faces to be glued outside the boundary into arcs of boundary indices.
    A vertex with c >= 2 missing faces carries c - 2 faces touching it alone, then starts the face across its next
    boundary edge; that face also covers every following vertex missing a single face.
    The boundary must be rotated so that index 0 has c >= 2.
    """
    m, arcs, idx = len(c), [], 0
    while idx < m:
        arcs += [[idx] for _ in range(c[idx] - 2)]
        arc, j = [idx], idx + 1
        while c[j % m] == 1:
            arc.append(j)
            j += 1
        arc.append(j)
        arcs.append(arc)
        idx = j
    return arcs


def _add_corona(boundary, faces_in, edges, p, q):
    ''' Glue every face meeting the current boundary; returns the new boundary cycle '''
    m = len(boundary)
    c = [q - faces_in[v] for v in boundary]
    if min(c) < 1:
        raise ValueError(f'Boundary vertex with {min(c)} missing faces; the disk is not a tiling patch')
    start = next(i for i in range(m) if c[i] >= 2)
    boundary, c = boundary[start:] + boundary[:start], c[start:] + c[:start]
    arcs = _outer_arcs(c)
    n_arcs = len(arcs)
    tips = _UnionFind(n_arcs)
    internal_counts = []
    for t, arc in enumerate(arcs):
        n_internal = p - len(arc) - 2
        if n_internal < -1:
            raise NotImplementedError(f'Face closing on the boundary without new vertices ({{{p},{q}}})')
        if n_internal == -1:
            tips.union((t - 1) % n_arcs, t)
        internal_counts.append(max(n_internal, 0))

    tip_vertex = {}
    for t in range(n_arcs):
        root = tips.find(t)
        if root not in tip_vertex:
            tip_vertex[root] = len(faces_in)
            faces_in.append(0)
    tip_of = [tip_vertex[tips.find(t)] for t in range(n_arcs)]

    new_boundary = []
    for t, arc in enumerate(arcs):
        edges.add(tuple(sorted((boundary[arc[-1] % m], tip_of[t]))))
        internals = list(range(len(faces_in), len(faces_in) + internal_counts[t]))
        faces_in.extend([0] * len(internals))
        if p - len(arc) - 2 >= 0:
            chain = [tip_of[t - 1]] + internals + [tip_of[t]]
            edges.update(tuple(sorted(e)) for e in zip(chain, chain[1:]))
        for v in {tip_of[t - 1], tip_of[t], *internals}:
            faces_in[v] += 1
        for i in arc:
            faces_in[boundary[i % m]] += 1
        new_boundary += [tip_of[t - 1]] + internals
    deduped = [v for i, v in enumerate(new_boundary) if v != new_boundary[i - 1]]
    return deduped or new_boundary[:1]


def _diameter_geodesic(g, center, tries=DIAMETER_TRIES):
    """
    A long geodesic through a central vertex: from a vertex u farthest from the centre, through the centre, to the
    vertex w farthest from the centre among those with d(u, w) = d(u, center) + d(center, w). The first `tries`
    farthest vertices are tried as u and the longest result is kept.
    """
    from_center = g.distance_rows([center])[0]
    farthest = np.flatnonzero(from_center == from_center.max())[:tries]
    best = None
    for u in farthest:
        from_u = g.distance_rows([int(u)])[0]
        through = from_u == from_u[center] + from_center
        w = int(np.argmax(np.where(through, from_center, -1)))
        if best is None or from_center[u] + from_center[w] > best[0]:
            best = (from_center[u] + from_center[w], int(u), w)
    _, u, w = best
    return list(shortest_path(g, u, center).verts) + list(shortest_path(g, center, w).verts[1:])


def tiling_graph(p, q, layers, vertex_cap=DEFAULT_VERTEX_CAP):
    """
    1-skeleton of the regular {p,q} tiling of the hyperbolic plane (p-gons, q at each vertex), grown from a central
    face by adding `layers` coronas. Vertices are numbered layer by layer.
    Metadata: layer_sizes, center (central face vertices), radius (max distance from the center), and the
    distinguished diameter geodesic through vertex 0 with the position of vertex 0 on it.
    :return: MetricGraph
    """
    if (p - 2) * (q - 2) <= 4:
        raise NotHyperbolicType(f'{{{p},{q}}} is not hyperbolic: (p-2)(q-2) must exceed 4')
    if layers < 1:
        raise ValueError(f'Need at least one layer, got {layers}')
    faces_in = [1] * p
    edges = {tuple(sorted((i, (i + 1) % p))) for i in range(p)}
    boundary = list(range(p))
    layer_sizes = [p]
    for _ in range(layers):
        before = len(faces_in)
        boundary = _add_corona(boundary, faces_in, edges, p, q)
        layer_sizes.append(len(faces_in) - before)
        if len(faces_in) > vertex_cap:
            raise BallTooLarge(f'{{{p},{q}}} tiling with {layers} layers exceeds {vertex_cap} vertices')
    n = len(faces_in)
    adjacency = [[] for _ in range(n)]
    for u, v in sorted(edges):
        adjacency[u].append(v)
        adjacency[v].append(u)
    bounds = np.cumsum(layer_sizes).tolist()
    layer = [bisect_right(bounds, v) for v in range(n)]
    g = MetricGraph(n, adjacency, labels=[f'L{layer[v]}:{v}' for v in range(n)])
    diameter = _diameter_geodesic(g, 0)
    radius = int(g.distance_rows(range(p)).min(axis=0).max())
    metadata = {'kind': 'tiling', 'group': f'family=tiling p={p} q={q}', 'p': p, 'q': q, 'layers': layers,
                'layer_sizes': layer_sizes, 'center': list(range(p)), 'radius': radius,
                'diameter': diameter, 'diameter_center': diameter.index(0), 'version': CONSTRUCTION_VERSION}
    return MetricGraph(n, adjacency, labels=g.labels, metadata=metadata)


def central_segment(g, length):
    """
    Subsegment of the recorded diameter geodesic with `length` edges, centred on the diameter's central vertex
    (one extra edge on the far side when the two halves are uneven).
    :return: list of vertex ids
    """
    diameter, mid = g.metadata['diameter'], g.metadata['diameter_center']
    if length > len(diameter) - 1:
        raise ValueError(f'Diameter has only {len(diameter) - 1} edges, asked for {length}')
    lo = max(0, min(mid - length // 2, len(diameter) - 1 - length))
    return diameter[lo:lo + length + 1]
