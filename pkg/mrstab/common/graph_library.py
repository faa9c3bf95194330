'''Small hand-checkable graphs used as fixtures and brute-force oracle inputs'''
from mrstab.common.metric_graph import build_graph, from_networkx

import networkx as nx


def path_graph(n):
    ''' Vertices 0..n-1 in a line '''
    return from_networkx(nx.path_graph(n), metadata={'family': 'path', 'n': n})


def cycle_graph(n):
    return from_networkx(nx.cycle_graph(n), metadata={'family': 'cycle', 'n': n})


def cycle_with_chords(n, chords):
    ''' n-cycle plus extra chords given as vertex pairs '''
    edges = [(i, (i + 1) % n) for i in range(n)]
    present = {tuple(sorted(e)) for e in edges}
    for u, v in chords:
        if tuple(sorted((u, v))) not in present:
            edges.append((u, v))
            present.add(tuple(sorted((u, v))))
    return build_graph(edges, metadata={'family': 'cycle_with_chords', 'n': n, 'chords': [list(c) for c in chords]})


def theta_graph(a, b, c):
    ''' Two poles joined by three internally disjoint paths with a, b and c edges (at most one of them 1) '''
    lengths = sorted([a, b, c])
    if lengths[0] < 1 or lengths[1] < 2:
        raise ValueError(f'Theta graph needs path lengths >= 1 with at most one equal to 1, got {(a, b, c)}')
    edges, nxt = [], 2
    for length in (a, b, c):
        prev = 0
        for _ in range(length - 1):
            edges.append((prev, nxt))
            prev = nxt
            nxt += 1
        edges.append((prev, 1))
    return build_graph(edges, metadata={'family': 'theta', 'lengths': [a, b, c]})


def grid_graph(rows, cols):
    return from_networkx(nx.grid_2d_graph(rows, cols), metadata={'family': 'grid', 'rows': rows, 'cols': cols})


def balanced_tree(branching, height):
    return from_networkx(nx.balanced_tree(branching, height),
                         metadata={'family': 'tree', 'branching': branching, 'height': height})


def ladder_graph(n):
    return from_networkx(nx.ladder_graph(n), metadata={'family': 'ladder', 'n': n})


def fixture_graphs():
    ''' The small-graph fixture set, keyed by name. Every graph has at most 60 vertices '''
    return {
        'path_9': path_graph(9),
        'cycle_6': cycle_graph(6),
        'cycle_9': cycle_graph(9),
        'cycle_12': cycle_graph(12),
        'cycle_6_chord': cycle_with_chords(6, [(0, 3)]),
        'cycle_8_chord': cycle_with_chords(8, [(1, 5)]),
        'cycle_10_chords': cycle_with_chords(10, [(0, 5), (2, 7)]),
        'cycle_12_chord': cycle_with_chords(12, [(0, 4)]),
        'cycle_14_chords': cycle_with_chords(14, [(0, 7), (3, 10), (1, 12)]),
        'theta_3_3_3': theta_graph(3, 3, 3),
        'theta_2_4_6': theta_graph(2, 4, 6),
        'theta_1_5_7': theta_graph(1, 5, 7),
        'theta_4_4_8': theta_graph(4, 4, 8),
        'grid_3x6': grid_graph(3, 6),
        'grid_5x5': grid_graph(5, 5),
        'grid_4x9': grid_graph(4, 9),
        'ladder_8': ladder_graph(8),
        'tree_2_4': balanced_tree(2, 4),
        'tree_3_3': balanced_tree(3, 3),
        'wheel_9': from_networkx(nx.wheel_graph(9), metadata={'family': 'wheel', 'n': 9}),
        'petersen': from_networkx(nx.petersen_graph(), metadata={'family': 'petersen'}),
    }
