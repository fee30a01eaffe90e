from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import HealthCheck, settings

from kspdg.graph import DynamicGraph
from kspdg.partition import partition_from_sets

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# A six-edge subgraph with a short and a long 13-14 route.  The update makes
# the long route shortest; unit weights become {1/3 x3, 1/2 x4, 1 x8, 2 x3}.
DETOUR_EDGES = [(13, 16, 5), (14, 16, 3), (13, 18, 3), (17, 18, 2), (16, 17, 2), (14, 15, 3)]
DETOUR_UPDATE = {(13, 18): 1, (17, 18): 1, (16, 17): 1, (14, 15): 6}


@pytest.fixture
def detour_graph() -> DynamicGraph:
    # two extra subgraphs make 13 and 14 boundary vertices
    edges = DETOUR_EDGES + [(13, 20, 4), (14, 21, 4)]
    return DynamicGraph.from_edges(edges)


@pytest.fixture
def detour_partition(detour_graph):
    return partition_from_sets(detour_graph, {
        0: [(u, v) for u, v, _ in DETOUR_EDGES],
        1: [(13, 20)],
        2: [(14, 21)],
    }, z=6)


def random_graph(rng: random.Random, n: int, *, directed: bool = False, extra: float = 0.6,
                 max_weight: int = 9) -> DynamicGraph:
    """A random connected graph: spanning tree plus ``extra * n`` chords."""
    g = DynamicGraph(directed)
    for v in range(n):
        g.add_vertex(v)
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        u, v = order[i], order[rng.randrange(i)]
        g.add_edge(u, v, rng.randint(1, max_weight))
        if directed and rng.random() < 0.7:
            g.add_edge(v, u, rng.randint(1, max_weight))
    for _ in range(round(extra * n)):
        u, v = rng.sample(range(n), 2)
        if not g.has_edge(u, v):
            g.add_edge(u, v, rng.randint(1, max_weight))
    return g


def all_simple_paths(adj, s, t):
    """Every simple s-t path with its distance, by depth-first search."""
    out = []

    def dfs(u, path, d):
        if u == t:
            out.append((d, tuple(path)))
            return
        for v, w in adj.get(u, {}).items():
            if v not in path:
                path.append(v)
                dfs(v, path, d + w)
                path.pop()

    if s != t:
        dfs(s, [s], 0)
    return sorted(out)


def pairs(items):
    return list(itertools.combinations(items, 2))
