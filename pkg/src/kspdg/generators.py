"""Small synthetic graphs for tests, examples and benchmarks."""

from __future__ import annotations

import random

from .graph import DynamicGraph


def grid_road_graph(n: int, rng: random.Random, *, directed: bool = False, max_weight: int = 100,
                    drop: float = 0.2, diagonals: float = 0.1) -> DynamicGraph:
    """A road-like near-planar graph on ``n`` vertices.

    Vertices sit on a grid about ``sqrt(n)`` wide; grid edges are dropped with
    probability ``drop`` unless that would disconnect the graph, and a few
    diagonals are added.  Directed graphs get both arcs of each road with
    independent weights, plus some one-way streets.
    """
    width = max(2, round(n ** 0.5))
    coords = {v: divmod(v, width) for v in range(n)}
    where = {c: v for v, c in coords.items()}
    candidates = []
    for v, (r, c) in coords.items():
        for dr, dc in ((0, 1), (1, 0)):
            u = where.get((r + dr, c + dc))
            if u is not None:
                candidates.append((v, u))
        for dc in (1, -1):
            u = where.get((r + 1, c + dc))
            if u is not None and rng.random() < diagonals:
                candidates.append((v, u))
    rng.shuffle(candidates)
    # keep a random spanning tree, then keep the rest with probability 1 - drop
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    kept, spare = [], []
    for u, v in candidates:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
            kept.append((u, v))
        else:
            spare.append((u, v))
    kept.extend(e for e in spare if rng.random() >= drop)
    g = DynamicGraph(directed)
    for v in range(n):
        g.add_vertex(v)
    for u, v in sorted(kept):
        if directed:
            g.add_edge(u, v, rng.randint(1, max_weight))
            if rng.random() < 0.9:
                g.add_edge(v, u, rng.randint(1, max_weight))
        else:
            g.add_edge(u, v, rng.randint(1, max_weight))
    return g


def sparse_random_graph(n: int, rng: random.Random, *, directed: bool = False, max_weight: int = 100,
                        chords: float = 0.25) -> DynamicGraph:
    """A random spanning tree plus ``chords * n`` extra random edges."""
    g = DynamicGraph(directed)
    for v in range(n):
        g.add_vertex(v)
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        u, v = order[i], order[rng.randrange(i)]
        g.add_edge(u, v, rng.randint(1, max_weight))
        if directed:
            g.add_edge(v, u, rng.randint(1, max_weight))
    for _ in range(round(chords * n)):
        u, v = rng.sample(range(n), 2)
        if not g.has_edge(u, v):
            g.add_edge(u, v, rng.randint(1, max_weight))
    return g


def random_instance_graph(n: int, rng: random.Random, directed: bool = False) -> DynamicGraph:
    """Three in four are road-like grids; the rest are sparse random graphs."""
    if rng.random() < 0.75:
        return grid_road_graph(n, rng, directed=directed)
    return sparse_random_graph(n, rng, directed=directed)
