"""
Exact k shortest paths on a changing graph
==========================================

Build a random road-like graph, partition it, index it, and ask for the
five shortest simple paths between two vertices.  The answer is checked
against plain Yen on the whole graph.
"""

from __future__ import annotations

import random

from kspdg import DynamicGraph, build_dtlp, ksp_query, partition, yen_ksp

rng = random.Random(7)

# a grid with a few diagonals, integer initial weights
side = 8
g = DynamicGraph()
vid = lambda r, c: r * side + c + 1
for r in range(side):
    for c in range(side):
        if c + 1 < side:
            g.add_edge(vid(r, c), vid(r, c + 1), rng.randint(2, 9))
        if r + 1 < side:
            g.add_edge(vid(r, c), vid(r + 1, c), rng.randint(2, 9))
        if r + 1 < side and c + 1 < side and rng.random() < 0.2:
            g.add_edge(vid(r, c), vid(r + 1, c + 1), rng.randint(3, 12))
print(g)

# subgraphs of at most 12 vertices; shared vertices become the skeleton
part = partition(g, 12)
print(f"{len(part)} subgraphs, {len(part.boundary_vertices)} boundary vertices")
print("vertices shared by n subgraphs:", part.shared_counts())

index = build_dtlp(part, g.snapshot(), xi=2)
print(f"skeleton: {len(index.skeleton)} vertices, {len(index.skeleton.edges)} edges")

s, t = 1, side * side
res = ksp_query(index, s, t, 5)
for p in res.paths:
    print(f"  {str(p.distance):>4}  {' '.join(map(str, p.vertices))}")
print(f"references opened: {res.iterations}")

expected = [p.distance for p in yen_ksp(g.snapshot().adjacency(), s, t, 5)]
assert res.distances == expected
print("matches whole-graph Yen:", expected)
