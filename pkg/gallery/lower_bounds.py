"""
Bound distances from unit weights
=================================

Each edge is cut into as many virtual fragments as its initial weight.
A path's fragment count never changes, and the sum of that many of the
smallest fragment weights in its subgraph can never exceed its current
length.  Here a six-edge subgraph is updated and the bounds recomputed.
"""

from __future__ import annotations

from fractions import Fraction

from kspdg import DynamicGraph, WeightUpdate, bound_distance, build_dtlp, update_dtlp
from kspdg.partition import partition_from_sets

inner = [(13, 16, 5), (14, 16, 3), (13, 18, 3), (17, 18, 2), (16, 17, 2), (14, 15, 3)]
g = DynamicGraph.from_edges(inner + [(13, 20, 4), (14, 21, 4)])
part = partition_from_sets(g, {0: [e[:2] for e in inner], 1: [(13, 20)], 2: [(14, 21)]})
index = build_dtlp(part, g.snapshot(), xi=2)
shard = index.shards[0]


def show(title):
    entry = shard.pairs[(13, 14)]
    print(title)
    for pid in entry.path_ids:
        bp = shard.paths[pid]
        bd = bound_distance(bp.phi, shard.multiset)
        print(f"  {'-'.join(map(str, bp.vertices)):<16} phi={bp.phi:<3} BD={str(bd):<5} D={shard.distance[pid]}")
    print(f"  lower bound {entry.lbd} (exact: {entry.claim == 1})")


show("initial weights, every unit weight is 1")

updates = [WeightUpdate((13, 18), 1), WeightUpdate((17, 18), 1), WeightUpdate((16, 17), 1),
           WeightUpdate((14, 15), 6)]
g.apply_snapshot(updates)
update_dtlp(index, updates)
print("unit weights:", [(str(u), m) for u, m in shard.multiset.items()])
show("after the update")
assert bound_distance(8, shard.multiset) == 4
assert shard.multiset.smallest_sum(10) == Fraction(6)
