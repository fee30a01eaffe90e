"""
Keeping the index current
=========================

Weights drift snapshot by snapshot.  The index only shifts the distances
of bounding paths that cross a changed edge and re-derives the lower
bounds; the bounding paths themselves never change.  After each snapshot
the same query is answered again and compared with a fresh Yen run.
"""

from __future__ import annotations

import random

from kspdg import WeightVariationModel, build_dtlp, ksp_query, partition, update_dtlp, yen_ksp
from kspdg.generators import random_instance_graph

rng = random.Random(3)
g = random_instance_graph(60, rng)
index = build_dtlp(partition(g, 10), g.snapshot(), xi=2)
signature = index.bounding_signature()

model = WeightVariationModel(alpha=0.35, tau=0.30, seed=11)
vs = sorted(g.vertices)
s, t, k = vs[0], vs[-1], 4
for snap in range(1, 6):
    batch = model.next_batch(g, snap)
    g.apply_snapshot(batch.updates, batch.timestamp)
    changed = update_dtlp(index, batch.updates)
    res = ksp_query(index, s, t, k)
    oracle = [p.distance for p in yen_ksp(g.snapshot().adjacency(), s, t, k)]
    print(f"snapshot {snap}: {len(batch.updates)} updates, {len(changed)} skeleton edges moved, "
          f"{res.iterations} references, distances {[float(d) for d in res.distances]}")
    assert res.distances == oracle

# vfrag counts are fixed, so the bounding paths never need recomputing
assert index.bounding_signature() == signature
print("bounding paths unchanged after", index.snapshot_version, "snapshots")
