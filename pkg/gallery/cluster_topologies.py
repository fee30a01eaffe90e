"""
Same answers on any number of workers
=====================================

The cluster runtime splits the shards across subgraph workers and runs
query sessions on query workers; everything travels as messages through
a seeded scheduler.  Changing the worker count changes the traffic, not
the result.
"""

from __future__ import annotations

import random

from kspdg import Cluster, WeightVariationModel, build_dtlp, partition
from kspdg.generators import random_instance_graph


def fresh():
    g = random_instance_graph(50, random.Random(5))
    return g, build_dtlp(partition(g, 8), g.snapshot(), xi=2)


g, _ = fresh()
rng = random.Random(6)
queries = [(*rng.sample(sorted(g.vertices), 2), 3) for _ in range(12)]

outputs = {}
for workers in (1, 2, 4, 8):
    # the cluster takes ownership of its index, so each run gets its own
    g, index = fresh()
    cluster = Cluster(index, workers=workers, seed=1)
    model = WeightVariationModel(seed=2)
    for snap in (1, 2):
        batch = model.next_batch(g, snap)
        g.apply_snapshot(batch.updates, batch.timestamp)
        cluster.route_update(batch.updates)
    results = cluster.process_queries(queries)
    outputs[workers] = "".join(r.format() for r in results)
    busiest = max(cluster.load().items(), key=lambda kv: kv[1])
    print(f"{workers} workers: {len(cluster.transcript)} messages, busiest {busiest}")

assert len(set(outputs.values())) == 1
print(outputs[1].splitlines()[0], "...")
print("first transcript lines:")
print("\n".join(cluster.transcript[:5]))
