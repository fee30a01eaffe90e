"""
Compressing the edge-to-path index
==================================

Neighbouring edges tend to lie on the same bounding paths.  MinHash
signatures with banded hashing group such edges, and each group's path
lists are folded into a prefix tree whose leaves are edges.  The
compressed index answers the same lookups and takes the same updates.
"""

from __future__ import annotations

import random

import numpy as np

from kspdg import build_dtlp, partition
from kspdg.generators import random_instance_graph
from kspdg.mfp import PeMatrix, estimate_jaccard, minhash_signatures

rng = random.Random(2)
g = random_instance_graph(60, rng)
part = partition(g, 20)
plain = build_dtlp(part, g.snapshot(), xi=4)
packed = build_dtlp(part, g.snapshot(), xi=4, compress_mfp=True)

entries = sum(sh.ep.entry_count() for sh in plain.shards.values())
nodes = sum(sh.forest.node_count() for sh in packed.shards.values())
print(f"EP-Index entries {entries}, forest nodes {nodes} ({nodes / entries:.0%})")

shard = packed.shards[0]
print("\n".join(shard.forest.dump()[:12]))

for sid, sh in plain.shards.items():
    for e in sh.ep.lists:
        assert sorted(packed.shards[sid].forest.paths_for(e)) == sorted(sh.ep.paths_for(e))

# the signature agreement rate estimates Jaccard similarity
errors = []
for trial in range(200):
    a = set(rng.sample(range(300), rng.randint(1, 300)))
    b = set(rng.sample(range(300), rng.randint(1, 300)))
    sig = minhash_signatures(PeMatrix.from_lists({(0, 1): a, (1, 2): b}), seed=trial)
    errors.append(estimate_jaccard(sig.column((0, 1)), sig.column((1, 2))) - len(a & b) / len(a | b))
print(f"estimator error: mean {np.mean(errors):+.3f}, 95th pct |err| {np.percentile(np.abs(errors), 95):.3f}")
