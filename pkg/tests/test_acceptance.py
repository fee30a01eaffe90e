"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

from __future__ import annotations

import os
import random
from fractions import Fraction

import pytest

from kspdg.dtlp import bound_distance, build_dtlp, update_dtlp, UnitWeightMultiset
from kspdg.engine import ksp_query, verify_lower_bound_lemma
from kspdg.graph import load_dimacs
from kspdg.mfp import PeMatrix, estimate_jaccard, minhash_signatures
from kspdg.partition import partition
from kspdg.runtime import Cluster
from kspdg.simulate import WeightVariationModel
from kspdg.verify import InstanceConfig, random_instance, verify_instances
from kspdg.yen import shortest_distance

from .conftest import random_graph

INSTANCES = 1000


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def test_c01_oracle_equivalence(report):
    rep = verify_instances(INSTANCES, seed=0)
    ok = not rep.mismatches and rep.instances >= 1000
    report(1, ok, f"{rep.summary()}; first mismatch: {rep.mismatches[:1]}")


def test_c02_lower_bound_soundness(report):
    checked = violations = claim_one = 0
    for seed in range(INSTANCES):
        inst = random_instance(seed)
        for shard in inst.index.shards.values():
            adj = shard.adjacency
            for (a, b), entry in shard.pairs.items():
                true = shortest_distance(adj, a, b)
                checked += 1
                bad = entry.lbd > true
                for pid in entry.path_ids:
                    bad |= bound_distance(shard.paths[pid].phi, shard.multiset) > shard.distance[pid]
                if entry.claim == 1:
                    claim_one += 1
                    bad |= entry.lbd != true
                violations += bad
    report(2, violations == 0, f"{checked} pairs, {claim_one} certified exact, {violations} violations")


def test_c03_skeleton_lower_bound(report):
    checked = 0
    violations = []
    for seed in range(INSTANCES):
        inst = random_instance(seed)
        rng = random.Random(seed)
        vs = sorted(inst.graph.vertices)
        pairs = [tuple(rng.sample(vs, 2)) for _ in range(200)]
        rep = verify_lower_bound_lemma(inst.graph.snapshot(), inst.index, pairs)
        checked += rep.checked
        violations.extend(rep.violations)
    report(3, not violations, f"{checked} pairs over {INSTANCES} instances, {len(violations)} violations")


def test_c04_bound_distance_fixture(report):
    updated = UnitWeightMultiset([(Fraction(1, 3), 3), (Fraction(1, 2), 4), (1, 8), (2, 3)])
    ones = UnitWeightMultiset([(1, 18)])
    a, b = bound_distance(8, updated), bound_distance(8, ones)
    report(4, a == 4 and b == 8, f"BD(updated, 8) = {a}, BD(all ones, 8) = {b}")


def test_c05_iteration_bound(report):
    config = InstanceConfig(snapshot_range=(0, 0))
    worst = []
    for seed in range(200):
        inst = random_instance(seed, config)
        s, t, k = inst.queries[0]
        its = ksp_query(inst.index, s, t, k).iterations
        if its > k:
            worst.append((seed, its, k))
    report(5, not worst, f"200 initial-snapshot instances, {len(worst)} exceed k: {worst[:3]}")


def test_c06_phi_stability(report):
    bad = []
    rng = random.Random(6)
    for case in range(10):
        inst = random_instance(10_000 + case, apply_updates=False)
        g, index = inst.graph, inst.index
        signature = index.bounding_signature()
        for snap in range(1, 101):
            model = WeightVariationModel(rng.choice((0.0, 0.35, 0.8)), rng.choice((0.3, 0.9)),
                                         seed=rng.randrange(2**31))
            batch = model.next_batch(g, snap)
            g.apply_snapshot(batch.updates, batch.timestamp)
            update_dtlp(index, batch.updates)
        rebuilt = build_dtlp(inst.partition, g.snapshot(), inst.xi, initial_weights=g.initial_weights)
        same = (index.bounding_signature() == signature == rebuilt.bounding_signature()
                and index.lbd_table() == rebuilt.lbd_table()
                and index.skeleton.edges == rebuilt.skeleton.edges)
        if not same:
            bad.append(inst.describe())
    report(6, not bad, f"10 instances x 100 snapshots, {len(bad)} differ from rebuild {bad[:1]}")


def test_c07_mfp_lossless(report):
    bad = []
    nodes = entries = keys = 0
    for seed in range(INSTANCES):
        plain = random_instance(seed)
        packed = random_instance(seed, compress=True)
        for sid, shard in plain.index.shards.items():
            other = packed.index.shards[sid]
            nodes += other.forest.node_count()
            entries += shard.ep.entry_count()
            keys += len(shard.ep.lists)
            same = shard.distance == other.distance and all(
                sorted(other.forest.paths_for(e)) == sorted(shard.ep.paths_for(e)) for e in shard.ep.lists)
            # tail nodes stand in for the EP-Index keys one for one
            small = other.forest.node_count() <= shard.ep.entry_count() + len(shard.ep.lists)
            if not (same and small):
                bad.append((seed, sid))
    report(7, not bad and nodes <= entries, f"{INSTANCES} instances, forest nodes {nodes} vs EP entries {entries} + keys {keys}, "
                       f"{len(bad)} failing shards")


def test_c08_minhash_estimator(report):
    rng = random.Random(8)
    close = 0
    for trial in range(1000):
        universe = rng.randint(20, 400)
        a = rng.sample(range(universe), rng.randint(1, universe))
        b = rng.sample(range(universe), rng.randint(1, universe))
        sig = minhash_signatures(PeMatrix.from_lists({(0, 1): a, (1, 2): b}), h=128, bands=32, seed=trial)
        true = len(set(a) & set(b)) / len(set(a) | set(b))
        close += abs(estimate_jaccard(sig.column((0, 1)), sig.column((1, 2))) - true) <= 0.1
    report(8, close >= 950, f"{close}/1000 estimates within 0.1")


def _workload(workers: int, seed: int = 9):
    rng = random.Random(seed)
    g = random_graph(rng, 60, extra=0.8)
    index = build_dtlp(partition(g, 10), g.snapshot(), 2)
    cluster = Cluster(index, workers=workers, seed=seed)
    model = WeightVariationModel(seed=seed)
    vs = sorted(g.vertices)
    out = []
    for epoch in range(3):
        if epoch:
            batch = model.next_batch(g, epoch)
            g.apply_snapshot(batch.updates, batch.timestamp)
            cluster.route_update(batch.updates)
        qs = [(*rng.sample(vs, 2), rng.choice((1, 2, 5, 10))) for _ in range(35)]
        out.extend(r.format() for r in cluster.process_queries(qs))
    return "".join(out), cluster.transcript


def test_c09_topology_independence(report):
    runs = {w: _workload(w) for w in (1, 2, 4, 8)}
    files = {text for text, _ in runs.values()}
    replay = all(_workload(w)[1] == runs[w][1] for w in runs)
    report(9, len(files) == 1 and replay,
           f"{len(files)} distinct result file(s) over N_s in (1, 2, 4, 8); transcripts replay: {replay}")


NY_GRAPH = os.environ.get("KSPDG_NY_GRAPH", "")


@pytest.mark.skipif(not os.path.exists(NY_GRAPH), reason="set KSPDG_NY_GRAPH to the NY DIMACS file")
def test_c10_scale_smoke(report):
    with open(NY_GRAPH, "rb") as fh:
        g = load_dimacs(fh)
    index = build_dtlp(partition(g, 200), g.snapshot(), 1)
    nb = len(index.skeleton.vertices)
    ratio = nb / len(g.vertices)
    report(10, ratio < 0.15, f"skeleton vertices {nb} of {len(g.vertices)} "
                             f"(ratio {ratio:.3f}); reference count 24461")
