"""Desk-scale timing of index build, update epochs and queries on the cluster runtime."""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import asdict, dataclass, field

from .dtlp import build_dtlp
from .graph import DynamicGraph
from .partition import partition
from .runtime import Cluster
from .simulate import WeightVariationModel


@dataclass
class BenchReport:
    vertices: int
    edges: int
    subgraphs: int
    skeleton_vertices: int
    build_seconds: float
    update_seconds: list[float] = field(default_factory=list)
    query_seconds: list[float] = field(default_factory=list)
    iterations: list[int] = field(default_factory=list)
    throughput: float = 0.0
    load: dict[str, int] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def summary(self) -> dict:
        def stats(xs):
            return {"mean": statistics.fmean(xs), "max": max(xs)} if xs else {}

        out = asdict(self)
        out["update_latency"] = stats(self.update_seconds)
        out["query_latency"] = stats(self.query_seconds)
        out["mean_iterations"] = statistics.fmean(self.iterations) if self.iterations else 0.0
        return out


def run_bench(graph: DynamicGraph, *, z: int, xi: int, k: int, snapshots: int, queries: int,
              alpha: float = 0.35, tau: float = 0.30, workers: int = 1, seed: int = 0,
              compress: bool = False, trend: bool = False) -> BenchReport:
    """Build, then alternate update epochs with query batches.  ``graph`` is mutated."""
    t0 = time.perf_counter()
    part = partition(graph, z)
    index = build_dtlp(part, graph.snapshot(), xi, compress_mfp=compress)
    build = time.perf_counter() - t0
    report = BenchReport(len(graph.vertices), len(graph.edges), len(part.subgraphs),
                         len(part.boundary_vertices), build)
    model = WeightVariationModel(alpha, tau, seed=seed, trend=trend)
    report.metadata = {**model.metadata(), "z": z, "xi": xi, "k": k, "workers": workers,
                       "compress": "mfp" if compress else "ep"}
    cluster = Cluster(index, workers=workers, seed=seed, deterministic=False)
    rng = random.Random(seed)
    vs = sorted(graph.vertices)
    per_round = max(1, queries // max(1, snapshots + 1))
    answered = 0
    query_time = 0.0
    for rnd in range(snapshots + 1):
        if rnd:
            batch = model.next_batch(graph, rnd)
            graph.apply_snapshot(batch.updates, batch.timestamp)
            t = time.perf_counter()
            cluster.route_update(batch.updates)
            report.update_seconds.append(time.perf_counter() - t)
        for _ in range(min(per_round, queries - answered)):
            s, tgt = rng.sample(vs, 2)
            t = time.perf_counter()
            res = cluster.process_query(s, tgt, k)
            dt = time.perf_counter() - t
            query_time += dt
            report.query_seconds.append(dt)
            report.iterations.append(res.iterations)
            answered += 1
    report.throughput = answered / query_time if query_time else 0.0
    report.load = cluster.load()
    return report
