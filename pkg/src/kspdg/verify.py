"""Randomized instances and the differential check against whole-graph Yen."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .dtlp import DtlpIndex, build_dtlp, update_dtlp
from .engine import KspResult, ksp_query
from .generators import random_instance_graph
from .graph import DynamicGraph, UpdateBatch, Weight
from .partition import SubgraphPartition, partition
from .simulate import WeightVariationModel
from .yen import yen_ksp


@dataclass(frozen=True)
class InstanceConfig:
    """The space random instances are drawn from."""

    n_range: tuple[int, int] = (20, 60)
    z_choices: tuple[int, ...] = (5, 10, 20)
    xi_choices: tuple[int, ...] = (1, 2, 4)
    k_choices: tuple[int, ...] = (1, 2, 5, 10)
    snapshot_range: tuple[int, int] = (0, 5)
    alpha_choices: tuple[float, ...] = (0.0, 0.35, 0.8)
    tau_choices: tuple[float, ...] = (0.3, 0.9)
    directed_share: float = 0.2
    queries: int = 1


@dataclass
class Instance:
    seed: int
    graph: DynamicGraph
    partition: SubgraphPartition
    index: DtlpIndex
    batches: list[UpdateBatch]
    queries: list[tuple[int, int, int]]
    z: int
    xi: int
    model: WeightVariationModel

    def describe(self) -> str:
        g = self.graph
        return (f"seed={self.seed} n={len(g.vertices)} m={len(g.edges)} {g.mode} z={self.z} xi={self.xi} "
                f"snapshots={len(self.batches)} alpha={self.model.alpha} tau={self.model.tau}")


def random_instance(seed: int, config: InstanceConfig = InstanceConfig(), *, compress: bool = False,
                    apply_updates: bool = True) -> Instance:
    """Draw one instance; with ``apply_updates`` the graph and index end at the last snapshot."""
    rng = random.Random(seed)
    n = rng.randint(*config.n_range)
    g = random_instance_graph(n, rng, directed=rng.random() < config.directed_share)
    z = rng.choice(config.z_choices)
    xi = rng.choice(config.xi_choices)
    part = partition(g, z)
    index = build_dtlp(part, g.snapshot(), xi, compress_mfp=compress)
    model = WeightVariationModel(rng.choice(config.alpha_choices), rng.choice(config.tau_choices),
                                 seed=rng.randrange(2**31), trend=rng.random() < 0.5)
    # variation is relative to the initial weights, so batches can be drawn up front
    batches = model.batches(g, rng.randint(*config.snapshot_range))
    if apply_updates:
        for b in batches:
            g.apply_snapshot(b.updates, b.timestamp)
            update_dtlp(index, b.updates)
    queries = []
    for _ in range(config.queries):
        s, t = rng.sample(sorted(g.vertices), 2)
        queries.append((s, t, rng.choice(config.k_choices)))
    return Instance(seed, g, part, index, batches, queries, z, xi, model)


@dataclass
class Mismatch:
    instance: str
    query: tuple[int, int, int]
    got: list[Weight]
    expected: list[Weight]


@dataclass
class VerifyReport:
    instances: int = 0
    queries: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)
    bound_violations: int = 0
    exhausted: int = 0
    iterations: list[int] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.mismatches and not self.bound_violations

    def summary(self) -> str:
        its = self.iterations
        mean = sum(its) / len(its) if its else 0.0
        return (f"instances {self.instances} queries {self.queries} mismatches {len(self.mismatches)} "
                f"bound_violations {self.bound_violations} exhausted {self.exhausted} "
                f"mean_iterations {mean:.2f} seconds {self.seconds:.1f}")


def check_query(instance: Instance, s: int, t: int, k: int, result: KspResult | None = None) -> tuple[KspResult, list[Weight]]:
    """Run the engine (unless ``result`` is given) and the oracle; return both."""
    if result is None:
        result = ksp_query(instance.index, s, t, k)
    oracle = yen_ksp(instance.graph.snapshot().adjacency(), s, t, k)
    return result, [p.distance for p in oracle]


def verify_instances(count: int, seed: int = 0, config: InstanceConfig = InstanceConfig(), *,
                     compress: bool = False, on_instance=None) -> VerifyReport:
    """Differential check of ``count`` random instances seeded ``seed, seed+1, ...``."""
    report = VerifyReport()
    start = time.perf_counter()
    for i in range(count):
        inst = random_instance(seed + i, config, compress=compress)
        report.instances += 1
        for s, t, k in inst.queries:
            result, expected = check_query(inst, s, t, k)
            report.queries += 1
            report.iterations.append(result.iterations)
            report.exhausted += result.exhausted
            report.bound_violations += len(result.bound_violations)
            if result.distances != expected:
                report.mismatches.append(Mismatch(inst.describe(), (s, t, k), result.distances, expected))
        if on_instance is not None:
            on_instance(inst)
    report.seconds = time.perf_counter() - start
    return report
