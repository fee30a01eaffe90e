"""The two-level path index: bounding paths per subgraph and the skeleton graph.

Level one keeps, for every boundary pair of every subgraph, up to ``xi``
bounding paths chosen under the initial-weight metric (one representative per
distinct vfrag count).  Their vfrag counts never change, so only distances
and the per-subgraph unit-weight multiset are maintained under updates.
Level two is the skeleton graph over boundary vertices, weighted by the
minimum lower bound distance across subgraphs.
"""

from __future__ import annotations

import bisect
import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Mapping, Sequence

from .graph import Edge, GraphError, Path, Snapshot, Vertex, Weight, WeightUpdate
from .mfp import MfpForest, compress, mfp_update
from .partition import Subgraph, SubgraphPartition
from .yen import KspGenerator

log = logging.getLogger(__name__)

ENUMERATION_FACTOR = 8


class IndexCorruption(RuntimeError):
    """An index invariant was found broken."""


@dataclass(frozen=True)
class BoundingPath:
    id: int
    subgraph: int
    vertices: tuple[Vertex, ...]
    phi: int
    # True when no other path in the subgraph has this vfrag count
    exclusive: bool = True

    def edges(self, directed: bool) -> list[Edge]:
        pairs = zip(self.vertices, self.vertices[1:])
        if directed:
            return list(pairs)
        return [(u, v) if u < v else (v, u) for u, v in pairs]


class UnitWeightMultiset:
    """Multiset of unit weights, each with a multiplicity (the edge's vfrag count).

    ``smallest_sum(phi)`` is a binary search over cached prefix sums; the cache
    is rebuilt lazily after any mutation.
    """

    def __init__(self, items: Iterable[tuple[Weight, int]] = ()):
        self._count: dict[Fraction, int] = {}
        self.total = 0
        self._keys: list[Fraction] | None = None
        for unit, mult in items:
            self.add(unit, mult)

    def add(self, unit: Weight, mult: int) -> None:
        unit = Fraction(unit)
        self._count[unit] = self._count.get(unit, 0) + mult
        self.total += mult
        self._keys = None

    def remove(self, unit: Weight, mult: int) -> None:
        unit = Fraction(unit)
        have = self._count.get(unit, 0)
        if have < mult:
            raise IndexCorruption(f"removing {mult} x {unit}, only {have} present")
        if have == mult:
            del self._count[unit]
        else:
            self._count[unit] = have - mult
        self.total -= mult
        self._keys = None

    def _rebuild(self) -> None:
        self._keys = sorted(self._count)
        self._cum_mult = list(itertools.accumulate(self._count[k] for k in self._keys))
        self._cum_sum = list(itertools.accumulate(self._count[k] * k for k in self._keys))

    def items(self) -> list[tuple[Fraction, int]]:
        if self._keys is None:
            self._rebuild()
        return [(k, self._count[k]) for k in self._keys]

    def smallest_sum(self, phi: int) -> Fraction:
        if phi < 0 or phi > self.total:
            raise IndexCorruption(f"phi={phi} outside multiset of size {self.total}")
        if phi == 0:
            return Fraction(0)
        if self._keys is None:
            self._rebuild()
        i = bisect.bisect_left(self._cum_mult, phi)
        before_mult = self._cum_mult[i - 1] if i else 0
        before_sum = self._cum_sum[i - 1] if i else Fraction(0)
        return before_sum + (phi - before_mult) * self._keys[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, UnitWeightMultiset) and self._count == other._count


def bound_distance(phi: int, multiset: UnitWeightMultiset) -> Fraction:
    """Sum of the ``phi`` smallest unit weights."""
    return multiset.smallest_sum(phi)


@dataclass(frozen=True)
class LowerBound:
    path: object
    lbd: Weight
    # 1: the returned path is the subgraph shortest path; 2: lbd is a bound distance
    claim: int


def select_lower_bound(candidates: Sequence[tuple]) -> LowerBound:
    """Pick the lower bounding path among ``(path, BD, D[, exclusive])`` tuples.

    Candidates come sorted by BD (equivalently by vfrag count).  The bound is
    certified at the first candidate whose vfrag count might be shared with
    an unlisted path, or at the last candidate: no unlisted path can be
    shorter than that candidate's BD.  If the best actual distance does not
    exceed it, that path is the subgraph shortest path; otherwise the
    certified BD is the tightest safe bound.
    """
    if not candidates:
        raise ValueError("no bounding paths")
    cert = len(candidates) - 1
    for i, c in enumerate(candidates):
        if len(c) > 3 and not c[3]:
            cert = i
            break
    best = min(range(len(candidates)), key=lambda i: candidates[i][2])
    bound = candidates[cert][1]
    if candidates[best][2] <= bound:
        return LowerBound(candidates[best][0], candidates[best][2], 1)
    return LowerBound(candidates[cert][0], bound, 2)


def compute_bounding_paths(w0_adj: Mapping[Vertex, Mapping[Vertex, int]], vi: Vertex, vj: Vertex, xi: int,
                           factor: int = ENUMERATION_FACTOR) -> list[tuple[tuple[Vertex, ...], int, bool]]:
    """Up to ``xi`` least-vfrag paths with distinct vfrag counts, as ``(vertices, phi, exclusive)``.

    Paths come from Yen under the initial weights, so they appear in vfrag
    order; at most ``factor * xi`` of them are examined.
    """
    if xi < 1:
        raise ValueError(f"xi must be >= 1, got {xi}")
    if vi not in w0_adj or vj not in w0_adj:
        return []
    gen = KspGenerator(w0_adj, vi, vj)
    reps: list[list] = []
    examined = 0
    complete = False
    while examined < factor * xi:
        p = gen.next_shortest()
        if p is None:
            complete = True
            break
        examined += 1
        if reps and p.distance == reps[-1][1]:
            reps[-1][2] = False
            continue
        if len(reps) == xi:
            complete = True
            break
        reps.append([p.vertices, p.distance, True])
    if reps and not complete:
        # cut off mid-enumeration: the last class may have unseen members
        reps[-1][2] = False
    return [(tuple(v), phi, ex) for v, phi, ex in reps]


@dataclass
class BoundaryPairEntry:
    pair: tuple[Vertex, Vertex]
    path_ids: list[int]
    lbd: Weight | None = None
    lower_path: int | None = None
    claim: int = 0


class EpIndex:
    """Edge -> ids of bounding paths through it; distances live in one shared table."""

    def __init__(self, distances: dict[int, Weight]):
        self.lists: dict[Edge, list[int]] = {}
        self.distances = distances

    def add(self, path: BoundingPath, directed: bool) -> None:
        for e in path.edges(directed):
            self.lists.setdefault(e, []).append(path.id)

    def paths_for(self, edge: Edge) -> list[int]:
        return self.lists.get(edge, [])

    def entries(self, edge: Edge) -> list[tuple[int, Weight]]:
        return [(p, self.distances[p]) for p in self.paths_for(edge)]

    def entry_count(self) -> int:
        return sum(len(v) for v in self.lists.values())


def ep_update(ep: EpIndex, edge: Edge, delta: Weight) -> list[tuple[int, Weight]]:
    out = []
    for p in ep.paths_for(edge):
        ep.distances[p] = ep.distances[p] + delta
        out.append((p, ep.distances[p]))
    return out


class SubgraphIndex:
    """Index shard for one subgraph: its weights, bounding paths and pair table."""

    def __init__(self, sg: Subgraph, w0: Mapping[Edge, int], weights: Mapping[Edge, Weight],
                 directed: bool, xi: int):
        self.sg = sg
        self.id = sg.id
        self.directed = directed
        self.xi = xi
        self.w0 = dict(w0)
        self.weights = dict(weights)
        self.multiset = UnitWeightMultiset((Fraction(weights[e]) / w0[e], w0[e]) for e in self.w0)
        self.paths: dict[int, BoundingPath] = {}
        self.distance: dict[int, Weight] = {}
        self.pairs: dict[tuple[Vertex, Vertex], BoundaryPairEntry] = {}
        self.ep = EpIndex(self.distance)
        self.forest: MfpForest | None = None
        self.dirty = False
        self.version = 0
        self._w0_adj = self._adjacency(self.w0)
        self._adj = None
        self._partials: dict[tuple[Vertex, Vertex], KspGenerator] = {}
        self._ondemand: dict[tuple[Vertex, Vertex], list] = {}

    def _adjacency(self, weights: Mapping[Edge, Weight]) -> dict[Vertex, dict[Vertex, Weight]]:
        adj: dict[Vertex, dict[Vertex, Weight]] = {v: {} for v in self.sg.vertices}
        for (u, v), w in weights.items():
            adj[u][v] = w
            if not self.directed:
                adj[v][u] = w
        return adj

    @property
    def adjacency(self) -> dict[Vertex, dict[Vertex, Weight]]:
        """Current-weight adjacency of the subgraph."""
        if self._adj is None:
            self._adj = self._adjacency(self.weights)
        return self._adj

    @property
    def initial_adjacency(self) -> dict[Vertex, dict[Vertex, int]]:
        return self._w0_adj

    def boundary_pairs(self) -> list[tuple[Vertex, Vertex]]:
        b = sorted(self.sg.boundary)
        if self.directed:
            return list(itertools.permutations(b, 2))
        return list(itertools.combinations(b, 2))

    def path_distance(self, vertices: Sequence[Vertex]) -> Weight:
        adj = self.adjacency
        return sum((adj[u][v] for u, v in zip(vertices, vertices[1:])), 0)

    def build(self, next_id) -> None:
        for a, b in self.boundary_pairs():
            found = compute_bounding_paths(self._w0_adj, a, b, self.xi)
            if not found:
                continue
            entry = BoundaryPairEntry((a, b), [])
            for vertices, phi, exclusive in found:
                bp = BoundingPath(next(next_id), self.id, vertices, phi, exclusive)
                self.paths[bp.id] = bp
                self.distance[bp.id] = self.path_distance(vertices)
                self.ep.add(bp, self.directed)
                entry.path_ids.append(bp.id)
            self.pairs[(a, b)] = entry
        self.refresh()

    def enable_compression(self, h: int = 128, bands: int = 32, seed: int = 0) -> None:
        self.forest = compress(self.ep.lists, self.distance, h=h, bands=bands, seed=seed)

    def _lower_bound(self, candidates: list[tuple[object, Weight, bool]]) -> LowerBound:
        rows = [(key, bound_distance(phi, self.multiset), d, ex) for key, phi, d, ex in candidates]
        return select_lower_bound(rows)

    def refresh(self) -> dict[tuple[Vertex, Vertex], Weight]:
        """Recompute LBD for every pair; return the pairs whose LBD changed."""
        changed = {}
        for pair, entry in self.pairs.items():
            rows = [(pid, self.paths[pid].phi, self.distance[pid], self.paths[pid].exclusive)
                    for pid in entry.path_ids]
            lb = self._lower_bound(rows)
            if lb.lbd != entry.lbd:
                changed[pair] = lb.lbd
            entry.lbd, entry.lower_path, entry.claim = lb.lbd, lb.path, lb.claim
        self.dirty = False
        return changed

    def apply(self, edge: Edge, new_weight: Weight) -> list[tuple[int, Weight]]:
        """Set one edge weight; shift the distances of the paths through it."""
        old = self.weights[edge]
        delta = new_weight - old
        if delta == 0:
            return []
        self.weights[edge] = new_weight
        w0 = self.w0[edge]
        self.multiset.remove(Fraction(old) / w0, w0)
        self.multiset.add(Fraction(new_weight) / w0, w0)
        if self.forest is not None:
            touched = mfp_update(self.forest, edge, delta) if edge in self.forest.locator else []
        else:
            touched = ep_update(self.ep, edge, delta)
        self._adj = None
        self._partials.clear()
        self.dirty = True
        self.version += 1
        return touched

    def lbd(self, a: Vertex, b: Vertex) -> Weight | None:
        entry = self.pairs.get(self._key(a, b))
        return None if entry is None else entry.lbd

    def _key(self, a: Vertex, b: Vertex) -> tuple[Vertex, Vertex]:
        if self.directed or a < b:
            return (a, b)
        return (b, a)

    def lower_bound_on_demand(self, a: Vertex, b: Vertex) -> Weight | None:
        """LBD between arbitrary members ``a -> b`` (query endpoints); ``None`` if disconnected."""
        key = (a, b) if self.directed else self._key(a, b)
        if key in self.pairs:
            return self.pairs[key].lbd
        found = self._ondemand.get(key)
        if found is None:
            found = compute_bounding_paths(self._w0_adj, key[0], key[1], self.xi)
            self._ondemand[key] = found
        if not found:
            return None
        rows = [(vs, phi, self.path_distance(vs), ex) for vs, phi, ex in found]
        return self._lower_bound(rows).lbd

    def partial_generator(self, a: Vertex, b: Vertex) -> KspGenerator:
        gen = self._partials.get((a, b))
        if gen is None:
            # other boundary vertices are masked: a segment crossing one belongs to a longer reference
            masked = self.sg.boundary - {a, b}
            adj = {u: {v: w for v, w in nbrs.items() if v not in masked}
                   for u, nbrs in self.adjacency.items() if u not in masked}
            gen = KspGenerator(adj, a, b)
            self._partials[(a, b)] = gen
        return gen

    def partial_paths(self, a: Vertex, b: Vertex, depth: int) -> tuple[list[Path], bool]:
        """First ``depth`` shortest ``a -> b`` paths inside the subgraph with no other
        boundary vertex on them, and whether that is all of them."""
        gen = self.partial_generator(a, b)
        gen.get(depth - 1)
        paths = gen.emitted[:depth]
        return paths, gen.exhausted and len(gen.emitted) <= depth

    def terminal_reach(self, blocked: frozenset, extra: frozenset = frozenset()) -> list[tuple[Vertex, Vertex]]:
        """Ordered terminal pairs joined inside the subgraph by a path avoiding ``blocked``.

        Terminals are the boundary vertices plus any of ``extra`` that lie in
        the subgraph; a path may not pass through a terminal.
        """
        term = (self.sg.boundary | (extra & self.sg.vertices)) - blocked
        adj = self.adjacency
        out = []
        for a in sorted(term):
            seen = {a}
            stack = [a]
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if w in seen or w in blocked:
                        continue
                    seen.add(w)
                    if w in term:
                        out.append((a, w))
                    else:
                        stack.append(w)
        return out

    def entries(self, edge: Edge) -> list[tuple[int, Weight]]:
        if self.forest is not None:
            return self.forest.entries(edge)
        return self.ep.entries(edge)


class SkeletonGraph:
    """Immutable weighted graph over boundary vertices; updates produce a new version."""

    def __init__(self, edges: Mapping[tuple[Vertex, Vertex], tuple[Weight, int]], directed: bool,
                 vertices: Iterable[Vertex], version: int = 0):
        self.edges = dict(edges)
        self.directed = directed
        self.vertices = frozenset(vertices)
        self.version = version
        adj: dict[Vertex, dict[Vertex, Weight]] = {v: {} for v in self.vertices}
        for (a, b), (w, _) in self.edges.items():
            adj[a][b] = w
            if not directed:
                adj[b][a] = w
        self.adjacency = adj

    def weight(self, a: Vertex, b: Vertex) -> Weight | None:
        key = (a, b) if self.directed or a < b else (b, a)
        found = self.edges.get(key)
        return None if found is None else found[0]

    def __len__(self) -> int:
        return len(self.vertices)

    def dump(self, stream: IO[str]) -> None:
        for (a, b), (w, _) in sorted(self.edges.items()):
            stream.write(f"k {a} {b} {w}\n")


@dataclass
class DtlpIndex:
    partition: SubgraphPartition
    xi: int
    directed: bool
    shards: dict[int, SubgraphIndex]
    skeleton: SkeletonGraph
    snapshot_version: int = 0
    eager: bool = False
    compressed: bool = False
    stats: dict = field(default_factory=dict)

    def shard_for_edge(self, edge: Edge) -> SubgraphIndex:
        try:
            return self.shards[self.partition.edge_owner[edge]]
        except KeyError:
            raise IndexCorruption(f"edge {edge} is in no subgraph") from None

    def pair_lbds(self, a: Vertex, b: Vertex) -> dict[int, Weight]:
        out = {}
        for sid in self.partition.locate_pair(a, b):
            lbd = self.shards[sid].lbd(a, b)
            if lbd is not None:
                out[sid] = lbd
        return out

    def bounding_signature(self) -> dict:
        """``(sg, pair) -> [(vertices, phi), ...]``; must never change after build."""
        return {(sid, pair): [(sh.paths[p].vertices, sh.paths[p].phi) for p in e.path_ids]
                for sid, sh in self.shards.items() for pair, e in sh.pairs.items()}

    def lbd_table(self) -> dict:
        return {(sid, pair): e.lbd for sid, sh in self.shards.items() for pair, e in sh.pairs.items()}

    def dump(self, stream: IO[str]) -> None:
        for sid in sorted(self.shards):
            sh = self.shards[sid]
            for (a, b), e in sorted(sh.pairs.items()):
                phis = ",".join(str(sh.paths[p].phi) for p in e.path_ids)
                stream.write(f"b {sid} {a} {b} {phis} {e.lbd}\n")
        self.skeleton.dump(stream)


def _skeleton_edges(shards: Mapping[int, SubgraphIndex], pairs: Iterable[tuple[Vertex, Vertex]] | None = None,
                    base: Mapping | None = None) -> dict:
    edges = dict(base or {})
    best: dict[tuple[Vertex, Vertex], tuple[Weight, int]] = {}
    for sid in sorted(shards):
        for pair, entry in shards[sid].pairs.items():
            if pairs is not None and pair not in pairs:
                continue
            cur = best.get(pair)
            if cur is None or entry.lbd < cur[0]:
                best[pair] = (entry.lbd, sid)
    if pairs is not None:
        for pair in pairs:
            edges.pop(pair, None)
    edges.update(best)
    return edges


def build_dtlp(partition: SubgraphPartition, snapshot: Snapshot, xi: int, *,
               compress_mfp: bool = False, eager: bool = False,
               mfp_h: int = 128, mfp_bands: int = 32, mfp_seed: int = 0,
               initial_weights: Mapping[Edge, int] | None = None) -> DtlpIndex:
    """Build both index levels from a partition and the snapshot's weights.

    ``initial_weights`` supplies the vfrag counts; it defaults to the graph's
    initial weights when the snapshot is version 0 and is otherwise required.
    """
    if xi < 1:
        raise ValueError(f"xi must be >= 1, got {xi}")
    if initial_weights is None:
        if snapshot.version != 0:
            raise ValueError("initial_weights required for a non-initial snapshot")
        initial_weights = snapshot.weights
    ids = itertools.count()
    shards = {}
    for sg in partition:
        w0 = {e: initial_weights[e] for e in sg.edges}
        w = {e: snapshot.weights[e] for e in sg.edges}
        shard = SubgraphIndex(sg, w0, w, snapshot.directed, xi)
        shard.build(ids)
        if compress_mfp:
            shard.enable_compression(mfp_h, mfp_bands, mfp_seed)
        shards[sg.id] = shard
    skeleton = SkeletonGraph(_skeleton_edges(shards), snapshot.directed, partition.boundary_vertices)
    return DtlpIndex(partition, xi, snapshot.directed, shards, skeleton, snapshot.version,
                     eager=eager, compressed=compress_mfp)


def apply_to_shards(index: DtlpIndex, updates: Sequence[WeightUpdate]) -> dict[int, dict]:
    """Push weight updates into their shards; return per-shard LBD changes."""
    changes: dict[int, dict] = {}
    for upd in updates:
        u, v = upd.edge
        edge = (u, v) if index.directed or u < v else (v, u)
        shard = index.shard_for_edge(edge)
        shard.apply(edge, upd.new_weight)
        if index.eager and shard.dirty:
            changes.setdefault(shard.id, {}).update(shard.refresh())
    for sid, shard in index.shards.items():
        if shard.dirty:
            changes.setdefault(sid, {}).update(shard.refresh())
    return changes


def update_dtlp(index: DtlpIndex, updates: Sequence[WeightUpdate],
                snapshot_version: int | None = None) -> set[tuple[Vertex, Vertex]]:
    """Apply updates and refresh LBD/MBD; return skeleton edges whose weight changed."""
    changes = apply_to_shards(index, updates)
    pairs = {p for ch in changes.values() for p in ch}
    old = index.skeleton
    if pairs:
        edges = _skeleton_edges(index.shards, pairs, base=old.edges)
    else:
        edges = old.edges
    changed = {p for p in pairs if old.edges.get(p, (None,))[0] != edges.get(p, (None,))[0]}
    if changed:
        index.skeleton = SkeletonGraph(edges, index.directed, old.vertices, old.version + 1)
    index.snapshot_version = index.snapshot_version + 1 if snapshot_version is None else snapshot_version
    return changed
