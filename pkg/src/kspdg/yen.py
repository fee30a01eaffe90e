"""Yen's k shortest simple paths over any adjacency-map view.

A view is ``Mapping[vertex, Mapping[vertex, weight]]`` of out-neighbours.
Deviation masks are passed to Dijkstra as filter sets, so a view is never
mutated and several generators can share one.

Ties between equal-distance paths are broken by the lexicographic order of
their vertex sequences, both inside Dijkstra and in the candidate heap.
"""

from __future__ import annotations

import heapq
from typing import Collection, Iterator, Mapping

from .graph import GraphError, Path

Adjacency = Mapping[int, Mapping[int, object]]


def dijkstra(adj: Adjacency, source: int, target: int,
             blocked_vertices: Collection[int] = (),
             blocked_edges: Collection[tuple[int, int]] = ()):
    """Lexicographically smallest shortest path, as ``(distance, vertices)`` or ``None``."""
    if source in blocked_vertices:
        return None
    heap = [(0, (source,))]
    settled = set()
    best = {source: 0}
    while heap:
        d, path = heapq.heappop(heap)
        u = path[-1]
        if u in settled:
            continue
        settled.add(u)
        if u == target:
            return d, path
        for v, w in adj.get(u, {}).items():
            if v in settled or v in blocked_vertices or (u, v) in blocked_edges:
                continue
            nd = d + w
            old = best.get(v)
            if old is None or nd <= old:
                best[v] = nd
                heapq.heappush(heap, (nd, path + (v,)))
    return None


def single_source_distances(adj: Adjacency, source: int) -> dict[int, object]:
    """Plain Dijkstra distances from ``source`` to every reachable vertex."""
    dist = {source: 0}
    heap = [(0, source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj.get(u, {}).items():
            nd = d + w
            if v not in dist or nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def shortest_distance(adj: Adjacency, source: int, target: int):
    """Shortest distance or ``None`` when unreachable."""
    return single_source_distances(adj, source).get(target)


class KspGenerator:
    """Lazily emits the simple ``source -> target`` paths in distance order."""

    def __init__(self, adj: Adjacency, source: int, target: int):
        self.adj = adj
        self.source = source
        self.target = target
        self.emitted: list[Path] = []
        self._heap: list[tuple[object, tuple[int, ...]]] = []
        self._seen: set[tuple[int, ...]] = set()
        self.exhausted = source == target

    def __iter__(self) -> Iterator[Path]:
        i = 0
        while True:
            p = self.get(i)
            if p is None:
                return
            yield p
            i += 1

    def get(self, i: int) -> Path | None:
        """The ``i``-th shortest path (0-based), generating as needed."""
        while len(self.emitted) <= i:
            if self.next_shortest() is None:
                return None
        return self.emitted[i]

    def next_shortest(self) -> Path | None:
        if self.exhausted:
            return None
        if not self.emitted:
            found = dijkstra(self.adj, self.source, self.target)
            if found is not None:
                self._seen.add(found[1])
                heapq.heappush(self._heap, found)
        else:
            self._deviate(self.emitted[-1])
        if not self._heap:
            self.exhausted = True
            return None
        d, vs = heapq.heappop(self._heap)
        path = Path(vs, d)
        self.emitted.append(path)
        return path

    def _deviate(self, last: Path) -> None:
        vs = last.vertices
        root_dist = 0
        for i in range(len(vs) - 1):
            spur = vs[i]
            root = vs[:i + 1]
            blocked_edges = {p.vertices[i:i + 2] for p in self.emitted
                             if len(p.vertices) > i + 1 and p.vertices[:i + 1] == root}
            found = dijkstra(self.adj, spur, self.target, blocked_vertices=set(root[:-1]),
                             blocked_edges=blocked_edges)
            if found is not None:
                d, spur_path = found
                total = root[:-1] + spur_path
                if total not in self._seen:
                    self._seen.add(total)
                    heapq.heappush(self._heap, (root_dist + d, total))
            root_dist = root_dist + self.adj[spur][vs[i + 1]]


def yen_ksp(adj: Adjacency, source: int, target: int, k: int) -> list[Path]:
    """Up to ``k`` shortest simple paths; fewer when the graph runs out."""
    if k < 1:
        raise GraphError(f"k must be >= 1, got {k}")
    for v in (source, target):
        if v not in adj:
            raise GraphError(f"unknown vertex {v}")
    gen = KspGenerator(adj, source, target)
    out = []
    for _ in range(k):
        p = gen.next_shortest()
        if p is None:
            break
        out.append(p)
    return out
