"""Breadth-first partitioning into edge-disjoint subgraphs of at most ``z`` vertices."""

from __future__ import annotations

import io
import random
from collections import deque
from dataclasses import dataclass
from typing import IO, Iterable

from .graph import DynamicGraph, Edge, GraphError, Vertex


@dataclass(frozen=True)
class Subgraph:
    id: int
    vertices: frozenset[Vertex]
    edges: frozenset[Edge]
    boundary: frozenset[Vertex]

    def __len__(self) -> int:
        return len(self.vertices)


class SubgraphPartition:
    """Subgraphs plus the vertex/edge lookups every later stage needs."""

    def __init__(self, subgraphs: Iterable[Subgraph], z: int):
        self.subgraphs: list[Subgraph] = sorted(subgraphs, key=lambda sg: sg.id)
        self.z = z
        self._by_id = {sg.id: sg for sg in self.subgraphs}
        self.vertex_to_subgraphs: dict[Vertex, frozenset[int]] = {}
        members: dict[Vertex, set[int]] = {}
        self.edge_owner: dict[Edge, int] = {}
        for sg in self.subgraphs:
            for v in sg.vertices:
                members.setdefault(v, set()).add(sg.id)
            for e in sg.edges:
                if e in self.edge_owner:
                    raise GraphError(f"edge {e} in subgraphs {self.edge_owner[e]} and {sg.id}")
                self.edge_owner[e] = sg.id
        self.vertex_to_subgraphs = {v: frozenset(s) for v, s in members.items()}
        self.boundary_vertices = frozenset(v for v, s in members.items() if len(s) >= 2)

    def __iter__(self):
        return iter(self.subgraphs)

    def __len__(self) -> int:
        return len(self.subgraphs)

    def subgraph(self, sg_id: int) -> Subgraph:
        return self._by_id[sg_id]

    def is_boundary(self, v: Vertex) -> bool:
        return v in self.boundary_vertices

    def home(self, v: Vertex) -> int:
        """Smallest subgraph id containing ``v`` (the only one for non-boundary vertices)."""
        return min(self._members(v))

    def _members(self, v: Vertex) -> frozenset[int]:
        try:
            return self.vertex_to_subgraphs[v]
        except KeyError:
            raise GraphError(f"unknown vertex {v}") from None

    def locate_pair(self, u: Vertex, v: Vertex) -> frozenset[int]:
        """Ids of all subgraphs containing both ``u`` and ``v``."""
        return self._members(u) & self._members(v)

    def shared_counts(self) -> dict[int, int]:
        """Histogram: number of subgraphs a boundary vertex sits in -> vertex count."""
        hist: dict[int, int] = {}
        for v in self.boundary_vertices:
            n = len(self.vertex_to_subgraphs[v])
            hist[n] = hist.get(n, 0) + 1
        return dict(sorted(hist.items()))

    def check(self, graph: DynamicGraph) -> None:
        """Raise ``GraphError`` if any partition invariant fails for ``graph``."""
        if set(self.vertex_to_subgraphs) != graph.vertices:
            raise GraphError("vertex coverage mismatch")
        if set(self.edge_owner) != set(graph.initial_weights):
            raise GraphError("edge coverage mismatch")
        if sum(len(sg.edges) for sg in self.subgraphs) != len(graph.initial_weights):
            raise GraphError("edge sets are not disjoint")
        for sg in self.subgraphs:
            if len(sg.vertices) > self.z:
                raise GraphError(f"subgraph {sg.id} has {len(sg.vertices)} > z={self.z} vertices")
            for u, v in sg.edges:
                if u not in sg.vertices or v not in sg.vertices:
                    raise GraphError(f"edge {(u, v)} escapes subgraph {sg.id}")
            if sg.boundary != sg.vertices & self.boundary_vertices:
                raise GraphError(f"subgraph {sg.id} boundary set is stale")


def _build(graph: DynamicGraph, vertex_sets: list[set[Vertex]], z: int) -> SubgraphPartition:
    members: dict[Vertex, list[int]] = {}
    for i, vs in enumerate(vertex_sets):
        for v in vs:
            members.setdefault(v, []).append(i)
    edge_sets: list[set[Edge]] = [set() for _ in vertex_sets]
    leftovers: list[Edge] = []
    for e in graph.edges:
        common = set(members[e[0]]).intersection(members[e[1]])
        if common:
            edge_sets[min(common)].add(e)
        else:
            leftovers.append(e)
    # leftover edges join already-assigned vertices of different subgraphs
    cur_v: set[Vertex] = set()
    cur_e: set[Edge] = set()
    for e in leftovers:
        if len(cur_v | set(e)) > z:
            vertex_sets.append(cur_v)
            edge_sets.append(cur_e)
            cur_v, cur_e = set(), set()
        cur_v |= set(e)
        cur_e.add(e)
    if cur_e:
        vertex_sets.append(cur_v)
        edge_sets.append(cur_e)
    count: dict[Vertex, int] = {}
    for vs in vertex_sets:
        for v in vs:
            count[v] = count.get(v, 0) + 1
    subgraphs = []
    for i, (vs, es) in enumerate(zip(vertex_sets, edge_sets)):
        boundary = frozenset(v for v in vs if count[v] >= 2)
        subgraphs.append(Subgraph(i, frozenset(vs), frozenset(es), boundary))
    return SubgraphPartition(subgraphs, z)


def partition(graph: DynamicGraph, z: int, seed: int | None = None) -> SubgraphPartition:
    """Grow subgraphs breadth-first from the smallest unassigned vertex.

    Once a subgraph holds ``z`` vertices, the pending frontier edges
    ``(inside, outside)`` seed the next one; ``inside`` is copied into it and
    so becomes a boundary vertex.  ``seed`` permutes the start order.
    """
    if z < 2:
        raise GraphError(f"z must be >= 2, got {z}")
    order = sorted(graph.vertices)
    if seed is not None:
        random.Random(seed).shuffle(order)
    owner: dict[Vertex, int] = {}
    vertex_sets: list[set[Vertex]] = []
    for root in order:
        if root in owner:
            continue
        frontier: deque[tuple[Vertex | None, Vertex]] = deque([(None, root)])
        while frontier:
            sid = len(vertex_sets)
            verts: set[Vertex] = set()
            while frontier and len(verts) < z:
                u, v = frontier[0]
                if v in owner:
                    frontier.popleft()
                    continue
                need = 1 + (u is not None and u not in verts)
                if len(verts) + need > z:
                    break
                frontier.popleft()
                if u is not None:
                    verts.add(u)
                verts.add(v)
                owner[v] = sid
                for w in sorted(graph.neighbors(v)):
                    if w not in owner:
                        frontier.append((v, w))
            if verts:
                vertex_sets.append(verts)
    return _build(graph, vertex_sets, z)


def partition_from_sets(graph: DynamicGraph, subgraph_edges: dict[int, Iterable[Edge]],
                        z: int | None = None,
                        extra_vertices: dict[int, Iterable[Vertex]] | None = None) -> SubgraphPartition:
    """Pin an explicit partition (used by the dump format and hand-built fixtures)."""
    extra_vertices = extra_vertices or {}
    raw = []
    for sid in sorted(set(subgraph_edges) | set(extra_vertices)):
        es = set()
        for u, v in subgraph_edges.get(sid, ()):
            e = graph.key(u, v)
            if e not in graph.initial_weights:
                raise GraphError(f"subgraph {sid}: unknown edge {(u, v)}")
            es.add(e)
        vs = {x for e in es for x in e} | set(extra_vertices.get(sid, ()))
        raw.append((sid, vs, es))
    count: dict[Vertex, int] = {}
    for _, vs, _ in raw:
        for v in vs:
            count[v] = count.get(v, 0) + 1
    subgraphs = [Subgraph(sid, frozenset(vs), frozenset(es), frozenset(v for v in vs if count[v] >= 2))
                 for sid, vs, es in raw]
    if z is None:
        z = max((len(sg.vertices) for sg in subgraphs), default=2)
    part = SubgraphPartition(subgraphs, z)
    part.check(graph)
    return part


def save_partition(part: SubgraphPartition, stream: IO[str]) -> None:
    """``s <id>`` then one ``e <u> <v>`` per edge; ``v <x>`` for edge-less members."""
    stream.write(f"z {part.z}\n")
    for sg in part.subgraphs:
        stream.write(f"s {sg.id}\n")
        covered = set()
        for u, v in sorted(sg.edges):
            stream.write(f"e {u} {v}\n")
            covered.update((u, v))
        for x in sorted(sg.vertices - covered):
            stream.write(f"v {x}\n")


def load_partition(stream: IO[str] | str, graph: DynamicGraph) -> SubgraphPartition:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    edges: dict[int, list[Edge]] = {}
    extra: dict[int, list[Vertex]] = {}
    z = None
    cur = None
    for lineno, line in enumerate(stream, 1):
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        tag = parts[0]
        if tag == "z":
            z = int(parts[1])
        elif tag == "s":
            cur = int(parts[1])
            edges.setdefault(cur, [])
        elif tag in ("e", "v"):
            if cur is None:
                raise GraphError(f"line {lineno}: '{tag}' before any 's' line")
            if tag == "e":
                edges[cur].append((int(parts[1]), int(parts[2])))
            else:
                extra.setdefault(cur, []).append(int(parts[1]))
        else:
            raise GraphError(f"line {lineno}: unknown line type {tag!r}")
    return partition_from_sets(graph, edges, z=z, extra_vertices=extra)
