"""Versioned dynamic weighted graphs, immutable snapshots and DIMACS I/O.

Weights are exact rationals: initial weights are positive integers (they double
as virtual-fragment counts) and current weights are ``int`` or
:class:`fractions.Fraction`.  Nothing in the correctness path uses floats.
"""

from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import IO, Iterable, Iterator, Mapping, Sequence, Union

log = logging.getLogger(__name__)

Vertex = int
Edge = tuple[int, int]
Weight = Union[int, Fraction]

#: Smallest weight a delta-driven update may clamp to (fixed-point 1e-9).
MIN_WEIGHT = Fraction(1, 10**9)


class GraphError(ValueError):
    """Raised for malformed graph input or invalid graph operations."""


def as_weight(value) -> Weight:
    """Normalise a number to an exact ``int`` or ``Fraction``.

    Floats are converted through their decimal ``repr`` so ``0.1`` means one
    tenth, not the nearest binary double.
    """
    if isinstance(value, bool):
        raise GraphError(f"not a weight: {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        value = Fraction(repr(value))
    elif isinstance(value, str):
        value = Fraction(value)
    elif isinstance(value, Rational):
        value = Fraction(value.numerator, value.denominator)
    else:
        raise GraphError(f"not a rational weight: {value!r}")
    if value.denominator == 1:
        return int(value.numerator)
    return value


def clamp_weight(value: Weight) -> tuple[Weight, bool]:
    """Clamp a delta-driven weight to ``MIN_WEIGHT``; return ``(w, clamped)``."""
    if value <= 0:
        return MIN_WEIGHT, True
    return value, False


@dataclass(frozen=True)
class WeightUpdate:
    edge: Edge
    new_weight: Weight
    timestamp: int = 0


@dataclass(frozen=True)
class Path:
    """A simple path and its distance on the snapshot it was computed against."""

    vertices: tuple[Vertex, ...]
    distance: Weight

    def __post_init__(self):
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError(f"path is not simple: {self.vertices}")

    @property
    def source(self) -> Vertex:
        return self.vertices[0]

    @property
    def target(self) -> Vertex:
        return self.vertices[-1]

    def edges(self) -> Iterator[Edge]:
        return zip(self.vertices, self.vertices[1:])

    def sort_key(self):
        return (self.distance, self.vertices)

    def __len__(self) -> int:
        return len(self.vertices)


class Snapshot:
    """Immutable view of the edge weights at one graph version."""

    __slots__ = ("version", "timestamp", "weights", "directed", "_adj")

    def __init__(self, version: int, timestamp: int, weights: Mapping[Edge, Weight], directed: bool):
        self.version = version
        self.timestamp = timestamp
        self.weights = MappingProxyType(dict(weights))
        self.directed = directed
        self._adj = None

    def key(self, u: Vertex, v: Vertex) -> Edge:
        if self.directed or u < v:
            return (u, v)
        return (v, u)

    def weight(self, u: Vertex, v: Vertex) -> Weight:
        try:
            return self.weights[self.key(u, v)]
        except KeyError:
            raise GraphError(f"no edge ({u}, {v})") from None

    def adjacency(self) -> Mapping[Vertex, Mapping[Vertex, Weight]]:
        """Out-neighbour map ``{u: {v: w}}`` (symmetric when undirected)."""
        if self._adj is None:
            adj: dict[Vertex, dict[Vertex, Weight]] = {}
            for (u, v), w in self.weights.items():
                adj.setdefault(u, {})[v] = w
                adj.setdefault(v, {})
                if not self.directed:
                    adj[v][u] = w
            self._adj = adj
        return self._adj

    def __repr__(self) -> str:
        return f"Snapshot(version={self.version}, timestamp={self.timestamp}, edges={len(self.weights)})"


class DynamicGraph:
    """Weighted graph whose edge weights evolve through snapshot batches.

    ``initial_weights`` never change; ``current_weights`` are replaced
    wholesale by :meth:`apply_snapshot`, which is the single writer.
    """

    def __init__(self, directed: bool = False):
        self.directed = directed
        self.vertices: set[Vertex] = set()
        self.initial_weights: dict[Edge, int] = {}
        self.current_weights: dict[Edge, Weight] = {}
        self.version = 0
        self.timestamp = 0
        self._snapshot: Snapshot | None = None
        self._adj: dict[Vertex, set[Vertex]] = {}

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[Vertex, Vertex, int]], directed: bool = False,
                   vertices: Iterable[Vertex] = ()) -> DynamicGraph:
        g = cls(directed=directed)
        for v in vertices:
            g.add_vertex(v)
        for u, v, w in edges:
            g.add_edge(u, v, w)
        return g

    @property
    def mode(self) -> str:
        return "directed" if self.directed else "undirected"

    def key(self, u: Vertex, v: Vertex) -> Edge:
        if self.directed or u < v:
            return (u, v)
        return (v, u)

    def add_vertex(self, v: Vertex) -> None:
        self.vertices.add(v)
        self._adj.setdefault(v, set())

    def add_edge(self, u: Vertex, v: Vertex, w0: int) -> None:
        if u == v:
            raise GraphError(f"self-loop on {u}")
        if isinstance(w0, bool) or not isinstance(w0, int) or w0 < 1:
            raise GraphError(f"initial weight must be an integer >= 1, got {w0!r}")
        e = self.key(u, v)
        if e in self.initial_weights:
            raise GraphError(f"duplicate edge {e}")
        self.add_vertex(u)
        self.add_vertex(v)
        self.initial_weights[e] = w0
        self.current_weights[e] = w0
        self._adj[u].add(v)
        self._adj[v].add(u)
        self._snapshot = None

    def has_edge(self, u: Vertex, v: Vertex) -> bool:
        return self.key(u, v) in self.initial_weights

    @property
    def edges(self) -> list[Edge]:
        return sorted(self.initial_weights)

    def neighbors(self, v: Vertex) -> set[Vertex]:
        """Neighbours ignoring direction (used by partitioning)."""
        return self._adj[v]

    def snapshot(self) -> Snapshot:
        """The current immutable snapshot."""
        if self._snapshot is None:
            self._snapshot = Snapshot(self.version, self.timestamp, self.current_weights, self.directed)
        return self._snapshot

    def initial_snapshot(self) -> Snapshot:
        return Snapshot(0, 0, self.initial_weights, self.directed)

    def apply_snapshot(self, updates: Sequence[WeightUpdate], timestamp: int | None = None) -> Snapshot:
        """Apply a batch of absolute weight updates and take a new snapshot.

        The batch is validated before anything is written, so a bad update
        leaves the graph untouched.
        """
        staged: list[tuple[Edge, Weight]] = []
        for upd in updates:
            e = self.key(*upd.edge)
            if e not in self.initial_weights:
                raise GraphError(f"update for unknown edge {upd.edge}")
            w = as_weight(upd.new_weight)
            if w <= 0:
                raise GraphError(f"non-positive weight {w} for edge {upd.edge}")
            staged.append((e, w))
        for e, w in staged:
            self.current_weights[e] = w
        self.version += 1
        if timestamp is None:
            timestamp = max((u.timestamp for u in updates), default=self.timestamp + 1)
            timestamp = max(timestamp, self.timestamp + 1)
        self.timestamp = timestamp
        self._snapshot = None
        return self.snapshot()

    def unit_weight(self, e: Edge) -> Fraction:
        return Fraction(self.current_weights[e]) / self.initial_weights[e]

    def __repr__(self) -> str:
        return (f"DynamicGraph({self.mode}, |V|={len(self.vertices)}, |E|={len(self.initial_weights)}, "
                f"version={self.version})")


def path_distance(snapshot: Snapshot, vertices: Sequence[Vertex]) -> Weight:
    """Sum of snapshot weights along ``vertices``; raises on a missing edge or a repeat."""
    if len(set(vertices)) != len(vertices):
        raise GraphError(f"repeated vertex in {tuple(vertices)}")
    total: Weight = 0
    for u, v in zip(vertices, vertices[1:]):
        total += snapshot.weight(u, v)
    return total


def make_path(snapshot: Snapshot, vertices: Sequence[Vertex]) -> Path:
    return Path(tuple(vertices), path_distance(snapshot, vertices))


# --- DIMACS -----------------------------------------------------------------

_WS = re.compile(rb"\s+")


def _lines(stream) -> Iterator[tuple[int, list[str]]]:
    if isinstance(stream, (bytes, str)):
        stream = io.BytesIO(stream.encode() if isinstance(stream, str) else stream)
    for lineno, raw in enumerate(stream, 1):
        if isinstance(raw, str):
            raw = raw.encode()
        parts = raw.split()
        if parts:
            yield lineno, [p.decode() for p in parts]


def load_dimacs(stream: IO[bytes] | bytes | str, directed: bool = False) -> DynamicGraph:
    """Read a 9th DIMACS challenge ``.gr`` file.

    Vertices are numbered ``1..n``.  Repeated arcs are dropped; in undirected
    mode an arc and its reverse collapse to one edge and must agree on weight.
    """
    g = DynamicGraph(directed=directed)
    n = m = None
    arcs = 0
    for lineno, parts in _lines(stream):
        tag = parts[0]
        if tag == "c":
            continue
        if tag == "p":
            if n is not None:
                raise GraphError(f"line {lineno}: duplicate problem line")
            if len(parts) != 4 or parts[1] != "sp":
                raise GraphError(f"line {lineno}: expected 'p sp <n> <m>'")
            try:
                n, m = int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphError(f"line {lineno}: bad problem line") from None
            for v in range(1, n + 1):
                g.add_vertex(v)
            continue
        if tag == "a":
            if n is None:
                raise GraphError(f"line {lineno}: arc before problem line")
            if len(parts) != 4:
                raise GraphError(f"line {lineno}: expected 'a <u> <v> <w>'")
            try:
                u, v, w = int(parts[1]), int(parts[2]), int(parts[3])
            except ValueError:
                raise GraphError(f"line {lineno}: non-integer field") from None
            if w < 1:
                raise GraphError(f"line {lineno}: weight {w} < 1")
            if not (1 <= u <= n and 1 <= v <= n):
                raise GraphError(f"line {lineno}: endpoint out of range")
            arcs += 1
            e = g.key(u, v)
            if e in g.initial_weights:
                if g.initial_weights[e] != w:
                    raise GraphError(f"line {lineno}: asymmetric duplicate for edge {e}")
                continue
            g.add_edge(u, v, w)
            continue
        raise GraphError(f"line {lineno}: unknown line type {tag!r}")
    if n is None:
        raise GraphError("missing problem line")
    if m is not None and arcs != m:
        log.warning("problem line declares %d arcs, found %d", m, arcs)
    return g


def save_dimacs(graph: DynamicGraph, stream: IO[str], comment: str | None = None) -> None:
    """Write ``graph`` in canonical ``.gr`` form (initial weights, both arcs when undirected)."""
    if graph.vertices and (min(graph.vertices) < 1 or max(graph.vertices) != len(graph.vertices)):
        raise GraphError("DIMACS requires vertices numbered 1..n")
    arcs = []
    for (u, v), w in sorted(graph.initial_weights.items()):
        arcs.append((u, v, w))
        if not graph.directed:
            arcs.append((v, u, w))
    arcs.sort()
    if comment:
        stream.write(f"c {comment}\n")
    stream.write(f"p sp {len(graph.vertices)} {len(arcs)}\n")
    for u, v, w in arcs:
        stream.write(f"a {u} {v} {w}\n")


def read_dimacs_header(stream) -> tuple[int, int]:
    """Return ``(n, m)`` from the problem line without loading arcs."""
    for lineno, parts in _lines(stream):
        if parts[0] == "p":
            return int(parts[2]), int(parts[3])
    raise GraphError("missing problem line")


# --- update batches ---------------------------------------------------------

@dataclass
class UpdateBatch:
    timestamp: int
    updates: list[WeightUpdate] = field(default_factory=list)


def load_updates(stream: IO[str] | str) -> list[UpdateBatch]:
    """Parse ``t <timestamp>`` / ``u <u> <v> <w>`` lines into batches."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    batches: list[UpdateBatch] = []
    for lineno, line in enumerate(stream, 1):
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] == "t":
            if len(parts) != 2:
                raise GraphError(f"line {lineno}: expected 't <timestamp>'")
            batches.append(UpdateBatch(int(parts[1])))
        elif parts[0] == "u":
            if not batches:
                raise GraphError(f"line {lineno}: update before first 't' line")
            if len(parts) != 4:
                raise GraphError(f"line {lineno}: expected 'u <u> <v> <w>'")
            b = batches[-1]
            b.updates.append(WeightUpdate((int(parts[1]), int(parts[2])), as_weight(parts[3]), b.timestamp))
        else:
            raise GraphError(f"line {lineno}: unknown line type {parts[0]!r}")
    return batches


def format_weight(w: Weight) -> str:
    return str(w)


def save_updates(batches: Iterable[UpdateBatch], stream: IO[str], metadata: Mapping | None = None) -> None:
    """Write batches; ``metadata`` goes first as ``c <key> <value>`` comment lines."""
    for key, value in (metadata or {}).items():
        stream.write(f"c {key} {value}\n")
    for b in batches:
        stream.write(f"t {b.timestamp}\n")
        for upd in b.updates:
            u, v = upd.edge
            stream.write(f"u {u} {v} {format_weight(upd.new_weight)}\n")
