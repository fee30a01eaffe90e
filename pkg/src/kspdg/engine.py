"""KSP-DG: filter on the skeleton graph, refine inside subgraphs.

A query is a :class:`QuerySession`.  Its logic lives in :func:`session_steps`,
a generator that yields requests for data held by subgraph shards
(:class:`AugmentRequest`, :class:`PartialRequest`, :class:`ReachRequest`) and
receives the replies.
The local driver answers them straight from a :class:`DtlpIndex`; the cluster
runtime answers them with messages between workers.  Both run the same code,
so their results agree bit for bit.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from typing import Generator, Iterator, Mapping, Sequence

from .dtlp import DtlpIndex
from .graph import GraphError, Path, Vertex, Weight
from .yen import single_source_distances

log = logging.getLogger(__name__)

PartialKey = tuple[Vertex, Vertex, int]  # (a, b, subgraph id)


@dataclass(frozen=True)
class AugmentRequest:
    """Lower bound distances wanted, keyed ``(subgraph, a, b)``."""

    wants: tuple[tuple[int, Vertex, Vertex], ...]


@dataclass(frozen=True)
class PartialRequest:
    """Partial shortest paths wanted: ``(a, b, subgraph) -> depth``."""

    wants: Mapping[PartialKey, int]


@dataclass(frozen=True)
class ReachRequest:
    """Which terminals each subgraph joins while avoiding ``blocked``; see
    :meth:`SubgraphIndex.terminal_reach`.  The reply maps subgraph id to pairs."""

    blocked: frozenset
    extra: frozenset


@dataclass
class KspResult:
    query_id: int
    source: Vertex
    target: Vertex
    k: int
    paths: list[Path]
    timestamp: int
    iterations: int = 0
    exhausted: bool = False
    diagnostic: str = ""
    references: list[Path] = field(default_factory=list)
    bound_violations: list[tuple[Path, Path]] = field(default_factory=list)
    partial_requests: int = 0

    @property
    def distances(self) -> list[Weight]:
        return [p.distance for p in self.paths]

    def format(self) -> str:
        lines = [f"r {self.query_id} {self.k} {self.timestamp}"]
        for p in self.paths:
            lines.append("p " + " ".join([str(p.distance), *map(str, p.vertices)]))
        return "\n".join(lines) + "\n"


class OverlayAdjacency(Mapping):
    """A pinned skeleton adjacency plus query-local edges; the base is never touched."""

    def __init__(self, base: Mapping[Vertex, Mapping[Vertex, Weight]], extra: Mapping[Vertex, Mapping[Vertex, Weight]]):
        self.base = base
        self.extra = {u: dict(vs) for u, vs in extra.items()}
        self._merged: dict[Vertex, dict[Vertex, Weight]] = {}

    def __getitem__(self, u):
        if u in self.extra:
            m = self._merged.get(u)
            if m is None:
                m = dict(self.base.get(u, {}))
                m.update(self.extra[u])
                self._merged[u] = m
            return m
        return self.base[u]

    def __iter__(self) -> Iterator[Vertex]:
        yield from self.base
        for u in self.extra:
            if u not in self.base:
                yield u

    def __len__(self) -> int:
        return len(self.base) + sum(1 for u in self.extra if u not in self.base)


@dataclass
class AugmentedSkeleton:
    adjacency: OverlayAdjacency
    overlay: dict[tuple[Vertex, Vertex], Weight]


class QuerySession:
    """Per-query state pinned to one skeleton version."""

    def __init__(self, index: DtlpIndex, source: Vertex, target: Vertex, k: int, *,
                 query_id: int = 0, timestamp: int | None = None, use_cache: bool = True,
                 skeleton=None):
        if k < 1:
            raise GraphError(f"k must be >= 1, got {k}")
        part = index.partition
        for v in (source, target):
            if v not in part.vertex_to_subgraphs:
                raise GraphError(f"unknown vertex {v}")
        self.index = index
        self.partition = part
        self.directed = index.directed
        self.skeleton = index.skeleton if skeleton is None else skeleton
        self.source = source
        self.target = target
        self.k = k
        self.query_id = query_id
        self.timestamp = index.snapshot_version if timestamp is None else timestamp
        self.use_cache = use_cache
        self.cache: dict[PartialKey, tuple[list[Path], bool]] = {}
        self.augmented: AugmentedSkeleton | None = None
        self.result: KspResult | None = None


def augment_requirements(session: QuerySession) -> tuple[tuple[int, Vertex, Vertex], ...]:
    part = session.partition
    s, t = session.source, session.target
    wants = set()
    if not part.is_boundary(s):
        h = part.home(s)
        wants.update((h, s, b) for b in part.subgraph(h).boundary)
    if not part.is_boundary(t):
        h = part.home(t)
        wants.update((h, b, t) for b in part.subgraph(h).boundary)
    if not (part.is_boundary(s) and part.is_boundary(t)):
        wants.update((sid, s, t) for sid in part.locate_pair(s, t))
    return tuple(sorted(wants))


def build_augmented(session: QuerySession, lbds: Mapping[tuple[int, Vertex, Vertex], Weight | None]) -> AugmentedSkeleton:
    """Attach non-boundary endpoints to the pinned skeleton with lower-bound edges."""
    overlay: dict[tuple[Vertex, Vertex], Weight] = {}
    for (sid, a, b), lbd in sorted(lbds.items()):
        if lbd is None:
            continue
        cur = overlay.get((a, b))
        if cur is None or lbd < cur:
            overlay[(a, b)] = lbd
    extra: dict[Vertex, dict[Vertex, Weight]] = {}
    for (a, b), w in overlay.items():
        extra.setdefault(a, {})[b] = w
        if not session.directed:
            extra.setdefault(b, {})[a] = w
    for v in (session.source, session.target):
        extra.setdefault(v, {})
    return AugmentedSkeleton(OverlayAdjacency(session.skeleton.adjacency, extra), overlay)


def augment_endpoints(session: QuerySession, index: DtlpIndex | None = None) -> AugmentedSkeleton:
    """Compute the query overlay directly from a local index."""
    index = index or session.index
    wants = augment_requirements(session)
    lbds = {(sid, a, b): index.shards[sid].lower_bound_on_demand(a, b) for sid, a, b in wants}
    session.augmented = build_augmented(session, lbds)
    return session.augmented


class _PairStream:
    """Partial paths for one adjacent pair, merged across subgraphs.

    The merge is append-only: an item is released only once no unfetched
    path of another subgraph can precede it, so positions never shift when
    a list is deepened.  Paths through any ``forbidden`` vertex are dropped.
    """

    def __init__(self, a: Vertex, b: Vertex, sids: Sequence[int], forbidden: frozenset = frozenset()):
        self.a, self.b = a, b
        self.sids = sorted(sids)
        self.forbidden = forbidden
        self.items: list[Path] = []
        self.ptr = [0] * len(self.sids)
        self.complete = not self.sids

    def keys(self) -> list[PartialKey]:
        return [(self.a, self.b, sid) for sid in self.sids]

    def wants(self, cache: Mapping[PartialKey, tuple[list[Path], bool]], depth: int) -> dict[PartialKey, int]:
        out = {}
        for key in self.keys():
            have = cache.get(key)
            if have is None:
                out[key] = depth
            elif not have[1]:
                out[key] = max(depth, 2 * len(have[0]))
        return out

    def reload(self, cache: Mapping[PartialKey, tuple[list[Path], bool]]) -> None:
        lists = [cache[key] for key in self.keys()]
        while True:
            best = None
            for r, (paths, _) in enumerate(lists):
                if self.ptr[r] < len(paths):
                    d = paths[self.ptr[r]].distance
                    if best is None or d < best[0]:
                        best = (d, r)
            if best is None:
                break
            d, r = best
            blocked = False
            for q, (paths, done) in enumerate(lists):
                if q != r and not done and self.ptr[q] == len(paths):
                    last = paths[-1].distance if paths else None
                    if last is None or last < d or (last == d and q < r):
                        blocked = True
                        break
            if blocked:
                break
            p = lists[r][0][self.ptr[r]]
            self.ptr[r] += 1
            if not self.forbidden.intersection(p.vertices[1:-1]):
                self.items.append(p)
        self.complete = all(done and self.ptr[r] == len(paths) for r, (paths, done) in enumerate(lists))


def _fetch(cache: dict, streams: Sequence[_PairStream], depth: int):
    wants = {}
    for st in streams:
        wants.update(st.wants(cache, depth))
    if wants:
        reply = yield PartialRequest(wants)
        cache.update(reply)
    for st in streams:
        st.reload(cache)


class CandidateStream:
    """Simple paths following one reference path, produced lazily in distance order.

    Consecutive reference vertices are joined by partial paths from subgraphs
    containing both.  The search is best-first over segment prefixes: a node
    fixes the segments of the first ``j`` pairs and picks item ``i`` of pair
    ``j``; its key adds the cheapest segment of every later pair, which never
    overestimates.  A prefix is cut as soon as a segment revisits a vertex,
    and a pair stream is deepened only when the search runs off its end.
    """

    def __init__(self, session: QuerySession, reference: Path, cache: dict):
        self.reference = reference
        self.k = session.k
        self.cache = cache
        vs = reference.vertices
        on_ref = frozenset(vs)
        self.pairs = [_PairStream(a, b, session.partition.locate_pair(a, b), on_ref - {a, b})
                      for a, b in zip(vs, vs[1:])]
        self.heap: list = []
        self.rest: list[Weight] = []
        self.head: Path | None = None
        self.popped = 0
        self._tick = 0

    def _ensure(self, j: int, i: int):
        st = self.pairs[j]
        while i >= len(st.items) and not st.complete:
            yield from _fetch(self.cache, [st], max(i + 1, self.k))
        return i < len(st.items)

    def _push(self, f: Weight, j: int, i: int, g: Weight, prefix: tuple[Vertex, ...]) -> None:
        self._tick += 1
        heapq.heappush(self.heap, (f, self._tick, j, i, g, prefix))

    def start(self):
        if any(not st.sids for st in self.pairs):
            return
        yield from _fetch(self.cache, self.pairs, self.k)
        for j in range(len(self.pairs)):
            if not (yield from self._ensure(j, 0)):
                return
        rest: list[Weight] = [0]
        for st in reversed(self.pairs):
            rest.append(rest[-1] + st.items[0].distance)
        self.rest = rest[::-1]
        self._push(self.rest[0], 0, 0, 0, ())
        yield from self.advance()

    def advance(self):
        """Move ``head`` to the next simple concatenation, or ``None`` when done."""
        self.head = None
        m = len(self.pairs)
        while self.heap and self.head is None:
            f, _, j, i, g, prefix = heapq.heappop(self.heap)
            self.popped += 1
            seg = self.pairs[j].items[i]
            if (yield from self._ensure(j, i + 1)):
                nxt = self.pairs[j].items[i + 1]
                self._push(g + nxt.distance + self.rest[j + 1], j, i + 1, g, prefix)
            tail = seg.vertices[1:] if prefix else seg.vertices
            if prefix and not set(prefix).isdisjoint(tail):
                continue
            g2 = g + seg.distance
            joined = prefix + tail
            if j == m - 1:
                self.head = Path(joined, g2)
            else:
                self._push(g2 + self.rest[j + 1], j + 1, 0, g2, joined)


def _fkey(w: Weight) -> tuple[float, Weight]:
    # float() is monotone, so the float decides almost every comparison cheaply
    return (float(w), w)


class ReferenceEnumerator:
    """Reference paths from source to target, ordered by their shortest simple realization.

    The search is best-first over pairs (skeleton prefix, realized vertex
    prefix).  A realized prefix is extended one skeleton edge at a time by a
    partial path of that pair; extensions are tried in distance order, one
    sibling at a time, and any extension that revisits a vertex is cut.  The
    heuristic is the augmented skeleton's distance to the target, a lower
    bound on every completion.  A reference is emitted the first time one of
    its realizations completes, keyed by that realization's length; skeleton
    paths with no simple realization are never emitted.
    """

    def __init__(self, session: QuerySession, cache: dict):
        adj = session.augmented.adjacency
        self.adj = adj
        self.session = session
        self.cache = cache
        self.t = session.target
        rev: dict[Vertex, dict[Vertex, Weight]] = {}
        for u in adj:
            for v, w in adj[u].items():
                rev.setdefault(v, {})[u] = w
        self.h = single_source_distances(rev, self.t)
        self.streams: dict[tuple[Vertex, Vertex], _PairStream] = {}
        self.emitted: set[tuple[Vertex, ...]] = set()
        self.heap: list = []
        self.expanded = 0
        self.checks = 0
        self._tick = 0
        s = session.source
        if s in self.h and s != self.t:
            self._push(self.h[s], (0, 0, (s,), (s,), None, 0))

    def _push(self, f: Weight, state: tuple) -> None:
        self._tick += 1
        heapq.heappush(self.heap, (_fkey(f), self._tick, state))

    def _stream(self, a: Vertex, b: Vertex) -> _PairStream:
        st = self.streams.get((a, b))
        if st is None:
            st = _PairStream(a, b, self.session.partition.locate_pair(a, b))
            self.streams[(a, b)] = st
        return st

    def _item(self, st: _PairStream, i: int):
        while i >= len(st.items) and not st.complete:
            yield from _fetch(self.cache, [st], i + 1)
        return st.items[i] if i < len(st.items) else None

    def _expand(self, g: Weight, gs: Weight, ref: tuple, real: tuple):
        u = ref[-1]
        self.expanded += 1
        fresh = [self._stream(u, v) for v in self.adj[u] if v not in ref and v in self.h]
        todo = [st for st in fresh if not st.items and not st.complete]
        if todo:
            # one request for every pair leaving u
            yield from _fetch(self.cache, todo, 1)
        for st in fresh:
            if st.items:
                v = st.b
                self._push(g + st.items[0].distance + self.h[v], (g, gs, ref, real, v, 0))

    def _alive(self, v: Vertex, real: tuple[Vertex, ...]):
        """Whether the target is still reachable from ``v`` without touching ``real``."""
        if v == self.t:
            return True
        reply = yield ReachRequest(frozenset(real) - {v}, frozenset((v, self.t)))
        self.checks += 1
        succ: dict[Vertex, list[Vertex]] = {}
        for pairs in reply.values():
            for a, b in pairs:
                succ.setdefault(a, []).append(b)
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for w in succ.get(u, ()):
                if w == self.t:
                    return True
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return False

    def next(self, limit: tuple[float, Weight] | None = None):
        """Return ``(key, reference)`` for the next reference, or ``None`` once
        the search is exhausted or its frontier reaches ``limit``."""
        while self.heap and (limit is None or self.heap[0][0] < limit):
            _, _, (g, gs, ref, real, v, i) = heapq.heappop(self.heap)
            if v is None:
                if ref[-1] == self.t:
                    if ref not in self.emitted:
                        self.emitted.add(ref)
                        return g, Path(ref, gs)
                    continue
                yield from self._expand(g, gs, ref, real)
                continue
            u = ref[-1]
            st = self._stream(u, v)
            seg = st.items[i]
            nxt = yield from self._item(st, i + 1)
            if nxt is not None:
                self._push(g + nxt.distance + self.h[v], (g, gs, ref, real, v, i + 1))
            tail = seg.vertices[1:]
            if not set(real).isdisjoint(tail):
                continue
            joined = real + tail
            if not (yield from self._alive(v, joined)):
                continue
            g2 = g + seg.distance
            self._push(g2 + self.h[v], (g2, gs + self.adj[u][v], ref + (v,), joined, None, 0))
        return None


def _stream_cache(session: QuerySession) -> dict:
    return session.cache if session.use_cache else {}


def candidate_ksp(session: QuerySession, reference: Path) -> Generator[object, object, list[Path]]:
    """The k shortest simple paths that visit the reference's vertices in order."""
    stream = CandidateStream(session, reference, _stream_cache(session))
    yield from stream.start()
    found = []
    while stream.head is not None and len(found) < session.k:
        found.append(stream.head)
        yield from stream.advance()
    return found


def session_steps(session: QuerySession) -> Generator[object, object, KspResult]:
    """The KSP-DG loop as a request/reply coroutine.

    Reference paths are pulled from the augmented skeleton in key order and
    each opens a candidate stream; pending candidates from all open streams
    are merged by distance.  The best pending candidate is accepted once the
    reference search frontier is no shorter, since every path not yet seen
    follows an unopened reference.  The loop stops with k accepted paths or
    when the references run out.
    """
    s, t, k = session.source, session.target, session.k
    result = KspResult(session.query_id, s, t, k, [], session.timestamp)
    session.result = result
    if s == t:
        result.diagnostic = "source equals target: no simple path"
        result.exhausted = True
        return result
    wants = augment_requirements(session)
    lbds = (yield AugmentRequest(wants)) if wants else {}
    session.augmented = build_augmented(session, lbds)
    refs = ReferenceEnumerator(session, session.cache)
    accepted: list[Path] = []
    seen: set[tuple[Vertex, ...]] = set()
    streams: list[CandidateStream] = []
    pending: list[tuple[tuple[float, Weight], tuple[Vertex, ...], int]] = []
    while len(accepted) < k:
        nxt = yield from refs.next(pending[0][0] if pending else None)
        if nxt is not None:
            st = CandidateStream(session, nxt[1], _stream_cache(session))
            streams.append(st)
            result.references.append(nxt[1])
            result.iterations += 1
            yield from st.start()
            if st.head is not None:
                heapq.heappush(pending, (_fkey(st.head.distance), st.head.vertices, len(streams) - 1))
        elif pending:
            # nothing unopened can beat the best pending candidate
            _, _, i = heapq.heappop(pending)
            st = streams[i]
            path = st.head
            if path.distance < st.reference.distance:
                result.bound_violations.append((st.reference, path))
            if path.vertices not in seen:
                seen.add(path.vertices)
                accepted.append(path)
            yield from st.advance()
            if st.head is not None:
                heapq.heappush(pending, (_fkey(st.head.distance), st.head.vertices, i))
        else:
            result.exhausted = True
            break
    result.paths = sorted(accepted, key=Path.sort_key)
    if not accepted:
        result.diagnostic = "no path between source and target"
    return result


class LocalProvider:
    """Answers session requests directly from an in-process index."""

    def __init__(self, index: DtlpIndex):
        self.index = index
        self.requests = 0

    def answer(self, request):
        self.requests += 1
        shards = self.index.shards
        if isinstance(request, AugmentRequest):
            return {(sid, a, b): shards[sid].lower_bound_on_demand(a, b) for sid, a, b in request.wants}
        if isinstance(request, PartialRequest):
            return {(a, b, sid): shards[sid].partial_paths(a, b, depth)
                    for (a, b, sid), depth in request.wants.items()}
        if isinstance(request, ReachRequest):
            return {sid: sh.terminal_reach(request.blocked, request.extra) for sid, sh in shards.items()}
        raise TypeError(f"unknown request {request!r}")


def drive(steps: Generator, provider) -> KspResult:
    try:
        request = next(steps)
        while True:
            request = steps.send(provider.answer(request))
    except StopIteration as stop:
        return stop.value


def run_ksp_dg(session: QuerySession, provider=None) -> KspResult:
    provider = provider or LocalProvider(session.index)
    result = drive(session_steps(session), provider)
    result.partial_requests = getattr(provider, "requests", 0)
    return result


def ksp_query(index: DtlpIndex, source: Vertex, target: Vertex, k: int, **kwargs) -> KspResult:
    return run_ksp_dg(QuerySession(index, source, target, k, **kwargs))


@dataclass
class LemmaReport:
    checked: int = 0
    violations: list[tuple[Vertex, Vertex, Weight, Weight]] = field(default_factory=list)


def verify_lower_bound_lemma(snapshot, index: DtlpIndex, pairs: Sequence[tuple[Vertex, Vertex]]) -> LemmaReport:
    """Skeleton (augmented when needed) shortest distance never exceeds the graph's."""
    report = LemmaReport()
    graph_adj = snapshot.adjacency()
    by_source: dict[Vertex, dict] = {}
    for s, t in pairs:
        if s == t:
            continue
        if s not in by_source:
            by_source[s] = single_source_distances(graph_adj, s)
        true = by_source[s].get(t)
        session = QuerySession(index, s, t, 1)
        aug = augment_endpoints(session)
        skel = single_source_distances(aug.adjacency, s).get(t)
        report.checked += 1
        if true is None:
            continue
        if skel is None or skel > true:
            report.violations.append((s, t, skel, true))
    return report
