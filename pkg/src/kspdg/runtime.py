"""In-process master/worker execution of index maintenance and KSP-DG queries.

Three roles exchange messages over FIFO channels:

* the entrance ``E`` routes weight updates and queries and commits skeleton
  versions between update epochs;
* subgraph workers ``S0..`` own index shards and answer lower-bound,
  partial-path and reachability requests;
* query workers ``Q0..`` run query sessions against their skeleton replica.

The scheduler delivers one message at a time.  In deterministic mode the
next channel is drawn by a seeded RNG, so a transcript replays exactly.
"""

from __future__ import annotations

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dtlp import DtlpIndex, SkeletonGraph, SubgraphIndex, _skeleton_edges
from .engine import AugmentRequest, KspResult, PartialRequest, QuerySession, ReachRequest, session_steps
from .graph import GraphError, Vertex, WeightUpdate
from .partition import SubgraphPartition

log = logging.getLogger(__name__)

ENTRANCE = "E"


@dataclass(frozen=True)
class Message:
    seq: int
    sender: str
    receiver: str
    kind: str
    ident: int
    payload: object = None

    def line(self) -> str:
        return f"m {self.seq} {self.sender} {self.receiver} {self.kind} {self.ident}"


class Scheduler:
    """Per-channel FIFO delivery; channel choice is seeded or round-robin."""

    def __init__(self, seed: int = 0, deterministic: bool = True, capacity: int = 1 << 20):
        self.rng = random.Random(seed)
        self.deterministic = deterministic
        self.capacity = capacity
        self.channels: dict[tuple[str, str], deque] = {}
        self.actors: dict[str, Actor] = {}
        self.transcript: list[str] = []
        self.seq = 0
        self._turn = 0

    def register(self, actor: Actor) -> None:
        self.actors[actor.name] = actor
        actor.scheduler = self

    def send(self, sender: str, receiver: str, kind: str, ident: int, payload=None) -> None:
        if receiver not in self.actors:
            raise KeyError(f"no actor named {receiver!r}")
        q = self.channels.setdefault((sender, receiver), deque())
        if len(q) >= self.capacity:
            raise RuntimeError(f"channel {sender}->{receiver} is full")
        q.append((kind, ident, payload))

    def _pick(self) -> tuple[str, str] | None:
        live = sorted(key for key, q in self.channels.items() if q)
        if not live:
            return None
        if self.deterministic:
            return self.rng.choice(live)
        self._turn = (self._turn + 1) % len(live)
        return live[self._turn]

    def run(self) -> int:
        """Deliver messages until every channel is empty; return the count."""
        delivered = 0
        while True:
            key = self._pick()
            if key is None:
                return delivered
            kind, ident, payload = self.channels[key].popleft()
            self.seq += 1
            msg = Message(self.seq, key[0], key[1], kind, ident, payload)
            self.transcript.append(msg.line())
            actor = self.actors[key[1]]
            actor.handled += 1
            actor.handle(msg)
            delivered += 1


class Actor:
    def __init__(self, name: str):
        self.name = name
        self.scheduler: Scheduler | None = None
        self.handled = 0

    def send(self, receiver: str, kind: str, ident: int, payload=None) -> None:
        self.scheduler.send(self.name, receiver, kind, ident, payload)

    def handle(self, msg: Message) -> None:
        raise NotImplementedError


class SubgraphWorker(Actor):
    """Owns a set of index shards; the only writer of those shards."""

    def __init__(self, name: str, shards: dict[int, SubgraphIndex], eager: bool = False):
        super().__init__(name)
        self.shards = shards
        self.eager = eager

    def handle(self, msg: Message) -> None:
        if msg.kind == "update":
            changes = {}
            for sid, edge, weight in msg.payload:
                shard = self.shards[sid]
                shard.apply(edge, weight)
                if self.eager and shard.dirty:
                    changes.update({(sid, p): w for p, w in shard.refresh().items()})
            for sid, shard in sorted(self.shards.items()):
                if shard.dirty:
                    changes.update({(sid, p): w for p, w in shard.refresh().items()})
            self.send(msg.sender, "lbd", msg.ident, changes)
        elif msg.kind == "augment":
            reply = {(sid, a, b): self.shards[sid].lower_bound_on_demand(a, b)
                     for sid, a, b in msg.payload if sid in self.shards}
            self.send(msg.sender, "augmented", msg.ident, reply)
        elif msg.kind == "reference":
            reply = {(a, b, sid): self.shards[sid].partial_paths(a, b, depth)
                     for (a, b, sid), depth in sorted(msg.payload.items()) if sid in self.shards}
            self.send(msg.sender, "partial", msg.ident, reply)
        elif msg.kind == "reach":
            blocked, extra = msg.payload
            reply = {sid: sh.terminal_reach(blocked, extra) for sid, sh in sorted(self.shards.items())}
            self.send(msg.sender, "reached", msg.ident, reply)
        else:
            raise ValueError(f"{self.name}: unexpected message {msg.kind}")


@dataclass
class IndexView:
    """What a query worker may read: the partition and its skeleton replica."""

    partition: SubgraphPartition
    directed: bool
    skeleton: SkeletonGraph
    snapshot_version: int


@dataclass
class _Pending:
    steps: object
    waiting: int = 0
    merged: dict = field(default_factory=dict)


class QueryWorker(Actor):
    def __init__(self, name: str, view: IndexView, topology: WorkerTopology, use_cache: bool = True):
        super().__init__(name)
        self.view = view
        self.topology = topology
        self.use_cache = use_cache
        self.sessions: dict[int, _Pending] = {}

    def handle(self, msg: Message) -> None:
        if msg.kind == "skeleton":
            skeleton, version = msg.payload
            self.view = IndexView(self.view.partition, self.view.directed, skeleton, version)
        elif msg.kind == "assign":
            s, t, k = msg.payload
            session = QuerySession(self.view, s, t, k, query_id=msg.ident,
                                   timestamp=self.view.snapshot_version, use_cache=self.use_cache)
            pending = _Pending(session_steps(session))
            self.sessions[msg.ident] = pending
            self._advance(msg.ident, pending, None, first=True)
        elif msg.kind in ("augmented", "partial", "reached"):
            pending = self.sessions[msg.ident]
            pending.merged.update(msg.payload)
            pending.waiting -= 1
            if pending.waiting == 0:
                reply, pending.merged = pending.merged, {}
                self._advance(msg.ident, pending, reply)
        else:
            raise ValueError(f"{self.name}: unexpected message {msg.kind}")

    def _advance(self, qid: int, pending: _Pending, reply, first: bool = False) -> None:
        try:
            request = next(pending.steps) if first else pending.steps.send(reply)
        except StopIteration as stop:
            del self.sessions[qid]
            self.send(ENTRANCE, "result", qid, stop.value)
            return
        if isinstance(request, AugmentRequest):
            by_worker: dict[str, list] = {}
            for want in request.wants:
                by_worker.setdefault(self.topology.owner(want[0]), []).append(want)
            pending.waiting = len(by_worker)
            for worker in sorted(by_worker):
                self.send(worker, "augment", qid, by_worker[worker])
        elif isinstance(request, PartialRequest):
            # the reference request goes to every subgraph worker; each answers for its shards
            workers = self.topology.subgraph_workers
            pending.waiting = len(workers)
            for worker in workers:
                self.send(worker, "reference", qid, dict(request.wants))
        elif isinstance(request, ReachRequest):
            workers = self.topology.subgraph_workers
            pending.waiting = len(workers)
            for worker in workers:
                self.send(worker, "reach", qid, (request.blocked, request.extra))
        else:
            raise TypeError(f"unknown request {request!r}")


@dataclass
class WorkerTopology:
    assignment: dict[int, int]  # subgraph id -> subgraph worker index
    subgraph_workers: list[str]
    query_workers: list[str]

    @classmethod
    def balanced(cls, subgraph_ids: Iterable[int], workers: int, query_workers: int) -> WorkerTopology:
        if workers < 1 or query_workers < 1:
            raise ValueError("need at least one worker of each kind")
        load = [0] * workers
        assignment = {}
        for sid in sorted(subgraph_ids):
            w = min(range(workers), key=lambda i: (load[i], i))
            assignment[sid] = w
            load[w] += 1
        return cls(assignment, [f"S{i}" for i in range(workers)], [f"Q{i}" for i in range(query_workers)])

    def owner(self, sid: int) -> str:
        return self.subgraph_workers[self.assignment[sid]]


class Entrance(Actor):
    def __init__(self, cluster: Cluster):
        super().__init__(ENTRANCE)
        self.cluster = cluster
        self.lbd_changes: dict = {}
        self.results: dict[int, KspResult] = {}

    def handle(self, msg: Message) -> None:
        if msg.kind == "lbd":
            self.lbd_changes.update(msg.payload)
        elif msg.kind == "result":
            self.results[msg.ident] = msg.payload
        else:
            raise ValueError(f"entrance: unexpected message {msg.kind}")


class Cluster:
    """A topology of workers around one DTLP index, which it takes ownership of."""

    def __init__(self, index: DtlpIndex, workers: int = 1, query_workers: int | None = None,
                 seed: int = 0, deterministic: bool = True, use_cache: bool = True):
        self.index = index
        self.topology = WorkerTopology.balanced(index.shards, workers, query_workers or workers)
        self.scheduler = Scheduler(seed, deterministic)
        self.entrance = Entrance(self)
        self.scheduler.register(self.entrance)
        self.subgraph_workers: dict[str, SubgraphWorker] = {}
        for i, name in enumerate(self.topology.subgraph_workers):
            mine = {sid: sh for sid, sh in index.shards.items() if self.topology.assignment[sid] == i}
            worker = SubgraphWorker(name, mine, eager=index.eager)
            self.subgraph_workers[name] = worker
            self.scheduler.register(worker)
        self.query_workers: dict[str, QueryWorker] = {}
        for name in self.topology.query_workers:
            qw = QueryWorker(name, self._view(), self.topology, use_cache=use_cache)
            self.query_workers[name] = qw
            self.scheduler.register(qw)
        self.epoch = 0
        self._next_query = 0
        self._rr = 0

    def _view(self) -> IndexView:
        idx = self.index
        return IndexView(idx.partition, idx.directed, idx.skeleton, idx.snapshot_version)

    @property
    def transcript(self) -> list[str]:
        return self.scheduler.transcript

    def load(self) -> dict[str, int]:
        return {name: a.handled for name, a in sorted(self.scheduler.actors.items())}

    def route_update(self, updates: Sequence[WeightUpdate]) -> set[tuple[Vertex, Vertex]]:
        """Run one update epoch to completion; return the skeleton edges that changed."""
        idx = self.index
        per_worker: dict[str, list] = {}
        for upd in updates:
            u, v = upd.edge
            edge = (u, v) if idx.directed or u < v else (v, u)
            sid = idx.partition.edge_owner.get(edge)
            if sid is None:
                raise GraphError(f"update for unknown edge {upd.edge}")
            per_worker.setdefault(self.topology.owner(sid), []).append((sid, edge, upd.new_weight))
        self.epoch += 1
        self.entrance.lbd_changes = {}
        for worker in sorted(per_worker):
            self.entrance.send(worker, "update", self.epoch, per_worker[worker])
        self.scheduler.run()
        pairs = {pair for (_, pair) in self.entrance.lbd_changes}
        old = idx.skeleton
        edges = _skeleton_edges(idx.shards, pairs, base=old.edges) if pairs else old.edges
        changed = {p for p in pairs if old.edges.get(p, (None,))[0] != edges.get(p, (None,))[0]}
        if changed:
            idx.skeleton = SkeletonGraph(edges, idx.directed, old.vertices, old.version + 1)
        idx.snapshot_version += 1
        for name in self.topology.query_workers:
            self.entrance.send(name, "skeleton", self.epoch, (idx.skeleton, idx.snapshot_version))
        self.scheduler.run()
        return changed

    def process_queries(self, queries: Sequence[tuple[Vertex, Vertex, int]]) -> list[KspResult]:
        """Assign queries round-robin, run them concurrently, return results in input order."""
        ids = []
        for s, t, k in queries:
            qid = self._next_query
            self._next_query += 1
            worker = self.topology.query_workers[self._rr % len(self.topology.query_workers)]
            self._rr += 1
            self.entrance.send(worker, "assign", qid, (s, t, k))
            ids.append(qid)
        self.scheduler.run()
        return [self.entrance.results.pop(qid) for qid in ids]

    def process_query(self, s: Vertex, t: Vertex, k: int) -> KspResult:
        return self.process_queries([(s, t, k)])[0]
