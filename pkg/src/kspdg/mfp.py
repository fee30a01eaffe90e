"""Compressed edge -> bounding-path lists: MinHash/LSH grouping plus MFP-trees.

Edges whose path sets are Jaccard-similar are grouped by banded MinHash
signatures; each group's path sets are folded into one MFP-tree, a prefix tree
whose leaves (tail nodes) are edges.  A tail node remembers how many path
nodes sit directly above it, which is all that is needed to recover the
edge's path set by walking up.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping, MutableMapping, Sequence

import numpy as np

from .graph import Edge, Weight

MERSENNE_31 = (1 << 31) - 1
EMPTY = np.int64(MERSENNE_31)  # sentinel signature value for empty columns


@dataclass
class PeMatrix:
    """Boolean path x edge membership, stored column-wise."""

    paths: list[int]
    edges: list[Edge]
    columns: dict[Edge, frozenset[int]]

    @classmethod
    def from_lists(cls, lists: Mapping[Edge, Iterable[int]]) -> PeMatrix:
        columns = {e: frozenset(ps) for e, ps in lists.items()}
        paths = sorted({p for ps in columns.values() for p in ps})
        return cls(paths, sorted(columns), columns)

    def to_array(self) -> np.ndarray:
        row = {p: i for i, p in enumerate(self.paths)}
        out = np.zeros((len(self.paths), len(self.edges)), dtype=bool)
        for j, e in enumerate(self.edges):
            for p in self.columns[e]:
                out[row[p], j] = True
        return out

    def occurrences(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for ps in self.columns.values():
            for p in ps:
                counts[p] = counts.get(p, 0) + 1
        return counts


@dataclass
class SigMatrix:
    edges: list[Edge]
    values: np.ndarray  # shape (h, len(edges))
    bands: int

    @property
    def h(self) -> int:
        return self.values.shape[0]

    @property
    def rows_per_band(self) -> int:
        return self.h // self.bands

    def column(self, e: Edge) -> np.ndarray:
        return self.values[:, self.edges.index(e)]

    def is_empty(self, j: int) -> bool:
        return bool(np.all(self.values[:, j] == EMPTY))


def hash_coefficients(h: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    a = rng.integers(1, MERSENNE_31, size=h, dtype=np.int64)
    b = rng.integers(0, MERSENNE_31, size=h, dtype=np.int64)
    return a, b


def minhash_column(items: Iterable[int], a: np.ndarray, b: np.ndarray) -> np.ndarray:
    xs = np.fromiter(((x + 1) % MERSENNE_31 for x in items), dtype=np.int64)
    if xs.size == 0:
        return np.full(a.shape, EMPTY, dtype=np.int64)
    return ((a[:, None] * xs[None, :] + b[:, None]) % MERSENNE_31).min(axis=1)


def minhash_signatures(pe: PeMatrix, h: int = 128, bands: int = 32, seed: int = 0) -> SigMatrix:
    """One MinHash row per universal hash ``(a*x + b) mod (2^31 - 1)``."""
    if not (h >= bands >= 1) or h % bands:
        raise ValueError(f"need h >= b >= 1 and h % b == 0, got h={h}, b={bands}")
    a, b = hash_coefficients(h, seed)
    values = np.empty((h, len(pe.edges)), dtype=np.int64)
    for j, e in enumerate(pe.edges):
        values[:, j] = minhash_column(pe.columns[e], a, b)
    return SigMatrix(list(pe.edges), values, bands)


def estimate_jaccard(sig_a: np.ndarray, sig_b: np.ndarray) -> float:
    return float(np.mean(sig_a == sig_b))


def lsh_group(sig: SigMatrix) -> list[list[Edge]]:
    """Connected components of the "same bucket in some band" relation."""
    m = len(sig.edges)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    r = sig.rows_per_band
    live = [j for j in range(m) if not sig.is_empty(j)]
    for band in range(sig.bands):
        block = sig.values[band * r:(band + 1) * r]
        buckets: dict[bytes, int] = {}
        for j in live:
            key = block[:, j].tobytes()
            first = buckets.setdefault(key, j)
            if first != j:
                ri, rj = find(first), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[Edge]] = {}
    for j in range(m):
        groups.setdefault(find(j), []).append(sig.edges[j])
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


class MfpNode:
    __slots__ = ("label", "is_tail", "parent", "children", "size")

    def __init__(self, label, parent: MfpNode | None, is_tail: bool = False, size: int = 0):
        self.label = label
        self.is_tail = is_tail
        self.parent = parent
        self.children: dict[object, MfpNode] = {}
        self.size = size

    def __repr__(self) -> str:
        kind = "tail" if self.is_tail else "path"
        return f"MfpNode({kind} {self.label!r})"


class MfpTree:
    def __init__(self):
        self.root = MfpNode(None, None)
        self.tails: dict[Edge, MfpNode] = {}

    def _longest_prefix(self, seq: Sequence[int]) -> tuple[int, MfpNode | None]:
        # breadth-first, children in insertion order; first longest match wins
        best_len, best_end = 0, None
        queue = deque(self.root.children.values())
        while queue:
            node = queue.popleft()
            queue.extend(node.children.values())
            if node.is_tail or node.label != seq[0]:
                continue
            i, cur = 1, node
            while i < len(seq) and seq[i] in cur.children and not cur.children[seq[i]].is_tail:
                cur = cur.children[seq[i]]
                i += 1
            if i > best_len:
                best_len, best_end = i, cur
                if i == len(seq):
                    break
        return best_len, best_end

    def insert(self, edge: Edge, paths: Sequence[int]) -> MfpNode:
        if edge in self.tails:
            raise ValueError(f"duplicate edge {edge} in MFP group")
        matched, cur = self._longest_prefix(paths) if paths else (0, None)
        if cur is None:
            cur = self.root
        for p in paths[matched:]:
            node = MfpNode(p, cur)
            cur.children[p] = node
            cur = node
        tail = MfpNode(edge, cur, is_tail=True, size=len(paths))
        cur.children[("tail", edge)] = tail
        self.tails[edge] = tail
        return tail

    def decompress(self, edge: Edge) -> list[int]:
        node = self.tails[edge]
        out = []
        cur = node.parent
        for _ in range(node.size):
            out.append(cur.label)
            cur = cur.parent
        return out

    def nodes(self):
        stack = list(self.root.children.values())
        while stack:
            n = stack.pop()
            yield n
            stack.extend(n.children.values())

    def path_node_count(self) -> int:
        return sum(1 for n in self.nodes() if not n.is_tail)

    def dump(self) -> list[str]:
        """Pre-order listing, one node per line, indented by depth."""
        lines = []

        def walk(n: MfpNode, depth: int):
            for c in n.children.values():
                tag = f"e {c.label[0]} {c.label[1]} |{c.size}|" if c.is_tail else f"p {c.label}"
                lines.append("  " * depth + tag)
                walk(c, depth + 1)

        walk(self.root, 0)
        return lines


def order_path_set(paths: Iterable[int], occurrences: Mapping[int, int]) -> list[int]:
    return sorted(paths, key=lambda p: (-occurrences.get(p, 0), p))


def build_mfp_tree(group: Sequence[tuple[Edge, Sequence[int]]]) -> MfpTree:
    """Insert each ``(edge, ordered path set)`` of one LSH group in order."""
    tree = MfpTree()
    for edge, paths in group:
        tree.insert(edge, list(paths))
    return tree


class MfpForest:
    """Merged tree ``T_e``: an empty root whose children are the group trees."""

    def __init__(self, trees: Sequence[MfpTree], distances: MutableMapping[int, Weight]):
        self.root = MfpNode(None, None)
        self.trees = list(trees)
        self.distances = distances
        self.locator: dict[Edge, tuple[int, MfpNode]] = {}
        for i, t in enumerate(self.trees):
            t.root.parent = self.root
            self.root.children[i] = t.root
            for e, tail in t.tails.items():
                self.locator[e] = (i, tail)

    def decompress(self, edge: Edge) -> list[int]:
        try:
            i, _ = self.locator[edge]
        except KeyError:
            raise KeyError(f"edge {edge} has no tail node") from None
        return self.trees[i].decompress(edge)

    def paths_for(self, edge: Edge) -> list[int]:
        return self.decompress(edge) if edge in self.locator else []

    def entries(self, edge: Edge) -> list[tuple[int, Weight]]:
        return [(p, self.distances[p]) for p in self.paths_for(edge)]

    def path_node_count(self) -> int:
        return sum(t.path_node_count() for t in self.trees)

    def node_count(self) -> int:
        return self.path_node_count() + len(self.locator)

    def dump(self) -> list[str]:
        lines = []
        for i, t in enumerate(self.trees):
            lines.append(f"g {i}")
            lines.extend("  " + s for s in t.dump())
        return lines


def merge_trees(trees: Sequence[MfpTree], distances: MutableMapping[int, Weight] | None = None) -> MfpForest:
    return MfpForest(trees, {} if distances is None else distances)


def mfp_update(forest: MfpForest, edge: Edge, delta: Weight) -> list[tuple[int, Weight]]:
    """Shift the distance of every path through ``edge`` by ``delta``."""
    out = []
    for p in forest.decompress(edge):
        forest.distances[p] = forest.distances[p] + delta
        out.append((p, forest.distances[p]))
    return out


def compress(lists: Mapping[Edge, Iterable[int]], distances: MutableMapping[int, Weight],
             h: int = 128, bands: int = 32, seed: int = 0) -> MfpForest:
    """EP-index lists -> PE-matrix -> signatures -> LSH groups -> merged forest."""
    pe = PeMatrix.from_lists(lists)
    occ = pe.occurrences()
    if not pe.edges:
        return merge_trees([], distances)
    sig = minhash_signatures(pe, h, bands, seed)
    trees = []
    for group in lsh_group(sig):
        trees.append(build_mfp_tree([(e, order_path_set(pe.columns[e], occ)) for e in group]))
    return merge_trees(trees, distances)
