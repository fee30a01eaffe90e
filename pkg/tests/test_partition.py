from __future__ import annotations

import io
import random

import pytest
from hypothesis import given, strategies as st

from kspdg.graph import DynamicGraph, GraphError
from kspdg.partition import load_partition, partition, partition_from_sets, save_partition

from .conftest import all_simple_paths, random_graph


def test_small_graph_fits_in_one_subgraph():
    g = DynamicGraph.from_edges([(1, 2, 1), (2, 3, 1), (3, 1, 1)])
    part = partition(g, 5)
    assert len(part) == 1
    assert part.boundary_vertices == frozenset()


def test_z_below_two_rejected():
    g = DynamicGraph.from_edges([(1, 2, 1)])
    with pytest.raises(GraphError):
        partition(g, 1)


def test_large_random_graph_invariants():
    g = random_graph(random.Random(200), 200)
    part = partition(g, 30)
    part.check(g)
    assert sum(len(sg.edges) for sg in part) == len(g.edges)
    seen = set()
    for sg in part:
        assert len(sg) <= 30
        seen |= sg.vertices
        for v in sg.vertices:
            assert (v in part.boundary_vertices) == (len(part.vertex_to_subgraphs[v]) >= 2)
    assert seen == g.vertices


@given(st.integers(0, 10**6), st.integers(2, 12), st.booleans())
def test_partition_invariants(seed, z, directed):
    rng = random.Random(seed)
    g = random_graph(rng, rng.randint(3, 40), directed=directed)
    part = partition(g, z)
    part.check(g)
    for v, sids in part.vertex_to_subgraphs.items():
        assert (len(sids) >= 2) == part.is_boundary(v)
        assert part.home(v) == min(sids)


def test_partition_is_deterministic():
    g = random_graph(random.Random(5), 60)
    a, b = partition(g, 8), partition(g, 8)
    assert [(sg.vertices, sg.edges) for sg in a] == [(sg.vertices, sg.edges) for sg in b]
    shuffled = partition(g, 8, seed=11)
    shuffled.check(g)


@given(st.integers(0, 10**6))
def test_separator_property(seed):
    rng = random.Random(seed)
    g = random_graph(rng, 10, extra=0.8)
    part = partition(g, rng.randint(2, 5))
    adj = g.snapshot().adjacency()
    inner = [v for v in g.vertices if not part.is_boundary(v)]
    for _ in range(5):
        if len(inner) < 2:
            return
        u, w = rng.sample(inner, 2)
        if part.home(u) == part.home(w):
            continue
        for _, path in all_simple_paths(adj, u, w):
            assert any(part.is_boundary(x) for x in path[1:-1])


@given(st.integers(0, 10**6))
def test_locate_pair_matches_scan(seed):
    rng = random.Random(seed)
    g = random_graph(rng, 30)
    part = partition(g, rng.randint(3, 9))
    for _ in range(20):
        u, v = rng.choice(sorted(g.vertices)), rng.choice(sorted(g.vertices))
        scan = {sg.id for sg in part if u in sg.vertices and v in sg.vertices}
        assert part.locate_pair(u, v) == scan


def test_locate_pair_on_shared_vertex(detour_graph, detour_partition):
    assert detour_partition.locate_pair(13, 13) == {0, 1}
    assert detour_partition.locate_pair(13, 14) == {0}
    assert detour_partition.locate_pair(20, 21) == set()
    with pytest.raises(GraphError):
        detour_partition.locate_pair(13, 99)


def test_explicit_partition_validation(detour_graph):
    with pytest.raises(GraphError):
        partition_from_sets(detour_graph, {0: [(13, 16)], 1: [(13, 16)]})
    with pytest.raises(GraphError):
        partition_from_sets(detour_graph, {0: [(13, 16)]})
    with pytest.raises(GraphError):
        partition_from_sets(detour_graph, {0: [(13, 99)]})


def test_dump_round_trip():
    g = random_graph(random.Random(9), 50)
    part = partition(g, 7)
    buf = io.StringIO()
    save_partition(part, buf)
    again = load_partition(buf.getvalue(), g)
    assert again.z == part.z
    assert [(sg.id, sg.vertices, sg.edges, sg.boundary) for sg in again] == \
        [(sg.id, sg.vertices, sg.edges, sg.boundary) for sg in part]
    with pytest.raises(GraphError):
        load_partition("e 1 2\n", g)


def test_shared_counts_histogram(detour_partition):
    assert detour_partition.shared_counts() == {2: 2}
