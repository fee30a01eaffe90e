from __future__ import annotations

import io
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from kspdg.dtlp import (IndexCorruption, UnitWeightMultiset, bound_distance, build_dtlp,
                        compute_bounding_paths, select_lower_bound, update_dtlp)
from kspdg.graph import DynamicGraph, WeightUpdate, path_distance
from kspdg.partition import partition
from kspdg.yen import shortest_distance

from .conftest import DETOUR_UPDATE, all_simple_paths, random_graph


def _detour_updates():
    return [WeightUpdate(e, w) for e, w in DETOUR_UPDATE.items()]


def _random_updates(rng, graph, count):
    out = []
    for _ in range(count):
        e = rng.choice(graph.edges)
        w0 = graph.initial_weights[e]
        out.append(WeightUpdate(e, Fraction(rng.randint(1, 20 * w0), 10)))
    return out


# -- bound distance ------------------------------------------------------------

def test_bound_distance_uniform():
    ms = UnitWeightMultiset([(1, 18)])
    assert bound_distance(8, ms) == 8


def test_bound_distance_after_update():
    ms = UnitWeightMultiset([(Fraction(1, 3), 3), (Fraction(1, 2), 4), (1, 8), (2, 3)])
    assert bound_distance(8, ms) == 4


def test_bound_distance_overflow_is_corruption():
    with pytest.raises(IndexCorruption):
        bound_distance(5, UnitWeightMultiset([(1, 4)]))


@given(st.lists(st.tuples(st.fractions(min_value=Fraction(1, 50), max_value=50), st.integers(1, 6)),
                min_size=1, max_size=20), st.data())
def test_bound_distance_matches_sort_oracle(items, data):
    ms = UnitWeightMultiset(items)
    flat = sorted(u for u, m in items for _ in range(m))
    phi = data.draw(st.integers(0, len(flat)))
    assert bound_distance(phi, ms) == sum(flat[:phi], Fraction(0))


@given(st.lists(st.tuples(st.integers(1, 9), st.integers(1, 4)), min_size=2, max_size=12))
def test_multiset_remove_restores(items):
    ms = UnitWeightMultiset(items)
    ms.add(Fraction(7, 3), 2)
    ms.remove(Fraction(7, 3), 2)
    assert ms == UnitWeightMultiset(items)
    assert ms.total == sum(m for _, m in items)


# -- lower bound selection -----------------------------------------------------

def test_select_lower_bound_claim_one():
    lb = select_lower_bound([("p1", 4, 9), ("p2", 6, 10), ("p3", 8, 8)])
    assert (lb.path, lb.lbd, lb.claim) == ("p3", 8, 1)


def test_select_lower_bound_claim_two():
    lb = select_lower_bound([("p1", 2, 7), ("p2", 3, 6), ("p3", 4, 5)])
    assert (lb.path, lb.lbd, lb.claim) == ("p3", 4, 2)


def test_select_lower_bound_single_tight():
    lb = select_lower_bound([("p", 5, 5)])
    assert (lb.path, lb.lbd, lb.claim) == ("p", 5, 1)


def test_select_lower_bound_certifies_at_shared_count():
    # the second class has unseen members, so only its BD is certified
    lb = select_lower_bound([("p1", 2, 9, True), ("p2", 3, 8, False), ("p3", 6, 7, True)])
    assert (lb.path, lb.lbd, lb.claim) == ("p2", 3, 2)


def test_select_lower_bound_empty():
    with pytest.raises(ValueError):
        select_lower_bound([])


# -- bounding paths ------------------------------------------------------------

def test_detour_bounding_paths(detour_graph, detour_partition):
    index = build_dtlp(detour_partition, detour_graph.snapshot(), 2)
    shard = index.shards[0]
    entry = shard.pairs[(13, 14)]
    paths = [shard.paths[p] for p in entry.path_ids]
    assert [(p.vertices, p.phi) for p in paths] == [((13, 16, 14), 8), ((13, 18, 17, 16, 14), 10)]
    # all unit weights are 1: BD equals D for the first path
    assert entry.lbd == 8 and entry.claim == 1

    one = build_dtlp(detour_partition, detour_graph.snapshot(), 1).shards[0]
    assert [one.paths[p].vertices for p in one.pairs[(13, 14)].path_ids] == [(13, 16, 14)]


def test_detour_update_bound(detour_graph, detour_partition):
    index = build_dtlp(detour_partition, detour_graph.snapshot(), 2)
    detour_graph.apply_snapshot(_detour_updates())
    update_dtlp(index, _detour_updates())
    shard = index.shards[0]
    p1, p2 = shard.pairs[(13, 14)].path_ids
    assert bound_distance(shard.paths[p1].phi, shard.multiset) == 4
    assert bound_distance(shard.paths[p2].phi, shard.multiset) == 6
    assert shard.distance[p2] == 6
    entry = shard.pairs[(13, 14)]
    assert (entry.lbd, entry.lower_path, entry.claim) == (6, p2, 1)
    assert index.skeleton.weight(13, 14) == 6
    assert shortest_distance(detour_graph.snapshot().adjacency(), 13, 14) == 6


def test_disconnected_pair_gives_no_paths():
    assert compute_bounding_paths({1: {}, 2: {}}, 1, 2, 3) == []
    with pytest.raises(ValueError):
        compute_bounding_paths({1: {2: 1}, 2: {1: 1}}, 1, 2, 0)


@given(st.integers(0, 10**6), st.integers(1, 4), st.booleans())
def test_bounding_paths_match_exhaustive_grouping(seed, xi, directed):
    rng = random.Random(seed)
    g = random_graph(rng, 10, directed=directed, extra=0.8, max_weight=4)
    adj = g.snapshot().adjacency()
    s, t = rng.sample(range(10), 2)
    every = all_simple_paths(adj, s, t)
    by_phi: dict[int, set] = {}
    for d, vs in every:
        by_phi.setdefault(d, set()).add(vs)
    phis = sorted(by_phi)
    found = compute_bounding_paths(adj, s, t, xi, factor=10**6)
    assert [phi for _, phi, _ in found] == phis[:xi]
    for vs, phi, exclusive in found:
        assert vs in by_phi[phi]
        assert exclusive == (len(by_phi[phi]) == 1)


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_cutoff_marks_last_class_shared(seed, xi):
    rng = random.Random(seed)
    g = random_graph(rng, 9, extra=1.2, max_weight=3)
    adj = g.snapshot().adjacency()
    s, t = rng.sample(range(9), 2)
    full = compute_bounding_paths(adj, s, t, xi, factor=10**6)
    cut = compute_bounding_paths(adj, s, t, xi, factor=1)
    assert [phi for _, phi, _ in cut] == [phi for _, phi, _ in full][:len(cut)]
    for (_, _, ex_cut), (_, _, ex_full) in zip(cut, full):
        assert ex_full or not ex_cut


# -- index-wide properties -----------------------------------------------------

def _instance(seed, n=30, z=None, xi=None, directed=None):
    rng = random.Random(seed)
    directed = rng.random() < 0.3 if directed is None else directed
    g = random_graph(rng, n, directed=directed, extra=0.7)
    part = partition(g, z or rng.choice((4, 6, 9)))
    index = build_dtlp(part, g.snapshot(), xi or rng.choice((1, 2, 3)))
    return rng, g, part, index


def _check_soundness(index, graph):
    snap = graph.snapshot()
    for sid, shard in index.shards.items():
        adj = shard.adjacency
        for (a, b), entry in shard.pairs.items():
            true = shortest_distance(adj, a, b)
            assert entry.lbd <= true
            for pid in entry.path_ids:
                bp = shard.paths[pid]
                assert bound_distance(bp.phi, shard.multiset) <= shard.distance[pid]
                assert shard.distance[pid] == path_distance(snap, bp.vertices)
            if entry.claim == 1:
                assert entry.lbd == true
    for (a, b), (w, sid) in index.skeleton.edges.items():
        for s in index.partition.locate_pair(a, b):
            d = shortest_distance(index.shards[s].adjacency, a, b)
            if d is not None:
                assert w <= d


@given(st.integers(0, 10**6))
def test_soundness_across_snapshots(seed):
    rng, g, part, index = _instance(seed)
    _check_soundness(index, g)
    for _ in range(3):
        ups = _random_updates(rng, g, 15)
        g.apply_snapshot(ups)
        update_dtlp(index, ups)
        _check_soundness(index, g)


@given(st.integers(0, 10**6))
def test_update_equals_rebuild(seed):
    rng, g, part, index = _instance(seed)
    signature = index.bounding_signature()
    ups = _random_updates(rng, g, 500)
    g.apply_snapshot(ups)
    update_dtlp(index, ups)
    rebuilt = build_dtlp(part, g.snapshot(), index.xi, initial_weights=g.initial_weights)
    assert index.bounding_signature() == signature == rebuilt.bounding_signature()
    assert index.lbd_table() == rebuilt.lbd_table()
    assert index.skeleton.edges == rebuilt.skeleton.edges
    for sid, shard in index.shards.items():
        assert shard.distance == {p: d for p, d in rebuilt.shards[sid].distance.items()}


def test_zero_delta_changes_nothing():
    rng, g, part, index = _instance(7)
    before = index.skeleton
    same = [WeightUpdate(e, g.current_weights[e]) for e in g.edges[:10]]
    g.apply_snapshot(same)
    assert update_dtlp(index, same) == set()
    assert index.skeleton is before
    assert index.snapshot_version == 1


def test_eager_and_lazy_agree():
    rng, g, part, lazy = _instance(11)
    eager = build_dtlp(part, g.snapshot(), lazy.xi, eager=True, initial_weights=g.initial_weights)
    for _ in range(4):
        ups = _random_updates(rng, g, 25)
        g.apply_snapshot(ups)
        assert update_dtlp(lazy, ups) == update_dtlp(eager, ups)
    assert lazy.lbd_table() == eager.lbd_table()


def test_one_subgraph_means_empty_skeleton():
    g = DynamicGraph.from_edges([(1, 2, 1), (2, 3, 2), (1, 3, 4)])
    index = build_dtlp(partition(g, 10), g.snapshot(), 2)
    assert len(index.skeleton) == 0 and index.skeleton.edges == {}


def test_build_is_deterministic_and_dumps():
    _, g, part, index = _instance(3, directed=True)
    other = build_dtlp(part, g.snapshot(), index.xi)
    a, b = io.StringIO(), io.StringIO()
    index.dump(a)
    other.dump(b)
    assert a.getvalue() == b.getvalue()
    lines = a.getvalue().splitlines()
    assert all(line.split()[0] in ("b", "k") for line in lines)
    assert sum(line.startswith("k ") for line in lines) == len(index.skeleton.edges)


def test_directed_pairs_have_both_orientations():
    _, g, part, index = _instance(5, directed=True)
    for shard in index.shards.values():
        for a, b in shard.pairs:
            if shortest_distance(shard.adjacency, b, a) is not None:
                assert (b, a) in shard.pairs


def test_update_on_unknown_edge_is_corruption():
    _, g, part, index = _instance(2, directed=False)
    with pytest.raises(IndexCorruption):
        update_dtlp(index, [WeightUpdate((10**6, 10**6 + 1), 3)])


def test_non_initial_snapshot_needs_initial_weights():
    rng, g, part, index = _instance(4)
    g.apply_snapshot(_random_updates(rng, g, 3))
    with pytest.raises(ValueError):
        build_dtlp(part, g.snapshot(), 2)
