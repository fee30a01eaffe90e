from __future__ import annotations

import io
import json
import random

import pytest

from kspdg import cli
from kspdg.cli import load_queries, main
from kspdg.graph import DynamicGraph, GraphError, load_updates, save_dimacs
from kspdg.simulate import WeightVariationModel

from .conftest import random_graph


@pytest.fixture
def graph_file(tmp_path):
    g = random_graph(random.Random(4), 40, extra=0.8)
    # DIMACS files number vertices from 1
    h = DynamicGraph()
    for v in sorted(g.vertices):
        h.add_vertex(v + 1)
    for (u, v), w in sorted(g.initial_weights.items()):
        h.add_edge(u + 1, v + 1, w)
    path = tmp_path / "g.gr"
    with open(path, "w") as fh:
        save_dimacs(h, fh)
    return path


@pytest.fixture
def query_file(tmp_path):
    rng = random.Random(1)
    lines = [f"q {s} {t} {rng.choice((1, 3, 5))}" for s, t in (rng.sample(range(1, 41), 2) for _ in range(15))]
    path = tmp_path / "q.txt"
    path.write_text("c queries\n" + "\n".join(lines) + "\n")
    return path


# -- simulator -----------------------------------------------------------------

def test_alpha_zero_gives_empty_batches():
    g = random_graph(random.Random(0), 20)
    batches = WeightVariationModel(alpha=0.0, seed=3).batches(g, 4)
    assert [b.updates for b in batches] == [[], [], [], []]


def test_default_metadata():
    meta = WeightVariationModel().metadata()
    assert (meta["alpha"], meta["tau"]) == (0.35, 0.30)


@pytest.mark.parametrize("trend", [False, True])
@pytest.mark.parametrize("tau", [0.0, 0.3, 0.9])
def test_changed_weights_stay_in_range(tau, trend):
    g = random_graph(random.Random(2), 50, max_weight=40)
    model = WeightVariationModel(alpha=0.5, tau=tau, seed=5, trend=trend)
    for b in model.batches(g, 5, apply=True):
        assert len(b.updates) == round(0.5 * len(g.edges))
        signs = set()
        for u in b.updates:
            w0 = g.initial_weights[u.edge]
            assert w0 * (1 - tau) <= u.new_weight <= w0 * (1 + tau)
            if u.new_weight != w0:
                signs.add(u.new_weight > w0)
        if trend:
            assert len(signs) <= 1


def test_large_tau_is_clamped_positive():
    g = random_graph(random.Random(2), 30)
    model = WeightVariationModel(alpha=1.0, tau=3.0, seed=1)
    for b in model.batches(g, 3, apply=True):
        assert all(u.new_weight > 0 for u in b.updates)
    assert model.clamped > 0


def test_bad_model_parameters():
    with pytest.raises(GraphError):
        WeightVariationModel(alpha=1.5)
    with pytest.raises(GraphError):
        WeightVariationModel(tau=-0.1)


# -- query files ---------------------------------------------------------------

def test_query_file_parsing():
    text = io.StringIO("c x\nq 1 2 3\n\nq 4 5 1\n")
    assert load_queries(text) == [(1, 2, 3), (4, 5, 1)]
    assert load_queries(io.StringIO("q 1 2 3\n"), k=7) == [(1, 2, 7)]
    with pytest.raises(GraphError):
        load_queries(io.StringIO("q 1 2\n"))
    with pytest.raises(GraphError):
        load_queries(io.StringIO("q 1 2 0\n"))


# -- pipeline ------------------------------------------------------------------

def _pipeline(tmp, graph_file, query_file, workers):
    idx, upd, out, tr = tmp / "idx", tmp / "u.txt", tmp / f"r{workers}.txt", tmp / f"t{workers}.txt"
    assert main(["build", str(graph_file), "--out", str(idx), "--z", "8", "--xi", "2"]) == 0
    assert main(["simulate", str(graph_file), "--snapshots", "3", "--seed", "9", "--out", str(upd)]) == 0
    assert main(["query", str(idx), str(query_file), "--updates", str(upd), "--out", str(out),
                 "--workers", str(workers), "--transcript", str(tr)]) == 0
    return idx, upd, out.read_bytes(), tr.read_bytes()


def test_pipeline_is_reproducible(tmp_path, graph_file, query_file, capsys):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.mkdir()
    b.mkdir()
    idx, upd, res_a, tr_a = _pipeline(a, graph_file, query_file, 2)
    _, upd_b, res_b, tr_b = _pipeline(b, graph_file, query_file, 2)
    assert (res_a, tr_a) == (res_b, tr_b)
    assert upd.read_bytes() == upd_b.read_bytes()
    assert (idx / "index.txt").read_bytes() == (b / "idx" / "index.txt").read_bytes()
    meta = json.loads((idx / "meta.json").read_text())
    assert meta["z"] == 8 and meta["vertices"] == 40
    assert len(load_updates(upd.read_text())) == 3
    assert res_a.decode().count("r ") == 15
    # other worker counts give the same result file
    _, _, res_4, _ = _pipeline(a, graph_file, query_file, 4)
    assert res_4 == res_a
    capsys.readouterr()
    assert main(["verify", "--index", str(idx), "--queries", str(query_file), "--updates", str(upd)]) == 0
    assert "mismatches 0" in capsys.readouterr().out


def test_verify_exit_code_on_mismatch(tmp_path, graph_file, query_file, monkeypatch):
    idx = tmp_path / "idx"
    assert main(["build", str(graph_file), "--out", str(idx), "--z", "8"]) == 0
    monkeypatch.setattr(cli, "yen_ksp", lambda adj, s, t, k: [])
    assert main(["verify", "--index", str(idx), "--queries", str(query_file)]) == 2


def test_verify_random_instances(capsys):
    assert main(["verify", "--instances", "5", "--seed", "3"]) == 0
    assert "mismatches 0" in capsys.readouterr().out


def test_bench_report(tmp_path, graph_file):
    out = tmp_path / "bench.json"
    assert main(["bench", str(graph_file), "--snapshots", "2", "--queries", "6", "--workers", "2",
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert len(report["query_seconds"]) == 6 and len(report["update_seconds"]) == 2
    assert report["metadata"]["alpha"] == 0.35 and report["metadata"]["tau"] == 0.3


@pytest.mark.parametrize("argv", [
    ["build", "missing.gr", "--out", "x"],
    ["build", "{graph}", "--out", "{tmp}/i", "--z", "1"],
    ["simulate", "{graph}", "--alpha", "2", "--out", "{tmp}/u"],
    ["verify", "--index", "{tmp}"],
])
def test_usage_errors_exit_one(argv, tmp_path, graph_file, capsys):
    assert main([a.format(graph=graph_file, tmp=tmp_path) for a in argv]) == 1


def test_unknown_command_exits_one(capsys):
    with pytest.raises(SystemExit) as caught:
        main(["nonsense"])
    assert caught.value.code == 1


def test_environment_override(tmp_path, graph_file, monkeypatch):
    monkeypatch.setenv("KSPDG_Z", "1")
    assert main(["build", str(graph_file), "--out", str(tmp_path / "i")]) == 1
    assert main(["build", str(graph_file), "--out", str(tmp_path / "i"), "--z", "9"]) == 0
    monkeypatch.setenv("KSPDG_Z", "7")
    assert main(["build", str(graph_file), "--out", str(tmp_path / "j")]) == 0
    assert json.loads((tmp_path / "j" / "meta.json").read_text())["z"] == 7

