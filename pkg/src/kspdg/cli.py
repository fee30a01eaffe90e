"""Command-line driver: ``python -m kspdg {build,simulate,query,bench,verify}``.

Every tuning flag can also come from an environment variable named
``KSPDG_<FLAG>`` (for instance ``KSPDG_Z=40``); an explicit flag wins.
Exit status is 0 on success, 1 on usage or input errors and 2 when
verification finds a mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path as FsPath
from typing import IO, Sequence

from .bench import run_bench
from .dtlp import build_dtlp
from .graph import DynamicGraph, GraphError, load_dimacs, load_updates, save_dimacs, save_updates
from .partition import load_partition, partition, save_partition
from .runtime import Cluster
from .simulate import WeightVariationModel
from .verify import InstanceConfig, verify_instances
from .yen import yen_ksp

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _env(name: str, default):
    return os.environ.get(f"KSPDG_{name.upper()}", default)


def _tuning(p: argparse.ArgumentParser, *names: str) -> None:
    spec = {
        "z": (int, 20, "max vertices per subgraph"),
        "xi": (int, 2, "bounding paths per boundary pair"),
        "k": (int, None, "paths per query (overrides the query file)"),
        "alpha": (float, 0.35, "fraction of edges changed per snapshot"),
        "tau": (float, 0.30, "relative weight variation bound"),
        "workers": (int, 1, "subgraph and query workers"),
        "seed": (int, 0, "random seed"),
    }
    for name in names:
        if name == "mode":
            p.add_argument("--mode", choices=("undirected", "directed"), default=_env("mode", "undirected"))
        elif name == "compress":
            p.add_argument("--compress", choices=("ep", "mfp"), default=_env("compress", "ep"),
                           help="bounding-path maintenance structure")
        else:
            kind, default, text = spec[name]
            p.add_argument(f"--{name}", type=kind, default=_env(name, default), help=text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kspdg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("build", help="partition a DIMACS graph and build its index")
    p.add_argument("graph")
    p.add_argument("--out", required=True, help="index directory to create")
    _tuning(p, "z", "xi", "seed", "mode", "compress")

    p = sub.add_parser("simulate", help="draw update batches from the (alpha, tau) model")
    p.add_argument("graph")
    p.add_argument("--snapshots", type=int, default=1)
    p.add_argument("--trend", action="store_true", help="one direction of change per snapshot")
    p.add_argument("--out", required=True)
    _tuning(p, "alpha", "tau", "seed", "mode")

    p = sub.add_parser("query", help="answer a query file against an index")
    p.add_argument("index", help="directory written by 'build'")
    p.add_argument("queries")
    p.add_argument("--updates", help="update batches applied before querying")
    p.add_argument("--out", help="result file (default stdout)")
    p.add_argument("--transcript", help="write the message transcript here")
    _tuning(p, "k", "workers", "seed")

    p = sub.add_parser("bench", help="time build, update epochs and queries")
    p.add_argument("graph")
    p.add_argument("--snapshots", type=int, default=3)
    p.add_argument("--queries", type=int, default=20)
    p.add_argument("--trend", action="store_true")
    p.add_argument("--out", help="JSON report (default stdout)")
    _tuning(p, "z", "xi", "k", "alpha", "tau", "workers", "seed", "mode", "compress")

    p = sub.add_parser("verify", help="differential check against whole-graph Yen")
    p.add_argument("--instances", type=int, default=200, help="random instances to draw")
    p.add_argument("--index", help="check a built index instead of random instances")
    p.add_argument("--queries", help="query file for --index")
    p.add_argument("--updates")
    _tuning(p, "k", "seed", "compress")
    return parser


# -- file formats -------------------------------------------------------------

def load_queries(stream: IO[str], k: int | None = None) -> list[tuple[int, int, int]]:
    """``q <s> <t> <k>`` lines; a given ``k`` replaces the per-line value."""
    out = []
    for lineno, line in enumerate(stream, 1):
        parts = line.split()
        if not parts or parts[0] == "c":
            continue
        if parts[0] != "q" or len(parts) != 4:
            raise GraphError(f"line {lineno}: expected 'q <s> <t> <k>'")
        s, t, kk = (int(x) for x in parts[1:])
        out.append((s, t, k if k is not None else kk))
    for _, _, kk in out:
        if kk < 1:
            raise GraphError(f"k must be >= 1, got {kk}")
    return out


def _read_graph(path: str, mode: str) -> DynamicGraph:
    with open(path, "rb") as fh:
        return load_dimacs(fh, directed=mode == "directed")


def _open_index(directory: str):
    d = FsPath(directory)
    meta = json.loads((d / "meta.json").read_text())
    graph = _read_graph(str(d / "graph.gr"), meta["mode"])
    with open(d / "partition.txt") as fh:
        part = load_partition(fh, graph)
    index = build_dtlp(part, graph.snapshot(), meta["xi"], compress_mfp=meta["compress"] == "mfp")
    return meta, graph, index


def _check(args) -> None:
    for name, low in (("z", 2), ("xi", 1), ("k", 1), ("workers", 1)):
        value = getattr(args, name, None)
        if value is not None and value < low:
            raise UsageError(f"--{name} must be >= {low}, got {value}")
    if hasattr(args, "alpha") and not 0 <= args.alpha <= 1:
        raise UsageError(f"--alpha must be in [0, 1], got {args.alpha}")
    if hasattr(args, "tau") and args.tau < 0:
        raise UsageError(f"--tau must be >= 0, got {args.tau}")


# -- commands -----------------------------------------------------------------

def cmd_build(args) -> int:
    graph = _read_graph(args.graph, args.mode)
    part = partition(graph, args.z, seed=args.seed or None)
    index = build_dtlp(part, graph.snapshot(), args.xi, compress_mfp=args.compress == "mfp")
    out = FsPath(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "graph.gr", "w") as fh:
        save_dimacs(graph, fh)
    with open(out / "partition.txt", "w") as fh:
        save_partition(part, fh)
    with open(out / "index.txt", "w") as fh:
        index.dump(fh)
    meta = {"z": args.z, "xi": args.xi, "mode": args.mode, "compress": args.compress, "seed": args.seed,
            "vertices": len(graph.vertices), "edges": len(graph.edges), "subgraphs": len(part.subgraphs),
            "skeleton_vertices": len(part.boundary_vertices), "skeleton_edges": len(index.skeleton.edges)}
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(json.dumps(meta, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    graph = _read_graph(args.graph, args.mode)
    model = WeightVariationModel(args.alpha, args.tau, seed=args.seed, trend=args.trend)
    batches = model.batches(graph, args.snapshots, apply=True)
    with open(args.out, "w") as fh:
        save_updates(batches, fh, metadata={**model.metadata(), "clamped": model.clamped})
    return EXIT_OK


def _run_queries(index, graph, queries, updates, workers, seed):
    cluster = Cluster(index, workers=workers, seed=seed)
    for batch in updates:
        graph.apply_snapshot(batch.updates, batch.timestamp)
        cluster.route_update(batch.updates)
    return cluster, cluster.process_queries(queries)


def _load_updates(path: str | None):
    if not path:
        return []
    with open(path) as fh:
        return load_updates(fh)


def cmd_query(args) -> int:
    _, graph, index = _open_index(args.index)
    with open(args.queries) as fh:
        queries = load_queries(fh, args.k)
    cluster, results = _run_queries(index, graph, queries, _load_updates(args.updates), args.workers, args.seed)
    text = "".join(r.format() for r in results)
    if args.out:
        FsPath(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.transcript:
        FsPath(args.transcript).write_text("\n".join(cluster.transcript) + "\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    graph = _read_graph(args.graph, args.mode)
    report = run_bench(graph, z=args.z, xi=args.xi, k=args.k or 5, snapshots=args.snapshots,
                       queries=args.queries, alpha=args.alpha, tau=args.tau, workers=args.workers,
                       seed=args.seed, compress=args.compress == "mfp", trend=args.trend)
    text = json.dumps(report.summary(), indent=2, sort_keys=True) + "\n"
    if args.out:
        FsPath(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.index:
        if not args.queries:
            raise UsageError("--index needs --queries")
        _, graph, index = _open_index(args.index)
        with open(args.queries) as fh:
            queries = load_queries(fh, args.k)
        _, results = _run_queries(index, graph, queries, _load_updates(args.updates), 1, args.seed)
        adj = graph.snapshot().adjacency()
        bad = 0
        for (s, t, k), res in zip(queries, results):
            expected = [p.distance for p in yen_ksp(adj, s, t, k)]
            if res.distances != expected:
                bad += 1
                print(f"mismatch q {s} {t} {k}: got {res.distances} expected {expected}")
        print(f"queries {len(queries)} mismatches {bad}")
        return EXIT_MISMATCH if bad else EXIT_OK
    config = InstanceConfig() if args.k is None else InstanceConfig(k_choices=(args.k,))
    report = verify_instances(args.instances, seed=args.seed, config=config, compress=args.compress == "mfp")
    for m in report.mismatches:
        print(f"mismatch {m.instance} q={m.query}: got {m.got} expected {m.expected}")
    print(report.summary())
    return EXIT_OK if report.ok else EXIT_MISMATCH


COMMANDS = {"build": cmd_build, "simulate": cmd_simulate, "query": cmd_query,
            "bench": cmd_bench, "verify": cmd_verify}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        _check(args)
        return COMMANDS[args.command](args)
    except (UsageError, GraphError, OSError, ValueError) as exc:
        print(f"kspdg {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
