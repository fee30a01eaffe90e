"""Exact k shortest simple paths on dynamic graphs via a two-level path index."""

from .dtlp import DtlpIndex, SkeletonGraph, bound_distance, build_dtlp, compute_bounding_paths, select_lower_bound, update_dtlp
from .engine import KspResult, QuerySession, augment_endpoints, candidate_ksp, ksp_query, run_ksp_dg, verify_lower_bound_lemma
from .graph import DynamicGraph, GraphError, Path, Snapshot, WeightUpdate, load_dimacs, load_updates, path_distance, save_dimacs, save_updates
from .partition import SubgraphPartition, partition
from .runtime import Cluster
from .simulate import WeightVariationModel
from .yen import KspGenerator, yen_ksp

__all__ = [
    "Cluster", "DtlpIndex", "DynamicGraph", "GraphError", "KspGenerator", "KspResult", "Path",
    "QuerySession", "SkeletonGraph", "Snapshot", "SubgraphPartition", "WeightUpdate",
    "WeightVariationModel", "augment_endpoints", "bound_distance", "build_dtlp", "candidate_ksp",
    "compute_bounding_paths", "ksp_query", "load_dimacs", "load_updates", "partition",
    "path_distance", "run_ksp_dg", "save_dimacs", "save_updates", "select_lower_bound",
    "update_dtlp", "verify_lower_bound_lemma", "yen_ksp",
]
