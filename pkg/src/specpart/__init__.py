"""Spectral graph partitioning: Laplacian eigenvectors from preconditioned
LOBPCG, embedded and cut by multi-jagged multisection."""

__version__ = "0.1.0"

from .eigensolver import Breakdown, EigenResult, SolverConfig, lobpcg
from .graph import (
    Graph,
    Kind,
    MatrixMarketError,
    Partition,
    classify,
    cutsize,
    imbalance,
    largest_connected_component,
    parse_matrix_market,
    read_matrix_market,
)
from .laplacian import ProblemKind, build_problem
from .partitioner import InfeasiblePartsError, eigenvector_count, embed, mj_partition
from .pipeline import RunConfig, RunReport, partition_graph, run, select_defaults

__all__ = [
    "Breakdown",
    "EigenResult",
    "Graph",
    "InfeasiblePartsError",
    "Kind",
    "MatrixMarketError",
    "Partition",
    "ProblemKind",
    "RunConfig",
    "RunReport",
    "SolverConfig",
    "build_problem",
    "classify",
    "cutsize",
    "eigenvector_count",
    "embed",
    "imbalance",
    "largest_connected_component",
    "lobpcg",
    "mj_partition",
    "parse_matrix_market",
    "partition_graph",
    "read_matrix_market",
    "run",
    "select_defaults",
]
