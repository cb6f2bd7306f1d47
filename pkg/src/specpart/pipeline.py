"""End-to-end spectral partitioning with graph-dependent defaults."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from .eigensolver import (
    EigenResult,
    SolverConfig,
    initial_guess_piecewise,
    initial_guess_random,
    lobpcg,
)
from .graph import Graph, GraphKind, Kind, Partition, classify
from .laplacian import ProblemKind, build_problem
from .partitioner import InfeasiblePartsError, Embedding, eigenvector_count, embed, mj_partition
from .preconditioners import (
    AmgConfig,
    PolyConfig,
    PrecondKind,
    amg_build,
    jacobi_build,
    polynomial_build,
)

log = logging.getLogger(__name__)

AUTO = "auto"
NONE = "none"


class InitKind(str, Enum):
    RANDOM = "random"
    PIECEWISE = "piecewise"


@dataclass
class RunConfig:
    K: int
    problem: str = AUTO
    precond: str = AUTO
    tol: Optional[float] = None
    max_iters: int = 1000
    seed: int = 0
    epsilon: float = 0.01
    doubled_cut: bool = False
    init: str = AUTO
    poly_degree: int = 25
    initial_vectors: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.K < 2:
            raise InfeasiblePartsError(f"need K >= 2, got {self.K}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.problem != AUTO:
            self.problem = ProblemKind(self.problem).value
        if self.precond not in (AUTO, NONE):
            self.precond = PrecondKind(self.precond).value
        if self.init != AUTO:
            self.init = InitKind(self.init).value
        if self.tol is not None and not self.tol > 0:
            raise ValueError("tolerance must be positive")


@dataclass
class RunReport:
    n: int
    edges: int
    max_degree: int
    avg_degree: float
    degree_ratio: float
    graph_kind: str
    K: int
    d: int
    problem: str
    precond: str
    tol: float
    init: str
    seed: int
    epsilon: float
    max_iters: int
    doubled_cut: bool
    iterations: int
    converged: List[bool]
    residual_norms: List[float]
    eigenvalues: List[float]
    times: Dict[str, float]
    cutsize: float
    imbalance: float
    part_weights: List[float]
    preconditioner: Dict = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    dropped_vertices: int = 0

    # fields that legitimately differ between identical runs
    VOLATILE = ("times",)

    def to_dict(self) -> dict:
        return asdict(self)

    def metrics(self) -> dict:
        d = self.to_dict()
        for k in self.VOLATILE:
            d.pop(k)
        return d


def select_defaults(kind: GraphKind, precond) -> Tuple[ProblemKind, float]:
    """Problem type and tolerance for a graph class and preconditioner.

    A missing preconditioner is treated like Jacobi.
    """
    k = kind.kind if isinstance(kind, GraphKind) else Kind(kind)
    p = PrecondKind.JACOBI if precond in (None, NONE) else PrecondKind(precond)
    if k is Kind.REGULAR:
        return ProblemKind.COMBINATORIAL, (1e-2 if p is PrecondKind.AMG else 1e-3)
    if p is PrecondKind.POLYNOMIAL:
        return ProblemKind.NORMALIZED, 1e-2
    return ProblemKind.GENERALIZED, 1e-2


def select_precond_auto(kind: GraphKind) -> PrecondKind:
    k = kind.kind if isinstance(kind, GraphKind) else Kind(kind)
    return PrecondKind.AMG if k is Kind.REGULAR else PrecondKind.POLYNOMIAL


def select_initial_vectors(kind: GraphKind) -> InitKind:
    k = kind.kind if isinstance(kind, GraphKind) else Kind(kind)
    return InitKind.RANDOM if k is Kind.REGULAR else InitKind.PIECEWISE


@dataclass
class Resolved:
    kind: GraphKind
    precond: str
    problem: ProblemKind
    tol: float
    init: InitKind


def resolve(G: Graph, cfg: RunConfig) -> Resolved:
    """classify -> preconditioner -> (problem, tol) -> initial vectors."""
    kind = classify(G)
    precond = select_precond_auto(kind).value if cfg.precond == AUTO else cfg.precond
    problem, tol = select_defaults(kind, precond)
    if cfg.problem != AUTO:
        problem = ProblemKind(cfg.problem)
    if cfg.tol is not None:
        tol = cfg.tol
    init = select_initial_vectors(kind) if cfg.init == AUTO else InitKind(cfg.init)
    return Resolved(kind, precond, problem, tol, init)


def build_preconditioner(name: str, op, kind: GraphKind, cfg: RunConfig):
    if name == NONE:
        return None
    p = PrecondKind(name)
    if p is PrecondKind.JACOBI:
        return jacobi_build(op)
    if p is PrecondKind.POLYNOMIAL:
        return polynomial_build(op, PolyConfig(degree=cfg.poly_degree, seed=cfg.seed))
    amg_cfg = AmgConfig.regular(seed=cfg.seed) if kind.kind is Kind.REGULAR else AmgConfig.irregular(seed=cfg.seed)
    return amg_build(op, amg_cfg)


@dataclass
class RunResult:
    partition: Partition
    report: RunReport
    eigen: EigenResult
    embedding: Embedding


def run(G: Graph, cfg: RunConfig) -> RunResult:
    """Like :func:`partition_graph` but also returns the eigensolve and embedding."""
    if cfg.K > G.n:
        raise InfeasiblePartsError(f"cannot split {G.n} vertices into {cfg.K} parts")
    res = resolve(G, cfg)
    d = eigenvector_count(cfg.K)
    times = {}
    warnings: List[str] = []

    t0 = time.perf_counter()
    problem = build_problem(G, res.problem)
    times["laplacian"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    M = build_preconditioner(res.precond, problem.A_op, res.kind, cfg)
    times["precond_setup"] = time.perf_counter() - t0
    if cfg.initial_vectors is not None:
        X0 = np.asarray(cfg.initial_vectors, dtype=np.float64)
        if X0.shape != (G.n, d):
            raise ValueError(f"initial vectors must be {G.n}x{d}, got {X0.shape}")
    elif res.init is InitKind.RANDOM:
        X0 = initial_guess_random(G.n, d, cfg.seed)
    else:
        X0 = initial_guess_piecewise(G.n, d)
    eig = lobpcg(problem, M, X0, SolverConfig(d, res.tol, cfg.max_iters, cfg.seed))
    times["eigensolve"] = time.perf_counter() - t0
    warnings.extend(eig.warnings)
    if M is not None:
        warnings.extend(getattr(M, "warnings", []))

    t0 = time.perf_counter()
    emb = embed(eig.X)
    assignment = mj_partition(emb, G.vertex_weights, cfg.K)
    times["partition"] = time.perf_counter() - t0

    part = Partition.from_assignment(G, assignment, cfg.K, doubled_cut=cfg.doubled_cut)
    if part.imbalance > 1.0 + cfg.epsilon:
        warnings.append(f"imbalance {part.imbalance:.4f} exceeds 1 + epsilon = {1 + cfg.epsilon:g}")
    if emb.dims > 1 and np.linalg.matrix_rank(emb.coords) < emb.dims:
        warnings.append("embedding is rank deficient; coordinate ties resolved by vertex id")
    times["total"] = times["laplacian"] + times["eigensolve"] + times["partition"]

    kind = res.kind
    report = RunReport(
        n=G.n,
        edges=G.num_edges,
        max_degree=kind.max_degree,
        avg_degree=kind.avg_degree,
        degree_ratio=kind.ratio,
        graph_kind=kind.kind.value,
        K=cfg.K,
        d=d,
        problem=res.problem.value,
        precond=res.precond,
        tol=res.tol,
        init="file" if cfg.initial_vectors is not None else res.init.value,
        seed=cfg.seed,
        epsilon=cfg.epsilon,
        max_iters=cfg.max_iters,
        doubled_cut=cfg.doubled_cut,
        iterations=eig.iterations,
        converged=[bool(c) for c in eig.converged],
        residual_norms=[float(r) for r in eig.residual_norms],
        eigenvalues=[float(t) for t in eig.theta],
        times=times,
        cutsize=part.cutsize,
        imbalance=part.imbalance,
        part_weights=[float(w) for w in part.part_weights],
        preconditioner={} if M is None else M.stats(),
        warnings=warnings,
    )
    return RunResult(part, report, eig, emb)


def partition_graph(G: Graph, cfg: RunConfig) -> Tuple[Partition, RunReport]:
    """Spectral K-way partition of a connected graph."""
    r = run(G, cfg)
    return r.partition, r.report
