"""Laplacian operators and the block apply kernel shared by all solvers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .graph import Graph


class DegenerateDegreeError(ValueError):
    """A vertex of degree zero makes D^{-1/2} undefined."""


class ProblemKind(str, Enum):
    COMBINATORIAL = "combinatorial"
    GENERALIZED = "generalized"
    NORMALIZED = "normalized"


def gershgorin_bound(M: sp.spmatrix) -> float:
    """max_i (a_ii + sum_{j != i} |a_ij|)."""
    M = sp.csr_matrix(M)
    if M.shape[0] == 0:
        return 0.0
    diag = M.diagonal()
    absrow = np.asarray(abs(M).sum(axis=1)).ravel()
    return float(np.max(diag + (absrow - np.abs(diag))))


@dataclass(frozen=True)
class LinearOperator:
    """Explicit sparse symmetric operator.

    ``null_vector`` is a known kernel direction (constant vector for L_C,
    D^{1/2} 1 for L_N); preconditioners use it to keep setup vectors out of
    the kernel.
    """

    matrix: sp.csr_matrix
    spectral_bound: float
    null_vector: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def shape(self):
        return self.matrix.shape

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def is_diagonal(self) -> bool:
        M = self.matrix.tocoo()
        return bool(np.all(M.row == M.col))

    def __matmul__(self, V):
        return apply_block(self, V)


@dataclass(frozen=True)
class EigenProblem:
    kind: ProblemKind
    A_op: LinearOperator
    B_op: Optional[LinearOperator] = None

    def __post_init__(self):
        if self.kind is ProblemKind.GENERALIZED:
            if self.B_op is None:
                raise ValueError("generalized problem needs a B operator")
            if not self.B_op.is_diagonal() or np.any(self.B_op.diagonal() <= 0):
                raise ValueError("B must be diagonal with a positive diagonal")

    @property
    def n(self) -> int:
        return self.A_op.n


def _operator(M: sp.spmatrix, bound: Optional[float] = None, null=None) -> LinearOperator:
    M = sp.csr_matrix(M)
    M.sort_indices()
    return LinearOperator(M, gershgorin_bound(M) if bound is None else bound, null)


def build_combinatorial(G: Graph) -> LinearOperator:
    """L_C = D - A with weighted degrees on the diagonal."""
    A = G.adjacency
    L = sp.diags(G.weighted_degrees()) - A
    return _operator(L, null=np.ones(G.n))


def build_normalized(G: Graph) -> LinearOperator:
    """L_N = I - D^{-1/2} A D^{-1/2}.

    The reported bound is min(Gershgorin, 2) since the spectrum of L_N lies
    in [0, 2].
    """
    deg = G.weighted_degrees()
    if np.any(deg <= 0):
        bad = int(np.flatnonzero(deg <= 0)[0])
        raise DegenerateDegreeError(f"vertex {bad} has zero degree")
    s = 1.0 / np.sqrt(deg)
    S = sp.diags(s)
    L = sp.identity(G.n, format="csr") - S @ G.adjacency @ S
    M = sp.csr_matrix(L)
    return _operator(M, bound=min(gershgorin_bound(M), 2.0), null=np.sqrt(deg))


def build_degree(G: Graph) -> LinearOperator:
    return _operator(sp.diags(G.weighted_degrees()).tocsr())


def build_problem(G: Graph, kind: ProblemKind) -> EigenProblem:
    kind = ProblemKind(kind)
    if kind is ProblemKind.NORMALIZED:
        return EigenProblem(kind, build_normalized(G))
    L = build_combinatorial(G)
    if kind is ProblemKind.GENERALIZED:
        deg = G.weighted_degrees()
        if np.any(deg <= 0):
            raise DegenerateDegreeError(f"vertex {int(np.flatnonzero(deg <= 0)[0])} has zero degree")
        return EigenProblem(kind, L, build_degree(G))
    return EigenProblem(kind, L)


def apply_block(op: LinearOperator, V: np.ndarray) -> np.ndarray:
    """op @ V for a vector or an n x m block."""
    V = np.asarray(V, dtype=np.float64)
    if V.shape[0] != op.n:
        raise ValueError(f"operator is {op.n}x{op.n}, block has {V.shape[0]} rows")
    return op.matrix @ V
