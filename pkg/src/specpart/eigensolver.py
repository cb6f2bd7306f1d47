"""Preconditioned LOBPCG for the smallest eigenpairs of Laplacian pencils."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg as la

from .laplacian import EigenProblem, LinearOperator, apply_block

log = logging.getLogger(__name__)

# post-orthogonalization norm below DROP_RTOL * original norm => dependent column
DROP_RTOL = 1e-10
# lower limit of the convergence scale, relative to the operator bound
SCALE_FLOOR = 1e-6


class Breakdown(RuntimeError):
    """The trial basis lost rank below the requested block size."""

    def __init__(self, message: str, iteration: int):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")


@dataclass
class SolverConfig:
    nev: int
    tol: float = 1e-3
    max_iters: int = 1000
    seed: int = 0
    locking: bool = True

    def __post_init__(self):
        if self.nev < 1:
            raise ValueError("nev must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    min_residual: float
    max_residual: float
    theta: List[float]


@dataclass
class EigenResult:
    theta: np.ndarray
    X: np.ndarray
    iterations: int
    residual_norms: np.ndarray
    converged: np.ndarray
    threshold: float = 0.0
    history: List[IterationRecord] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def all_converged(self) -> bool:
        return bool(np.all(self.converged))


def initial_guess_random(n: int, d: int, seed: int) -> np.ndarray:
    if d > n:
        raise ValueError(f"cannot draw {d} vectors in dimension {n}")
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=(n, d))


def initial_guess_piecewise(n: int, d: int) -> np.ndarray:
    """All-ones column followed by indicators of the first d-1 index blocks.

    The index range is cut into d contiguous blocks, the first ``n % d`` of
    them one element longer.
    """
    if d > n:
        raise ValueError(f"cannot build {d} vectors in dimension {n}")
    X = np.zeros((n, d))
    X[:, 0] = 1.0
    q, r = divmod(n, d)
    start = 0
    for b in range(d - 1):
        size = q + (1 if b < r else 0)
        X[start:start + size, b + 1] = 1.0
        start += size
    return X


def _bmul(bdiag, V):
    return V if bdiag is None else bdiag[:, None] * V


def _orthonormalize(V, bdiag, Q0=None, track=False):
    """B-orthonormalize the columns of V against Q0 and each other.

    Classical Gram-Schmidt with one reorthogonalization pass, one column at
    a time.  Columns whose norm collapses below DROP_RTOL of the original
    are dropped.  Returns (Q, kept_indices, C) where, when ``track`` is set,
    Q[:, q0:] = V @ C (only meaningful without Q0).
    """
    n, m = V.shape
    q0 = 0 if Q0 is None else Q0.shape[1]
    Q = np.empty((n, q0 + m))
    if q0:
        Q[:, :q0] = Q0
    BQ = _bmul(bdiag, Q[:, :q0]).copy() if q0 else np.empty((n, 0))
    BQ = np.hstack([BQ, np.empty((n, m))])
    C = np.zeros((m, m)) if track else None
    k = q0
    kept = []
    for j in range(m):
        v = V[:, j].astype(np.float64, copy=True)
        c = np.zeros(m)
        c[j] = 1.0
        bv = _bmul(bdiag, v[:, None])[:, 0]
        orig = np.sqrt(max(v @ bv, 0.0))
        if not np.isfinite(orig) or orig == 0.0:
            continue
        for _ in range(2):
            if k:
                coef = BQ[:, :k].T @ v
                v -= Q[:, :k] @ coef
                if track:
                    c -= C[:, : k - q0] @ coef[q0:]
            bv = _bmul(bdiag, v[:, None])[:, 0]
        nrm = np.sqrt(max(v @ bv, 0.0))
        if nrm < DROP_RTOL * orig:
            continue
        Q[:, k] = v / nrm
        BQ[:, k] = bv / nrm
        if track:
            C[:, k - q0] = c / nrm
        kept.append(j)
        k += 1
    Q = Q[:, :k]
    if track:
        C = C[:, : k - q0]
    return Q, kept, C


def _projected_eig(Q, AQ, nev, iteration):
    G = Q.T @ AQ
    G = 0.5 * (G + G.T)
    if not np.all(np.isfinite(G)):
        raise Breakdown("non-finite projected matrix", iteration)
    try:
        w, Y = la.eigh(G)
    except la.LinAlgError as exc:
        raise Breakdown(f"projected eigensolve failed ({exc})", iteration) from exc
    return w[:nev], Y[:, :nev]


def rayleigh_ritz(S: np.ndarray, A_op: LinearOperator, B_op: Optional[LinearOperator], nev: int, iteration: int = 0):
    """Rayleigh-Ritz on span(S) for the pencil (A, B).

    The basis is B-orthonormalized first (dependent columns are dropped).
    Returns coefficients Y with S @ Y B-orthonormal and the nev smallest
    Ritz values in ascending order.
    """
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[1] < nev:
        raise ValueError(f"basis needs at least {nev} columns")
    bdiag = None if B_op is None else B_op.diagonal()
    Q, kept, C = _orthonormalize(S, bdiag, track=True)
    if Q.shape[1] < nev:
        raise Breakdown(f"basis rank {Q.shape[1]} below nev={nev}", iteration)
    theta, Yq = _projected_eig(Q, apply_block(A_op, Q), nev, iteration)
    return C @ Yq, theta


class _Solver:
    def __init__(self, problem, M, cfg):
        self.A = problem.A_op
        self.bdiag = None if problem.B_op is None else problem.B_op.diagonal()
        self.M = M
        self.cfg = cfg
        self.bound = self.A.spectral_bound

    def threshold(self, theta):
        # relative to the largest wanted Ritz value; the floor keeps an
        # all-kernel block (disconnected input) attainable
        return self.cfg.tol * max(float(np.max(np.abs(theta))), SCALE_FLOOR * self.bound)

    def residual(self, X, AX, theta):
        R = AX - _bmul(self.bdiag, X) * theta
        return R, np.linalg.norm(R, axis=0)

    def initial(self, X0):
        nev = self.cfg.nev
        Q, _, _ = _orthonormalize(X0, self.bdiag)
        if Q.shape[1] < nev:
            raise Breakdown(f"initial block has rank {Q.shape[1]} < nev={nev}", 0)
        AQ = apply_block(self.A, Q)
        theta, Y = _projected_eig(Q, AQ, nev, 0)
        X = Q @ Y
        return X, apply_block(self.A, X), theta

    def step(self, X, AX, R, P, active, iteration):
        nev = self.cfg.nev
        RI = R[:, active]
        H = RI.copy() if self.M is None else np.asarray(self.M.apply(RI), dtype=np.float64)
        blocks = [H] if P is None else [H, P]
        Q, _, _ = _orthonormalize(np.hstack(blocks), self.bdiag, Q0=X)
        if Q.shape[1] < nev:
            raise Breakdown(f"trial basis rank {Q.shape[1]} < nev={nev}", iteration)
        AQ = np.empty_like(Q)
        AQ[:, :nev] = AX
        if Q.shape[1] > nev:
            AQ[:, nev:] = apply_block(self.A, Q[:, nev:])
        theta, Y = _projected_eig(Q, AQ, nev, iteration)
        Xn = Q @ Y
        return Xn, Q, Y, theta


def lobpcg(problem: EigenProblem, M, X0: np.ndarray, cfg: SolverConfig, callback=None) -> EigenResult:
    """Smallest ``cfg.nev`` eigenpairs of A x = theta B x.

    A column counts as converged when ||A x - theta B x||_2 <= tol * s with
    s the largest Ritz value magnitude in the block (floored at
    SCALE_FLOOR * bound(A)).  Since Ritz values never exceed the Gershgorin
    bound, converged columns also satisfy ||r|| <= tol * bound(A).  Hitting ``max_iters`` is
    not an error: the best available block is returned with per-column flags.
    """
    nev = cfg.nev
    X0 = np.asarray(X0, dtype=np.float64)
    if X0.ndim != 2 or X0.shape != (problem.n, nev):
        raise ValueError(f"initial block must be {problem.n}x{nev}, got {X0.shape}")
    s = _Solver(problem, M, cfg)
    warnings: List[str] = []
    retried = False

    while True:
        try:
            X, AX, theta = s.initial(X0)
            break
        except Breakdown as exc:
            if retried:
                raise
            retried = True
            warnings.append(f"breakdown retry: {exc}")
            log.warning("LOBPCG breakdown, retrying without search directions: %s", exc)

    R, norms = s.residual(X, AX, theta)
    thr = s.threshold(theta)
    conv = norms <= thr
    history = [IterationRecord(0, float(norms.min()), float(norms.max()), theta.tolist())]
    P = None
    k = 0
    while not conv.all() and k < cfg.max_iters:
        k += 1
        active = np.flatnonzero(~conv) if cfg.locking else np.arange(nev)
        try:
            Xn, Q, Y, theta = s.step(X, AX, R, P, active, k)
        except Breakdown as exc:
            if retried:
                raise
            retried = True
            warnings.append(f"breakdown retry: {exc}")
            log.warning("LOBPCG breakdown, retrying without search directions: %s", exc)
            Xn, Q, Y, theta = s.step(X, AX, R, None, active, k)
        X = Xn
        AX = apply_block(s.A, X)
        R, norms = s.residual(X, AX, theta)
        thr = s.threshold(theta)
        conv = norms <= thr
        history.append(IterationRecord(k, float(norms.min()), float(norms.max()), theta.tolist()))
        if callback is not None:
            callback(history[-1])
        nxt = np.flatnonzero(~conv) if cfg.locking else np.arange(nev)
        if Q.shape[1] > nev and nxt.size:
            # P_I <- [0, H_I, P_I] Y_I
            P = Q[:, nev:] @ Y[nev:, nxt]
        else:
            P = None

    if not conv.all():
        warnings.append(
            f"partial convergence: {int(conv.sum())}/{nev} columns after {k} iterations"
        )
    return EigenResult(theta, X, k, norms, conv, thr, history, warnings)
