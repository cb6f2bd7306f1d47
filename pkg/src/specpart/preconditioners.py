"""Jacobi, GMRES-polynomial and aggregation AMG preconditioners.

Every preconditioner exposes ``apply(R) -> H`` with H ~ A^{-1} R, works on
vectors and column blocks, and is linear and deterministic.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .laplacian import LinearOperator, gershgorin_bound

log = logging.getLogger(__name__)


class PrecondKind(str, Enum):
    JACOBI = "jacobi"
    POLYNOMIAL = "polynomial"
    AMG = "amg"


def _check_block(n: int, R) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    if R.shape[0] != n:
        raise ValueError(f"preconditioner is {n}x{n}, block has {R.shape[0]} rows")
    return R


def _safe_inverse_diagonal(d: np.ndarray) -> np.ndarray:
    d = np.where(np.abs(d) < 1e-300, 1.0, d)
    return 1.0 / d


class Preconditioner:
    kind: PrecondKind
    n: int

    def apply(self, R):
        raise NotImplementedError

    def stats(self) -> dict:
        return {"kind": self.kind.value}


def apply(M: Preconditioner, R):
    return M.apply(R)


# -- Jacobi -----------------------------------------------------------------


class JacobiPreconditioner(Preconditioner):
    kind = PrecondKind.JACOBI

    def __init__(self, op: LinearOperator):
        self.n = op.n
        self.inv_diag = _safe_inverse_diagonal(op.diagonal())

    def apply(self, R):
        R = _check_block(self.n, R)
        return R * (self.inv_diag if R.ndim == 1 else self.inv_diag[:, None])


def jacobi_build(A: LinearOperator) -> JacobiPreconditioner:
    return JacobiPreconditioner(A)


# -- GMRES polynomial ---------------------------------------------------------


@dataclass
class PolyConfig:
    degree: int = 25
    seed: int = 0
    # "gmres" (harmonic Ritz roots) or "chebyshev" (Chebyshev nodes)
    variant: str = "gmres"
    # lower end of the Chebyshev interval, as a fraction of the upper bound
    cheb_lower_ratio: float = 1e-3

    def __post_init__(self):
        if self.degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        if self.variant not in ("gmres", "chebyshev"):
            raise ValueError(f"unknown polynomial variant {self.variant!r}")


def leja_order(roots: np.ndarray) -> np.ndarray:
    """Modified Leja ordering of real roots (largest magnitude first)."""
    roots = np.asarray(roots, dtype=np.float64)
    if roots.size == 0:
        return roots
    left = list(range(roots.size))
    first = int(np.argmax(np.abs(roots)))
    out = [first]
    left.remove(first)
    logprod = np.zeros(roots.size)
    with np.errstate(divide="ignore"):
        while left:
            logprod += np.log(np.abs(roots - roots[out[-1]]))
            cand = np.array(left)
            nxt = int(cand[np.argmax(logprod[cand])])
            out.append(nxt)
            left.remove(nxt)
    return roots[out]


def arnoldi(op: LinearOperator, v0: np.ndarray, steps: int, breakdown_rtol: float = 1e-12):
    """Arnoldi with full reorthogonalization; stops early on breakdown.

    Returns the (m+1) x m Hessenberg matrix for the m <= steps steps taken.
    """
    n = op.n
    V = np.zeros((n, steps + 1))
    H = np.zeros((steps + 1, steps))
    V[:, 0] = v0 / np.linalg.norm(v0)
    scale = max(op.spectral_bound, np.finfo(float).tiny)
    for j in range(steps):
        w = op.matrix @ V[:, j]
        for _ in range(2):
            h = V[:, : j + 1].T @ w
            w -= V[:, : j + 1] @ h
            H[: j + 1, j] += h
        beta = np.linalg.norm(w)
        H[j + 1, j] = beta
        if beta <= breakdown_rtol * scale:
            H[j + 1, j] = 0.0
            return H[: j + 2, : j + 1]
        V[:, j + 1] = w / beta
    return H


def harmonic_ritz_values(Hbar: np.ndarray) -> np.ndarray:
    """Harmonic Ritz values from an (m+1) x m Arnoldi Hessenberg matrix.

    These are the roots of the GMRES residual polynomial.
    """
    m = Hbar.shape[1]
    Hm = Hbar[:m, :m]
    h = Hbar[m, m - 1]
    if h == 0.0:
        return np.sort(np.real(la.eigvals(Hm)))
    lhs = Hbar.T @ Hbar
    try:
        vals = la.eigh(0.5 * (lhs + lhs.T), 0.5 * (Hm + Hm.T), eigvals_only=True)
    except la.LinAlgError:
        em = np.zeros(m)
        em[-1] = 1.0
        T = Hm + h * h * np.outer(la.solve(Hm.T, em), em)
        vals = np.real(la.eigvals(T))
    return np.sort(vals)


class PolynomialPreconditioner(Preconditioner):
    """p(A) with 1 - z p(z) = prod_i (1 - z / theta_i), applied in product form."""

    kind = PrecondKind.POLYNOMIAL

    def __init__(self, op: LinearOperator, roots: np.ndarray, requested: int, variant: str):
        self.op = op
        self.n = op.n
        self.roots = np.asarray(roots, dtype=np.float64)
        self.requested = requested
        self.variant = variant
        self.warnings: List[str] = []
        if len(self.roots) < requested:
            self.warnings.append(
                f"polynomial truncated to degree {len(self.roots)} (requested {requested})"
            )

    @property
    def degree(self) -> int:
        return len(self.roots)

    def apply(self, R):
        R = _check_block(self.n, R)
        y = np.zeros_like(R)
        w = R.copy()
        last = len(self.roots) - 1
        for i, th in enumerate(self.roots):
            y += w / th
            if i < last:
                w -= (self.op.matrix @ w) / th
        return y

    def stats(self):
        return {
            "kind": self.kind.value,
            "variant": self.variant,
            "degree": self.degree,
            "requested_degree": self.requested,
            "roots_min": float(self.roots.min()),
            "roots_max": float(self.roots.max()),
            "warnings": list(self.warnings),
        }


def polynomial_build(A: LinearOperator, cfg: Optional[PolyConfig] = None) -> PolynomialPreconditioner:
    cfg = cfg or PolyConfig()
    if cfg.variant == "chebyshev":
        b = A.spectral_bound
        a = b * cfg.cheb_lower_ratio
        k = np.arange(1, cfg.degree + 1)
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * np.cos((2 * k - 1) * np.pi / (2 * cfg.degree))
        return PolynomialPreconditioner(A, leja_order(nodes), cfg.degree, cfg.variant)

    rng = np.random.default_rng(cfg.seed)
    v = rng.standard_normal(A.n)
    null = A.null_vector if A.null_vector is not None else np.ones(A.n)
    u = null / np.linalg.norm(null)
    w = v - u * (u @ v)
    # in dimension one the projection annihilates the seed
    if np.linalg.norm(w) > 1e-8 * np.linalg.norm(v):
        v = w
    steps = min(cfg.degree, A.n)
    Hbar = arnoldi(A, v, steps)
    roots = harmonic_ritz_values(Hbar)
    good = np.isfinite(roots) & (np.abs(roots) > 1e-14 * max(A.spectral_bound, 1.0))
    pc = PolynomialPreconditioner(A, leja_order(roots[good]), cfg.degree, cfg.variant)
    for msg in pc.warnings:
        log.info(msg)
    return pc


# -- algebraic multigrid ------------------------------------------------------


class Smoothing(str, Enum):
    SMOOTHED = "smoothed"
    PLAIN = "plain"


class CoarseSolver(str, Enum):
    DIRECT = "direct"
    CHEBYSHEV = "chebyshev"


@dataclass
class AmgConfig:
    smoothing: Smoothing = Smoothing.SMOOTHED
    drop_tol: float = 0.0
    max_levels: int = 20
    cheby_degree: int = 3
    power_iters_setup: int = 10
    eig_ratio: float = 7.0
    coarse_size_threshold: int = 500
    coarse_solver: CoarseSolver = CoarseSolver.DIRECT
    coarse_power_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        self.smoothing = Smoothing(self.smoothing)
        self.coarse_solver = CoarseSolver(self.coarse_solver)
        if not 0.0 <= self.drop_tol < 1.0:
            raise ValueError("drop_tol must lie in [0, 1)")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")
        if self.cheby_degree < 1:
            raise ValueError("cheby_degree must be >= 1")

    @classmethod
    def regular(cls, **kw) -> "AmgConfig":
        return cls(**kw)

    @classmethod
    def irregular(cls, **kw) -> "AmgConfig":
        base = dict(
            smoothing=Smoothing.PLAIN,
            drop_tol=0.4,
            max_levels=5,
            coarse_solver=CoarseSolver.CHEBYSHEV,
        )
        base.update(kw)
        return cls(**base)


def power_iteration(A: sp.csr_matrix, inv_diag: np.ndarray, iters: int, rng) -> float:
    """Estimate the largest eigenvalue of D^{-1} A."""
    n = A.shape[0]
    x = rng.uniform(-1.0, 1.0, n)
    lam = 0.0
    for _ in range(iters):
        nrm = np.linalg.norm(x)
        if nrm == 0.0:
            break
        x = inv_diag * (A @ (x / nrm))
        lam = float(np.linalg.norm(x))
    return lam if lam > 0 else 1.0


class ChebyshevSmoother:
    """Jacobi-preconditioned Chebyshev on [lmax / eig_ratio, 1.1 * lmax]."""

    def __init__(self, A: sp.csr_matrix, degree: int, lmax: float, eig_ratio: float):
        self.A = A
        self.inv_diag = _safe_inverse_diagonal(A.diagonal())
        self.degree = degree
        self.lmax = 1.1 * lmax
        self.lmin = lmax / eig_ratio

    def apply(self, b, x=None):
        D = self.inv_diag if b.ndim == 1 else self.inv_diag[:, None]
        theta = 0.5 * (self.lmax + self.lmin)
        delta = 0.5 * (self.lmax - self.lmin)
        sigma = theta / delta
        rho = 1.0 / sigma
        if x is None:
            x = np.zeros_like(b)
            r = D * b
        else:
            x = x.copy()
            r = D * (b - self.A @ x)
        d = r / theta
        for k in range(self.degree):
            x += d
            if k == self.degree - 1:
                break
            r = r - D * (self.A @ d)
            rho_new = 1.0 / (2.0 * sigma - rho)
            d = rho_new * rho * d + (2.0 * rho_new / delta) * r
            rho = rho_new
        return x


@dataclass
class AmgLevel:
    A: LinearOperator
    P: Optional[sp.csr_matrix] = None
    smoother: Optional[ChebyshevSmoother] = None


@dataclass
class AmgHierarchy:
    levels: List[AmgLevel]
    warnings: List[str] = field(default_factory=list)

    @property
    def sizes(self) -> List[int]:
        return [lev.A.n for lev in self.levels]

    @property
    def nnz(self) -> List[int]:
        return [lev.A.matrix.nnz for lev in self.levels]


def strength_graph(A: sp.csr_matrix, drop_tol: float) -> sp.csr_matrix:
    """Off-diagonal couplings with |a_ij| >= drop_tol * sqrt(|a_ii a_jj|)."""
    C = A.tocoo()
    d = np.abs(A.diagonal())
    off = C.row != C.col
    r, c, v = C.row[off], C.col[off], np.abs(C.data[off])
    keep = (v > 0) & (v >= drop_tol * np.sqrt(d[r] * d[c]))
    S = sp.csr_matrix((np.ones(int(keep.sum())), (r[keep], c[keep])), shape=A.shape)
    S.sort_indices()
    return S


def aggregate(S: sp.csr_matrix) -> np.ndarray:
    """Greedy aggregation over a strength graph.

    Pass 1 picks roots in ascending id whose neighbourhood is untouched,
    pass 2 attaches leftovers to the first adjacent pass-1 aggregate, pass 3
    groups whatever remains with its free neighbours.  Vertices without
    strong neighbours stay unaggregated (-1).
    """
    n = S.shape[0]
    ptr, idx = S.indptr, S.indices
    agg = np.full(n, -1, dtype=np.int64)
    nagg = 0
    for i in range(n):
        if agg[i] >= 0 or ptr[i] == ptr[i + 1]:
            continue
        nb = idx[ptr[i]:ptr[i + 1]]
        if np.all(agg[nb] < 0):
            agg[i] = nagg
            agg[nb] = nagg
            nagg += 1
    first_pass = agg.copy()
    for i in range(n):
        if agg[i] >= 0:
            continue
        nb = idx[ptr[i]:ptr[i + 1]]
        owned = first_pass[nb]
        owned = owned[owned >= 0]
        if owned.size:
            agg[i] = owned[0]
    for i in range(n):
        if agg[i] >= 0 or ptr[i] == ptr[i + 1]:
            continue
        nb = idx[ptr[i]:ptr[i + 1]]
        agg[i] = nagg
        agg[nb[agg[nb] < 0]] = nagg
        nagg += 1
    return agg


def tentative_prolongator(agg: np.ndarray) -> sp.csr_matrix:
    n = agg.size
    nagg = int(agg.max()) + 1 if agg.size and agg.max() >= 0 else 0
    rows = np.flatnonzero(agg >= 0)
    cols = agg[rows]
    counts = np.bincount(cols, minlength=nagg)
    vals = 1.0 / np.sqrt(counts[cols])
    P = sp.csr_matrix((vals, (rows, cols)), shape=(n, nagg))
    P.sort_indices()
    return P


def galerkin_product(A: sp.csr_matrix, P: sp.csr_matrix) -> sp.csr_matrix:
    Ac = (P.T.tocsr() @ (A @ P)).tocsr()
    Ac.sort_indices()
    return Ac


class _DirectCoarse:
    def __init__(self, A: sp.csr_matrix):
        n = A.shape[0]
        shift = 1e-8 * float(A.diagonal().sum()) / max(n, 1)
        if shift <= 0:
            shift = 1e-8
        self.shift = shift
        self.lu = splu((A + shift * sp.identity(n)).tocsc())

    def solve(self, b):
        return self.lu.solve(np.ascontiguousarray(b))


class _ChebyshevCoarse:
    def __init__(self, smoother: ChebyshevSmoother):
        self.smoother = smoother

    def solve(self, b):
        return self.smoother.apply(b)


class AmgPreconditioner(Preconditioner):
    kind = PrecondKind.AMG

    def __init__(self, hierarchy: AmgHierarchy, coarse, cfg: AmgConfig):
        self.hierarchy = hierarchy
        self.coarse = coarse
        self.cfg = cfg
        self.n = hierarchy.levels[0].A.n

    @property
    def warnings(self):
        return self.hierarchy.warnings

    def _cycle(self, level: int, b):
        lev = self.hierarchy.levels[level]
        if level == len(self.hierarchy.levels) - 1:
            return self.coarse.solve(b)
        A = lev.A.matrix
        x = lev.smoother.apply(b)
        xc = self._cycle(level + 1, lev.P.T @ (b - A @ x))
        x = x + lev.P @ xc
        return lev.smoother.apply(b, x)

    def apply(self, R):
        R = _check_block(self.n, R)
        return self._cycle(0, R)

    def stats(self):
        return {
            "kind": self.kind.value,
            "smoothing": self.cfg.smoothing.value,
            "levels": len(self.hierarchy.levels),
            "sizes": self.hierarchy.sizes,
            "nnz": self.hierarchy.nnz,
            "coarse_solver": self.cfg.coarse_solver.value,
            "warnings": list(self.hierarchy.warnings),
        }


def amg_build(A: LinearOperator, cfg: Optional[AmgConfig] = None) -> AmgPreconditioner:
    """Aggregation AMG hierarchy applied as one V-cycle."""
    cfg = cfg or AmgConfig()
    rng = np.random.default_rng(cfg.seed)
    levels: List[AmgLevel] = []
    warnings: List[str] = []
    Al = sp.csr_matrix(A.matrix)
    while True:
        n = Al.shape[0]
        op = LinearOperator(Al, gershgorin_bound(Al))
        if n <= cfg.coarse_size_threshold or len(levels) + 1 >= cfg.max_levels:
            levels.append(AmgLevel(op))
            break
        inv_diag = _safe_inverse_diagonal(Al.diagonal())
        lmax = power_iteration(Al, inv_diag, cfg.power_iters_setup, rng)
        agg = aggregate(strength_graph(Al, cfg.drop_tol))
        P = tentative_prolongator(agg)
        if P.shape[1] == 0 or P.shape[1] >= n:
            warnings.append(f"coarsening stagnated at level {len(levels)} (size {n})")
            levels.append(AmgLevel(op))
            break
        if cfg.smoothing is Smoothing.SMOOTHED:
            omega = 4.0 / (3.0 * lmax)
            P = (P - omega * (sp.diags(inv_diag) @ (Al @ P))).tocsr()
            P.sort_indices()
        smoother = ChebyshevSmoother(Al, cfg.cheby_degree, lmax, cfg.eig_ratio)
        levels.append(AmgLevel(op, P, smoother))
        Al = galerkin_product(Al, P)

    last = levels[-1].A.matrix
    if cfg.coarse_solver is CoarseSolver.DIRECT:
        coarse = _DirectCoarse(last)
    else:
        inv_diag = _safe_inverse_diagonal(last.diagonal())
        lmax = power_iteration(last, inv_diag, cfg.coarse_power_iters, rng)
        coarse = _ChebyshevCoarse(ChebyshevSmoother(last, cfg.cheby_degree, lmax, cfg.eig_ratio))
    for w in warnings:
        log.info(w)
    return AmgPreconditioner(AmgHierarchy(levels, warnings), coarse, cfg)
