"""Graph ingestion, preprocessing, classification and partition metrics.

Sparse matrices are held as canonical ``scipy.sparse.csr_matrix`` objects
(sorted column indices, no duplicates).  A :class:`Graph` stores its
undirected adjacency with both (i, j) and (j, i) present; the stored values
are the edge costs.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

# graphs whose max/avg degree ratio exceeds this are treated as irregular
REGULARITY_RATIO = 10.0


class MatrixMarketError(ValueError):
    """Base class for Matrix Market parse failures."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BannerError(MatrixMarketError):
    pass


class UnsupportedFormatError(MatrixMarketError):
    pass


class IndexRangeError(MatrixMarketError):
    pass


class TruncatedError(MatrixMarketError):
    pass


class EmptyGraphError(ValueError):
    pass


_BANNER = re.compile(r"^%%MatrixMarket\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s*$", re.IGNORECASE)


def _lines(source) -> Iterable[str]:
    if isinstance(source, (bytes, bytearray)):
        source = io.BytesIO(source)
    elif isinstance(source, str):
        source = io.StringIO(source)
    for raw in source:
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        yield raw.rstrip("\r\n")


def parse_matrix_market(source: Union[bytes, str, IO]) -> sp.csr_matrix:
    """Parse a coordinate Matrix Market stream into a canonical CSR matrix.

    Parameters
    ----------
    source : bytes, str or file-like
        Raw stream content (or an open text/binary handle).

    Returns
    -------
    csr_matrix
        Canonical matrix.  Symmetric storage is expanded to the full pattern,
        duplicate numeric entries are summed and duplicate pattern entries
        collapse to a single 1.0.  Explicit zeros stay as stored entries.
    """
    it = enumerate(_lines(source), start=1)
    try:
        lineno, banner = next(it)
    except StopIteration:
        raise BannerError("empty stream, expected %%MatrixMarket banner", 1) from None
    m = _BANNER.match(banner.strip())
    if m is None:
        raise BannerError(f"malformed banner {banner!r}", lineno)
    obj, fmt, fld, sym = (g.lower() for g in m.groups())
    if obj != "matrix":
        raise UnsupportedFormatError(f"unsupported object {obj!r}", lineno)
    if fmt != "coordinate":
        raise UnsupportedFormatError(f"unsupported format {fmt!r}, only coordinate", lineno)
    if fld not in ("pattern", "real", "integer"):
        raise UnsupportedFormatError(f"unsupported field {fld!r}", lineno)
    if sym not in ("general", "symmetric"):
        raise UnsupportedFormatError(f"unsupported symmetry {sym!r}", lineno)

    size_line = None
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        size_line = (lineno, s)
        break
    if size_line is None:
        raise TruncatedError("missing size line", lineno + 1)
    lineno, s = size_line
    parts = s.split()
    try:
        nrows, ncols, nnz = (int(p) for p in parts)
    except ValueError:
        raise MatrixMarketError(f"bad size line {s!r}", lineno) from None
    if nrows < 0 or ncols < 0 or nnz < 0:
        raise MatrixMarketError(f"negative dimension in {s!r}", lineno)

    want = 2 if fld == "pattern" else 3
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz, dtype=np.float64)
    k = 0
    for lineno, line in it:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        if k >= nnz:
            raise MatrixMarketError("more entries than declared", lineno)
        tok = s.split()
        if len(tok) < want:
            raise MatrixMarketError(f"expected {want} fields, got {len(tok)}", lineno)
        try:
            i, j = int(tok[0]), int(tok[1])
            if want == 3:
                vals[k] = float(tok[2])
        except ValueError:
            raise MatrixMarketError(f"unparsable entry {s!r}", lineno) from None
        if not (1 <= i <= nrows and 1 <= j <= ncols):
            raise IndexRangeError(f"index ({i}, {j}) outside {nrows}x{ncols}", lineno)
        rows[k] = i - 1
        cols[k] = j - 1
        k += 1
    if k < nnz:
        raise TruncatedError(f"declared {nnz} entries, found {k}", lineno + 1)

    if sym == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    A = sp.coo_matrix((vals, (rows, cols)), shape=(nrows, ncols)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    if fld == "pattern":
        A.data[:] = 1.0
    return A


def read_matrix_market(path: Union[str, Path]) -> sp.csr_matrix:
    with open(path, "rb") as fh:
        return parse_matrix_market(fh)


def write_matrix_market(G: "Graph", stream: IO[str]) -> None:
    """Write the graph as a symmetric pattern matrix (lower triangle)."""
    low = sp.tril(G.adjacency, k=-1).tocoo()
    order = np.lexsort((low.row, low.col))
    stream.write("%%MatrixMarket matrix coordinate pattern symmetric\n")
    stream.write(f"{G.n} {G.n} {low.nnz}\n")
    for i, j in zip(low.row[order], low.col[order]):
        stream.write(f"{i + 1} {j + 1}\n")


@dataclass(frozen=True)
class Graph:
    """Undirected graph with vertex weights; adjacency values are edge costs."""

    adjacency: sp.csr_matrix
    vertex_weights: np.ndarray = None

    def __post_init__(self):
        A = self.adjacency
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got {A.shape}")
        if self.vertex_weights is None:
            object.__setattr__(self, "vertex_weights", np.ones(A.shape[0]))
        w = np.asarray(self.vertex_weights, dtype=np.float64)
        if w.shape != (A.shape[0],):
            raise ValueError("vertex_weights length must equal vertex count")
        if np.any(w <= 0):
            raise ValueError("vertex weights must be strictly positive")
        object.__setattr__(self, "vertex_weights", w)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    @property
    def edge_costs(self) -> np.ndarray:
        return self.adjacency.data

    def degrees(self) -> np.ndarray:
        """Neighbor counts (unit costs)."""
        return np.diff(self.adjacency.indptr)

    def weighted_degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]], costs=None, vertex_weights=None) -> "Graph":
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        c = np.ones(len(e)) if costs is None else np.asarray(costs, dtype=np.float64)
        keep = e[:, 0] != e[:, 1]
        e, c = e[keep], c[keep]
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        A = sp.coo_matrix((np.concatenate([c, c]), (rows, cols)), shape=(n, n)).tocsr()
        A.sum_duplicates()
        if costs is None:
            A.data[:] = 1.0
        A.sort_indices()
        return cls(A, vertex_weights)


class Kind(str, Enum):
    REGULAR = "regular"
    IRREGULAR = "irregular"


@dataclass(frozen=True)
class GraphKind:
    kind: Kind
    max_degree: int
    avg_degree: float
    ratio: float


@dataclass(frozen=True)
class Partition:
    assignment: np.ndarray
    K: int
    part_weights: np.ndarray
    cutsize: float
    imbalance: float

    @classmethod
    def from_assignment(cls, G: Graph, assignment, K: int, doubled_cut: bool = False) -> "Partition":
        a = np.asarray(assignment, dtype=np.int64)
        if a.shape != (G.n,):
            raise ValueError(f"assignment length {a.shape} does not match {G.n} vertices")
        if a.size and (a.min() < 0 or a.max() >= K):
            raise ValueError(f"part ids must lie in [0, {K})")
        W = part_weights(G, a, K)
        if np.any(np.bincount(a, minlength=K) == 0):
            raise ValueError("every part must be non-empty")
        return cls(a, K, W, cutsize(G, a, doubled=doubled_cut), imbalance(W))


def symmetrize(A: sp.spmatrix) -> Graph:
    """Graph on the pattern of A + A^T with the diagonal removed, unit costs."""
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"cannot symmetrize non-square {A.shape[0]}x{A.shape[1]} matrix")
    C = sp.coo_matrix(A)
    rows = np.concatenate([C.row, C.col])
    cols = np.concatenate([C.col, C.row])
    off = rows != cols
    S = sp.coo_matrix(
        (np.ones(int(off.sum())), (rows[off], cols[off])), shape=A.shape
    ).tocsr()
    S.sum_duplicates()
    S.data[:] = 1.0
    S.sort_indices()
    return Graph(S)


def induced_subgraph(G: Graph, vertices: np.ndarray) -> Graph:
    v = np.asarray(vertices, dtype=np.int64)
    sub = G.adjacency[v][:, v].tocsr()
    sub.sort_indices()
    return Graph(sub, G.vertex_weights[v])


def largest_connected_component(G: Graph) -> Tuple[Graph, np.ndarray]:
    """Restrict G to its largest component.

    Returns the induced subgraph and an array mapping each new vertex id to
    its original id (ascending, so relative order is preserved).  Equal-size
    components are resolved in favour of the one holding the smallest
    original vertex id.
    """
    if G.n == 0:
        raise EmptyGraphError("graph has no vertices")
    ncomp, labels = connected_components(G.adjacency, directed=False)
    if ncomp == 1:
        return G, np.arange(G.n)
    sizes = np.bincount(labels, minlength=ncomp)
    first = np.full(ncomp, G.n, dtype=np.int64)
    np.minimum.at(first, labels, np.arange(G.n))
    # largest size first, then smallest representative id
    best = np.lexsort((first, -sizes))[0]
    keep = np.flatnonzero(labels == best)
    return induced_subgraph(G, keep), keep


def classify(G: Graph) -> GraphKind:
    if G.n == 0:
        raise EmptyGraphError("graph has no vertices")
    deg = G.degrees()
    mx = int(deg.max())
    avg = float(deg.mean())
    # an edgeless graph has uniform degrees
    ratio = mx / avg if avg > 0 else 1.0
    kind = Kind.REGULAR if ratio <= REGULARITY_RATIO else Kind.IRREGULAR
    return GraphKind(kind, mx, avg, ratio)


def cutsize(G: Graph, assignment, doubled: bool = False) -> float:
    """Total cost of edges joining different parts.

    Each undirected edge is counted once unless ``doubled`` is set, which
    reproduces the distributed convention of counting a cut edge from both
    endpoint owners.
    """
    a = np.asarray(assignment)
    if a.shape != (G.n,):
        raise ValueError(f"assignment length {a.shape} does not match {G.n} vertices")
    U = sp.triu(G.adjacency, k=1).tocoo()
    cut = float(U.data[a[U.row] != a[U.col]].sum())
    return 2.0 * cut if doubled else cut


def part_weights(G: Graph, assignment, K: int) -> np.ndarray:
    return np.bincount(np.asarray(assignment), weights=G.vertex_weights, minlength=K)[:K]


def imbalance(weights: Sequence[float]) -> float:
    """max_k W_k / W_avg."""
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0:
        raise ValueError("imbalance of an empty part list")
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("part weights must be nonnegative and not all zero")
    return float(w.max() / w.mean())


def write_partition(stream: IO[str], assignment, vertex_ids=None) -> None:
    """One ``vertexId partId`` line per vertex, ascending vertex id."""
    a = np.asarray(assignment)
    ids = np.arange(a.size) if vertex_ids is None else np.asarray(vertex_ids)
    order = np.argsort(ids, kind="stable")
    stream.write("".join(f"{ids[i]} {a[i]}\n" for i in order))


def read_partition(stream: IO[str]) -> Tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(stream, dtype=np.int64, ndmin=2)
    return data[:, 0], data[:, 1]
