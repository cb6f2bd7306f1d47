"""Synthetic graph generators and parameter sweeps."""

from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Sequence

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .graph import Graph
from .pipeline import RunConfig, partition_graph, resolve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorSpec:
    """``kind`` is one of grid2d, stencil3d, ring, path, random_regular, scale_free.

    ``dims`` holds the shape parameters: (w, h) for grid2d, (x, y, z) for
    stencil3d, (n,) for ring/path, (n, degree) for random_regular and
    (n, attach) for scale_free.
    """

    kind: str
    dims: tuple
    points: int = 27
    seed: int = 0


def _from_pairs(n: int, rows: np.ndarray, cols: np.ndarray) -> Graph:
    A = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n)).tocsr()
    A = A + A.T
    A.sum_duplicates()
    A.data[:] = 1.0
    A.sort_indices()
    return Graph(A)


def grid2d(w: int, h: int) -> Graph:
    """5-point grid, vertex (x, y) -> x + w * y."""
    if w < 1 or h < 1:
        raise ValueError("grid dimensions must be positive")
    idx = np.arange(w * h).reshape(h, w)
    r = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    c = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    return _from_pairs(w * h, r, c)


def stencil3d(nx_: int, ny: int, nz: int, points: int = 27) -> Graph:
    """7- or 27-point stencil graph on an nx x ny x nz brick."""
    if min(nx_, ny, nz) < 1:
        raise ValueError("stencil dimensions must be positive")
    if points not in (7, 27):
        raise ValueError("stencil must have 7 or 27 points")
    idx = np.arange(nx_ * ny * nz).reshape(nz, ny, nx_)
    if points == 7:
        offsets = [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    else:
        offsets = [o for o in itertools.product((-1, 0, 1), repeat=3) if o > (0, 0, 0)]
    rows, cols = [], []
    for dz, dy, dx in offsets:
        src = idx[max(0, -dz):nz - max(0, dz), max(0, -dy):ny - max(0, dy), max(0, -dx):nx_ - max(0, dx)]
        dst = idx[max(0, dz):nz + min(0, dz), max(0, dy):ny + min(0, dy), max(0, dx):nx_ + min(0, dx)]
        rows.append(src.ravel())
        cols.append(dst.ravel())
    return _from_pairs(idx.size, np.concatenate(rows), np.concatenate(cols))


def ring(n: int) -> Graph:
    if n < 3:
        raise ValueError("a ring needs at least 3 vertices")
    i = np.arange(n)
    return _from_pairs(n, i, (i + 1) % n)


def path(n: int) -> Graph:
    if n < 1:
        raise ValueError("a path needs at least 1 vertex")
    i = np.arange(n - 1)
    return _from_pairs(n, i, i + 1)


def _from_networkx(g: nx.Graph) -> Graph:
    e = np.array(sorted(g.edges()), dtype=np.int64).reshape(-1, 2)
    return _from_pairs(g.number_of_nodes(), e[:, 0], e[:, 1])


def random_regular(n: int, degree: int, seed: int = 0) -> Graph:
    G = _from_networkx(nx.random_regular_graph(degree, n, seed=seed))
    if connected_components(G.adjacency, directed=False)[0] != 1:
        raise ValueError(f"random regular graph (n={n}, d={degree}, seed={seed}) is disconnected")
    return G


def scale_free(n: int, attach: int, seed: int = 0) -> Graph:
    """Preferential attachment; connected by construction."""
    return _from_networkx(nx.barabasi_albert_graph(n, attach, seed=seed))


def generate(spec: GeneratorSpec) -> Graph:
    d = tuple(int(x) for x in spec.dims)
    if any(x <= 0 for x in d):
        raise ValueError(f"zero-size generator spec {spec}")
    k = spec.kind.lower()
    if k == "grid2d":
        return grid2d(*d)
    if k == "stencil3d":
        return stencil3d(*d, points=spec.points)
    if k == "ring":
        return ring(*d)
    if k == "path":
        return path(*d)
    if k == "random_regular":
        return random_regular(*d, seed=spec.seed)
    if k == "scale_free":
        return scale_free(*d, seed=spec.seed)
    raise ValueError(f"unknown generator {spec.kind!r}")


@dataclass
class SweepRow:
    graph: str
    K: int
    precond: str
    problem: str
    tol: float
    init: str
    iterations: int = -1
    converged: bool = False
    cutsize: float = float("nan")
    imbalance: float = float("nan")
    eigensolve_time: float = float("nan")
    total_time: float = float("nan")
    error: str = ""


TIME_COLUMNS = ("eigensolve_time", "total_time")


def run_sweep(graphs: Dict[str, Graph], configs: Sequence) -> List[SweepRow]:
    """Run every config on every graph; failures are recorded, not raised."""
    rows = []
    for name, G in graphs.items():
        for cfg in configs:
            row = SweepRow(name, cfg.K, cfg.precond, cfg.problem, cfg.tol, cfg.init)
            try:
                res = resolve(G, cfg)
                row.precond, row.problem, row.tol, row.init = (
                    res.precond, res.problem.value, res.tol, res.init.value
                )
                _, rep = partition_graph(G, cfg)
            except Exception as exc:  # noqa: BLE001 - one bad cell must not stop the sweep
                row.error = f"{type(exc).__name__}: {exc}"
                log.warning("sweep cell %s/%s failed: %s", name, cfg, row.error)
            else:
                row.iterations = rep.iterations
                row.converged = all(rep.converged)
                row.cutsize = rep.cutsize
                row.imbalance = rep.imbalance
                row.eigensolve_time = rep.times["eigensolve"]
                row.total_time = rep.times["total"]
            rows.append(row)
    return rows


def sweep_configs(K: int, tolerances=(None,), preconds=("auto",), problems=("auto",), **common) -> List[RunConfig]:
    return [
        RunConfig(K, problem=pb, precond=pc, tol=t, **common)
        for pc in preconds
        for pb in problems
        for t in tolerances
    ]


def write_table(rows: Iterable[SweepRow], stream, delimiter: str = ",", timings: bool = True) -> None:
    names = [f for f in SweepRow.__dataclass_fields__ if timings or f not in TIME_COLUMNS]
    w = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
    w.writerow(names)
    for r in rows:
        d = asdict(r)
        w.writerow([repr(d[k]) if isinstance(d[k], float) else d[k] for k in names])
