"""Spectral embedding and multi-jagged (MJ) recursive multisection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np


class InfeasiblePartsError(ValueError):
    """Fewer points than requested parts."""


def eigenvector_count(K: int) -> int:
    """floor(log2 K) + 1 eigenvectors for a K-way partition."""
    if K < 2:
        raise ValueError(f"need K >= 2, got {K}")
    return int(K).bit_length()


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    d: int

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dims(self) -> int:
        return self.coords.shape[1]


def embed(X: np.ndarray) -> Embedding:
    """Drop the first (trivial) eigenvector and use the rest as coordinates."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError("embedding needs at least two eigenvectors")
    return Embedding(np.ascontiguousarray(X[:, 1:]), X.shape[1])


def _split_targets(t: int, m: int) -> List[int]:
    q, r = divmod(t, m)
    return [q + 1 if i < r else q for i in range(m)]


@dataclass
class MjPlan:
    """Recursion tree: ``target`` leaves under this node, split along ``dim``."""

    target: int
    dim: int
    children: List["MjPlan"] = field(default_factory=list)

    @property
    def sections(self) -> int:
        return len(self.children)

    def leaves(self) -> int:
        return 1 if not self.children else sum(c.leaves() for c in self.children)

    def depth(self) -> int:
        return 0 if not self.children else 1 + max(c.depth() for c in self.children)


def _int_root_ceil(t: int, r: int) -> int:
    m = max(1, int(round(t ** (1.0 / r))))
    while m ** r < t:
        m += 1
    while m > 1 and (m - 1) ** r >= t:
        m -= 1
    return m


def section_counts(K: int, D: int, _depth: int = 0) -> MjPlan:
    """Split counts per node.

    A node with target t and r dimensions left in the current round-robin
    pass splits into min(t, ceil(t^(1/r))) sections whose targets differ by
    at most one, larger targets first.
    """
    if K < 1 or D < 1:
        raise ValueError("K and D must be positive")
    dim = _depth % D
    node = MjPlan(K, dim)
    if K == 1:
        return node
    r = D - dim
    m = min(K, _int_root_ceil(K, r))
    for t in _split_targets(K, m):
        node.children.append(section_counts(t, D, _depth + 1))
    return node


def _cut_points(cumw: np.ndarray, total: float, targets: List[int]) -> List[int]:
    """Split positions in a sorted run so each section gets its weight share.

    Section c is guaranteed at least targets[c] points.
    """
    n = cumw.size
    t = sum(targets)
    bounds = []
    prev = 0
    acc = 0
    for c in range(len(targets) - 1):
        acc += targets[c]
        goal = total * acc / t
        # first index whose prefix weight reaches the goal, then the nearer side
        s = int(np.searchsorted(cumw, goal, side="left")) + 1
        if s > 1 and abs(cumw[s - 2] - goal) <= abs(cumw[min(s, n) - 1] - goal):
            s -= 1
        lo = prev + targets[c]
        hi = n - sum(targets[c + 1:])
        s = min(max(s, lo), hi)
        bounds.append(s)
        prev = s
    return bounds


def mj_partition(emb: Embedding, weights, K: int) -> np.ndarray:
    """Assign each point to one of K parts by recursive weighted multisection.

    Within a node the points are ordered by (coordinate, vertex id) and cut
    at the weighted quantiles matching the children's leaf counts.  Parts are
    numbered left to right in recursion order.
    """
    coords = np.asarray(emb.coords if isinstance(emb, Embedding) else emb, dtype=np.float64)
    if coords.ndim == 1:
        coords = coords[:, None]
    n = coords.shape[0]
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError("weights must have one entry per point")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    if K < 1:
        raise ValueError("K must be >= 1")
    if n < K:
        raise InfeasiblePartsError(f"cannot split {n} points into {K} non-empty parts")
    plan = section_counts(K, coords.shape[1])
    out = np.empty(n, dtype=np.int64)

    def recurse(node: MjPlan, ids: np.ndarray, first: int):
        if not node.children:
            out[ids] = first
            return
        # ids are ascending, so a stable sort breaks coordinate ties by id
        order = ids[np.argsort(coords[ids, node.dim], kind="stable")]
        cumw = np.cumsum(w[order])
        targets = [c.target for c in node.children]
        cuts = [0] + _cut_points(cumw, cumw[-1], targets) + [order.size]
        for c, child in enumerate(node.children):
            recurse(child, np.sort(order[cuts[c]:cuts[c + 1]]), first)
            first += child.target

    recurse(plan, np.arange(n), 0)
    return out
