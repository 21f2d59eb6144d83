"""Clustering of activations and spline codes, NMF directions, cosine profiles."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from ._parallel import chunks, pmap
from .errors import InvalidInputError

NOISE = -1


class Metric(str, Enum):
    EUCLIDEAN = "euclidean"
    HAMMING = "hamming"


@dataclass(frozen=True, eq=False)
class DistanceMatrix:
    """Condensed upper triangle, row-major: (0,1), (0,2), ..., (1,2), ..."""

    n: int
    condensed: np.ndarray
    metric: Metric

    def __post_init__(self):
        if self.condensed.shape != (self.n * (self.n - 1) // 2,):
            raise InvalidInputError("condensed length does not match n")

    def square(self) -> np.ndarray:
        out = np.zeros((self.n, self.n))
        i, j = np.triu_indices(self.n, 1)
        out[i, j] = self.condensed
        out[j, i] = self.condensed
        return out

    def median(self) -> float:
        return float(np.median(self.condensed))


def distance_matrix(items, metric: Metric | str = Metric.EUCLIDEAN,
                    rows_per_task: int = 256) -> DistanceMatrix:
    """Pairwise distances; Hamming counts differing bits (not a fraction)."""
    metric = Metric(metric)
    X = np.asarray(items)
    if X.ndim != 2:
        raise InvalidInputError("items must share one dimensionality")
    n = X.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two items")
    if metric is Metric.HAMMING:
        X = X.astype(bool)
    else:
        X = X.astype(np.float64)

    def rows(sl: slice) -> list[np.ndarray]:
        out = []
        for i in range(sl.start, sl.stop):
            if metric is Metric.HAMMING:
                out.append(np.count_nonzero(X[i + 1:] != X[i], axis=1).astype(np.float64))
            else:
                out.append(np.sqrt(((X[i + 1:] - X[i]) ** 2).sum(axis=1)))
        return out

    parts = [r for block in pmap(rows, chunks(n, rows_per_task)) for r in block]
    return DistanceMatrix(n, np.concatenate(parts), metric)


@dataclass(frozen=True, eq=False)
class ClusterLabels:
    labels: np.ndarray
    cluster_count: int

    @property
    def noise_count(self) -> int:
        return int(np.count_nonzero(self.labels == NOISE))

    def canonical(self) -> np.ndarray:
        """Relabel clusters in order of their smallest member index."""
        out = np.full_like(self.labels, NOISE)
        nxt = 0
        seen = {}
        for i, lab in enumerate(self.labels):
            if lab == NOISE:
                continue
            if lab not in seen:
                seen[lab] = nxt
                nxt += 1
            out[i] = seen[lab]
        return out


def cluster(dm: DistanceMatrix, eps: float, min_pts: int = 5) -> ClusterLabels:
    """DBSCAN on a precomputed distance matrix.

    A point is core when at least ``min_pts`` points (itself included) lie
    within ``eps``. Points are visited in index order and clusters grow
    breadth-first; a border point reachable from several clusters joins the
    first one that reaches it.
    """
    if not eps > 0 or min_pts < 1:
        raise InvalidInputError("cluster needs eps > 0 and min_pts >= 1")
    D = dm.square()
    neighbors = [np.flatnonzero(row <= eps) for row in D]
    core = np.array([nb.size >= min_pts for nb in neighbors])
    labels = np.full(dm.n, NOISE, dtype=np.int64)
    cid = 0
    for i in range(dm.n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cid
        queue = deque([i])
        while queue:
            p = queue.popleft()
            if not core[p]:
                continue
            for q in neighbors[p]:
                if labels[q] == NOISE:
                    labels[q] = cid
                    queue.append(q)
        cid += 1
    return ClusterLabels(labels, cid)


def default_eps(dm: DistanceMatrix) -> float:
    return 0.5 * dm.median()


def adjusted_rand_index(a: Sequence[int], b: Sequence[int]) -> float:
    """ARI between two labelings; noise (-1) is treated as one more label."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InvalidInputError("label lists differ in length")
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)

    def comb2(x):
        return (x * (x - 1) / 2.0).sum()

    sum_ij = comb2(table)
    sum_a = comb2(table.sum(axis=1))
    sum_b = comb2(table.sum(axis=0))
    total = comb2(np.array([a.size]))
    expected = sum_a * sum_b / total if total else 0.0
    top = 0.5 * (sum_a + sum_b)
    if top == expected:
        return 1.0
    return float((sum_ij - expected) / (top - expected))


# ----------------------------------------------------------------------- NMF


@dataclass(frozen=True, eq=False)
class NmfFactors:
    W: np.ndarray
    H: np.ndarray
    reconstruction_history: np.ndarray

    @property
    def final_error(self) -> float:
        return float(self.reconstruction_history[-1])


def shift_to_min(X) -> np.ndarray:
    """Optional preprocessing for signed data: subtract the global minimum."""
    X = np.asarray(X, dtype=np.float64)
    return X - min(X.min(), 0.0)


def nmf(X, k: int, iterations: int = 500, seed: int = 0) -> NmfFactors:
    """Lee-Seung multiplicative updates for ``min ||X - WH||_F^2`` with W, H >= 0.

    ``reconstruction_history[t]`` is the squared Frobenius error after update
    ``t`` (entry 0 is the initial error).
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError("X must be a matrix")
    if np.any(X < 0):
        raise InvalidInputError("NMF input must be non-negative (see shift_to_min)")
    n, dim = X.shape
    if not 1 <= k <= min(n, dim):
        raise InvalidInputError(f"k must be in [1, {min(n, dim)}], got {k}")
    rng = np.random.default_rng(seed)
    scale = np.sqrt(X.mean() / k)
    W = rng.uniform(0.0, 1.0, (n, k)) * scale
    H = rng.uniform(0.0, 1.0, (k, dim)) * scale
    # zero numerators keep entries at zero; the floor only guards 0/0
    tiny = np.finfo(np.float64).tiny
    hist = [float(np.sum((X - W @ H) ** 2))]
    for _ in range(iterations):
        H *= (W.T @ X) / np.maximum(W.T @ W @ H, tiny)
        W *= (X @ H.T) / np.maximum(W @ (H @ H.T), tiny)
        hist.append(float(np.sum((X - W @ H) ** 2)))
    return NmfFactors(W, H, np.array(hist))


# ----------------------------------------------------------- cosine profile


@dataclass(frozen=True, eq=False)
class CosineProfile:
    by_cluster: dict[int, np.ndarray]
    excluded_zero_norm: int

    def histogram(self, label: int, bins: int = 50) -> np.ndarray:
        return np.histogram(self.by_cluster[label], bins=bins, range=(-1.0, 1.0))[0]


def cosine_profile(direction, activations, labels: ClusterLabels) -> CosineProfile:
    d = np.asarray(direction, dtype=np.float64)
    nd = np.linalg.norm(d)
    if nd == 0:
        raise InvalidInputError("direction must be nonzero")
    A = np.atleast_2d(np.asarray(activations, dtype=np.float64))
    if A.shape[0] != labels.labels.size:
        raise InvalidInputError("one label per activation required")
    na = np.linalg.norm(A, axis=1)
    ok = na > 0
    cos = np.full(A.shape[0], np.nan)
    cos[ok] = (A[ok] @ d) / (na[ok] * nd)
    groups = {}
    for lab in np.unique(labels.labels):
        sel = (labels.labels == lab) & ok
        groups[int(lab)] = cos[sel]
    return CosineProfile(groups, int(np.count_nonzero(~ok)))


@dataclass(frozen=True)
class Purity:
    per_cluster: dict[int, float]
    mean: float


def monosemanticity_score(labels: ClusterLabels, class_labels) -> Purity:
    """Majority-class fraction per cluster; mean weighted by cluster size, noise excluded."""
    cl = np.asarray(class_labels)
    if cl.shape != labels.labels.shape:
        raise InvalidInputError("one class label per clustered item required")
    per, total, weighted = {}, 0, 0.0
    for lab in np.unique(labels.labels):
        if lab == NOISE:
            continue
        members = cl[labels.labels == lab]
        _, counts = np.unique(members, return_counts=True)
        purity = counts.max() / members.size
        per[int(lab)] = float(purity)
        weighted += purity * members.size
        total += members.size
    return Purity(per, float(weighted / total) if total else float("nan"))
