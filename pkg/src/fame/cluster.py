"""K-Means clustering with k-means++ seeding plus agreement metrics.

Distances are squared Euclidean. Ties in the assignment step go to the
lowest centroid index; empty clusters are reseeded to the point currently
farthest from its centroid so the result always has exactly k clusters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp


@dataclass
class KMeansModel:
    k: int
    centroids: np.ndarray  # (k, d)
    inertia: float
    n_iter: int
    seed: int
    inertia_history: list[float]


@dataclass
class ClusteringResult:
    assignments: np.ndarray  # (n,) int
    model: KMeansModel
    metrics: dict | None = None


def _as_dense(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.todense(), dtype=np.float64)
    return np.asarray(X, dtype=np.float64)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """(n, k) squared Euclidean distances, clamped at 0."""
    d2 = (
        (X * X).sum(axis=1)[:, None]
        - 2.0 * (X @ C.T)
        + (C * C).sum(axis=1)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeanspp_init(X: np.ndarray, k: int, rng) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = X[first]
    closest = _sq_dists(X, centroids[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            target = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(closest), target, side="right"))
            idx = min(idx, n - 1)
        else:
            # all points coincide with chosen centroids
            idx = int(rng.integers(n))
        centroids[j] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centroids[j:j + 1])[:, 0])
    return centroids


def _assign(X: np.ndarray, centroids: np.ndarray):
    d2 = _sq_dists(X, centroids)
    labels = d2.argmin(axis=1)  # argmin takes the lowest index on ties
    return labels, d2


def _fix_empty(X, centroids, labels, d2):
    """Reseed empty clusters to the farthest point from its centroid."""
    k = centroids.shape[0]
    counts = np.bincount(labels, minlength=k)
    point_dist = d2[np.arange(X.shape[0]), labels].copy()
    for c in range(k):
        if counts[c] > 0:
            continue
        far = int(point_dist.argmax())
        old = labels[far]
        centroids[c] = X[far]
        labels[far] = c
        counts[old] -= 1
        counts[c] += 1
        point_dist[far] = 0.0
    return labels


def _lloyd(X: np.ndarray, k: int, max_iter: int, tol: float, rng):
    n = X.shape[0]
    centroids = _kmeanspp_init(X, k, rng)
    labels, d2 = _assign(X, centroids)
    labels = _fix_empty(X, centroids, labels, d2)
    # inertia from direct differences: exact zero when points sit on
    # their centroids, unlike the expanded form used for assignment
    inertia = float(((X - centroids[labels]) ** 2).sum())
    history = [inertia]
    prev_inertia = inertia
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        for c in range(k):
            centroids[c] = X[labels == c].mean(axis=0)
        new_labels, d2 = _assign(X, centroids)
        new_labels = _fix_empty(X, centroids, new_labels, d2)
        inertia = float(((X - centroids[new_labels]) ** 2).sum())
        history.append(inertia)
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        converged = prev_inertia - inertia <= tol * prev_inertia
        labels = new_labels
        prev_inertia = inertia
        if converged:
            break
    return centroids, labels, inertia, n_iter, history


def kmeans_fit(
    X,
    k: int,
    restarts: int = 10,
    max_iter: int = 300,
    tol: float = 1e-6,
    seed: int = 0,
) -> ClusteringResult:
    """Best of `restarts` seeded k-means++ / Lloyd runs by final inertia.

    Restart r draws from default_rng([seed, r]) so each restart is
    independently reproducible.
    """
    X = _as_dense(X)
    if X.ndim != 2:
        raise ValueError(f"input must be 2-D, got shape {X.shape}")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if not np.isfinite(X).all():
        raise ValueError("input contains non-finite values")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        centroids, labels, inertia, n_iter, history = _lloyd(
            X, k, max_iter, tol, rng
        )
        if best is None or inertia < best[2]:
            best = (centroids, labels, inertia, n_iter, history)
    centroids, labels, inertia, n_iter, history = best
    model = KMeansModel(
        k=k,
        centroids=centroids,
        inertia=inertia,
        n_iter=n_iter,
        seed=seed,
        inertia_history=history,
    )
    return ClusteringResult(assignments=labels.astype(np.int64), model=model)


def kmeans_predict(model: KMeansModel, X) -> np.ndarray:
    """Nearest-centroid assignment, lowest index on ties."""
    X = _as_dense(X)
    if X.ndim != 2 or X.shape[1] != model.centroids.shape[1]:
        raise ValueError(
            f"input must be (n, {model.centroids.shape[1]}), got {X.shape}"
        )
    labels, _ = _assign(X, model.centroids)
    return labels.astype(np.int64)


def _contingency(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(
            f"label lists must have equal length, got {a.shape} and {b.shape}"
        )
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    table = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(table, (ai, bi), 1)
    return table


def nmi(a, b) -> float:
    """Mutual information normalized by the mean entropy, natural log.

    Defined as 1.0 when both sides are single-cluster (perfect trivial
    agreement).
    """
    table = _contingency(a, b)
    n = table.sum()
    if n < 1:
        raise ValueError("labels must be nonempty")
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    ha = -sum(p * math.log(p) for p in pa if p > 0)
    hb = -sum(p * math.log(p) for p in pb if p > 0)
    if ha == 0.0 and hb == 0.0:
        return 1.0
    mi = 0.0
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            if table[i, j] == 0:
                continue
            pij = table[i, j] / n
            mi += pij * math.log(pij / (pa[i] * pb[j]))
    mi = max(mi, 0.0)
    denom = (ha + hb) / 2.0
    if denom == 0.0:
        return 0.0
    return min(mi / denom, 1.0)


def _comb2(x: int) -> Fraction:
    return Fraction(x * (x - 1), 2)


def ari(a, b) -> float:
    """Adjusted Rand index over point pairs, exact rational arithmetic."""
    table = _contingency(a, b)
    n = int(table.sum())
    if n < 2:
        raise ValueError("adjusted Rand index needs at least 2 points")
    sum_cells = sum(_comb2(int(v)) for v in table.flat)
    sum_rows = sum(_comb2(int(v)) for v in table.sum(axis=1))
    sum_cols = sum(_comb2(int(v)) for v in table.sum(axis=0))
    total = _comb2(n)
    expected = sum_rows * sum_cols / total
    maximum = Fraction(sum_rows + sum_cols, 2)
    if maximum == expected:
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def purity(pred, gold) -> float:
    """Fraction of points in their cluster's majority gold class."""
    table = _contingency(pred, gold)
    return float(table.max(axis=1).sum() / table.sum())


def partition_metrics(pred, gold) -> dict:
    """{ari, purity} of a predicted partition against gold labels."""
    return {"ari": ari(pred, gold), "purity": purity(pred, gold)}


def evaluate(pred, gold) -> dict:
    """{nmi, ari, purity} of a predicted partition against gold labels."""
    out = {"nmi": nmi(pred, gold)}
    out.update(partition_metrics(pred, gold))
    return out
