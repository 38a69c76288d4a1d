"""2-D projections for corpus visualization: PCA and exact t-SNE.

t-SNE is the exact O(n^2) algorithm: Gaussian input affinities with
per-point bandwidth found by binary search on the perplexity, Student-t
output affinities, gradient descent with early exaggeration and momentum.
Intended for desk-scale inputs (a few thousand points).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

_P_FLOOR = 1e-12
_EARLY_EXAGGERATION = 12.0
_EXAGGERATION_ITERS = 250
_LEARNING_RATE = 200.0
_MOMENTUM_EARLY = 0.5
_MOMENTUM_LATE = 0.8
_INIT_STD = 1e-4


@dataclass
class Projection2D:
    coords: np.ndarray  # (n, 2)
    method: str  # pca | tsne
    params: dict = field(default_factory=dict)
    kl_history: list = field(default_factory=list)  # (iteration, kl) pairs


def _as_dense(X) -> np.ndarray:
    if sp.issparse(X):
        X = np.asarray(X.todense())
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"input must be 2-D, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise ValueError("input contains non-finite values")
    return X


def pca_project(X, out_dims: int = 2) -> Projection2D:
    """Project onto the top principal components.

    Components are sign-fixed so each one's largest-magnitude loading is
    positive; inputs narrower than out_dims are zero-padded.
    """
    X = _as_dense(X)
    n, d = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows, got {n}")
    if out_dims < 1:
        raise ValueError(f"out_dims must be >= 1, got {out_dims}")
    centered = X - X.mean(axis=0)
    n_comp = min(out_dims, d)
    if d <= n:
        cov = centered.T @ centered / n
        eigvals, eigvecs = np.linalg.eigh(cov)
        order = np.argsort(eigvals)[::-1][:n_comp]
        components = eigvecs[:, order]
    else:
        # fewer rows than columns: economy SVD avoids the d x d matrix
        _, _, vt = np.linalg.svd(centered, full_matrices=False)
        components = vt[:n_comp].T
    for j in range(components.shape[1]):
        col = components[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            components[:, j] = -col
    coords = centered @ components
    if n_comp < out_dims:
        coords = np.hstack(
            [coords, np.zeros((n, out_dims - n_comp))]
        )
    return Projection2D(coords=coords, method="pca", params={"out_dims": out_dims})


def _pairwise_sq_dists(X: np.ndarray) -> np.ndarray:
    s = (X * X).sum(axis=1)
    d2 = s[:, None] - 2.0 * (X @ X.T) + s[None, :]
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _conditional_probs(d2_row: np.ndarray, beta: float):
    """Gaussian row of P_{j|i} at precision beta, plus its entropy (nats)."""
    # subtract the min for stability; cancels in the normalization
    shifted = -beta * (d2_row - d2_row.min())
    w = np.exp(shifted)
    total = w.sum()
    p = w / total
    # H = -sum p log p, computed via log-sum-exp shifted form
    logp = shifted - np.log(total)
    h = -float((p * logp).sum())
    return p, h


def input_affinities(X: np.ndarray, perplexity: float):
    """Symmetrized perplexity-calibrated affinity matrix.

    Returns (P, conditionals, entropies): the symmetrized matrix, the row
    conditional distributions P_{j|i}, and each row's achieved entropy.
    Per-point bandwidths come from a binary search to entropy
    ln(perplexity), tolerance 1e-5, at most 50 bisection steps.
    """
    n = X.shape[0]
    d2 = _pairwise_sq_dists(X)
    if d2.max() == 0.0:
        raise ValueError(
            "degenerate input: all points are identical"
        )
    target = np.log(perplexity)
    cond = np.zeros((n, n))
    entropies = np.zeros(n)
    mask = ~np.eye(n, dtype=bool)
    for i in range(n):
        row = d2[i][mask[i]]
        beta, beta_lo, beta_hi = 1.0, 0.0, np.inf
        p, h = _conditional_probs(row, beta)
        for _ in range(50):
            if abs(h - target) <= 1e-5:
                break
            if h > target:  # too spread out: sharpen
                beta_lo = beta
                beta = beta * 2.0 if beta_hi == np.inf else (beta + beta_hi) / 2.0
            else:
                beta_hi = beta
                beta = (beta + beta_lo) / 2.0
            p, h = _conditional_probs(row, beta)
        cond[i][mask[i]] = p
        entropies[i] = h
    P = (cond + cond.T) / (2.0 * n)
    np.maximum(P, _P_FLOOR, out=P)
    np.fill_diagonal(P, 0.0)
    return P, cond, entropies


def _q_affinities(Y: np.ndarray):
    """Student-t output affinities Q and the unnormalized kernel s."""
    d2 = _pairwise_sq_dists(Y)
    s = 1.0 / (1.0 + d2)
    np.fill_diagonal(s, 0.0)
    total = s.sum()
    Q = np.maximum(s / total, _P_FLOOR)
    np.fill_diagonal(Q, 0.0)
    return Q, s


def _kl(P: np.ndarray, Q: np.ndarray) -> float:
    mask = P > 0
    return float((P[mask] * np.log(P[mask] / Q[mask])).sum())


def tsne_gradient(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Exact KL gradient 4 (P - Q) s (y_i - y_j) summed over j."""
    Q, s = _q_affinities(Y)
    M = (P - Q) * s
    grad = 4.0 * ((np.diag(M.sum(axis=1)) - M) @ Y)
    return grad


def tsne_project(
    X,
    perplexity: float = 30.0,
    iters: int = 1000,
    seed: int = 0,
) -> Projection2D:
    """Exact t-SNE to 2-D.

    Deterministic: the layout starts from the PCA projection rescaled to
    std 1e-4, so the seed does not influence the result; it is accepted
    for interface uniformity. Early exaggeration 12x for the first 250
    iterations, learning rate 200, momentum 0.5 then 0.8 after iteration
    250. kl_history holds (iteration, kl) every 10 iterations plus the
    final one, measured against the unexaggerated affinities.
    """
    X = _as_dense(X)
    n = X.shape[0]
    if perplexity <= 0 or perplexity >= (n - 1) / 3.0:
        raise ValueError(
            f"perplexity {perplexity} infeasible for {n} points; require "
            f"0 < perplexity < (n - 1) / 3"
        )
    if n < 4:
        raise ValueError(f"need at least 4 rows, got {n}")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")

    P, _, _ = input_affinities(X, perplexity)

    Y = pca_project(X, out_dims=2).coords
    spread = Y.std()
    if spread > 0:
        Y = Y * (_INIT_STD / spread)
    velocity = np.zeros_like(Y)
    # per-parameter delta-bar-delta gains; the fixed learning rate alone
    # stalls long before the layout separates
    gain = np.ones_like(Y)
    kl_history: list[tuple[int, float]] = []
    for it in range(iters):
        exaggerate = it < _EXAGGERATION_ITERS
        P_eff = P * _EARLY_EXAGGERATION if exaggerate else P
        Q, s = _q_affinities(Y)
        M = (P_eff - Q) * s
        grad = 4.0 * ((np.diag(M.sum(axis=1)) - M) @ Y)
        if it % 10 == 0:
            kl_history.append((it, _kl(P, Q)))
        momentum = _MOMENTUM_EARLY if it < _EXAGGERATION_ITERS else _MOMENTUM_LATE
        same_sign = (grad > 0) == (velocity > 0)
        gain[same_sign] *= 0.8
        gain[~same_sign] += 0.2
        np.maximum(gain, 0.01, out=gain)
        velocity = momentum * velocity - _LEARNING_RATE * gain * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
    Q, _ = _q_affinities(Y)
    kl_history.append((iters, _kl(P, Q)))
    if not np.isfinite(Y).all():
        raise RuntimeError("layout diverged to non-finite coordinates")
    return Projection2D(
        coords=Y,
        method="tsne",
        params={"perplexity": perplexity, "iters": iters, "seed": seed},
        kl_history=kl_history,
    )


def emit_projection(proj: Projection2D, ids, assignments, gold, path) -> None:
    """Write `doc_id,x,y,cluster,label` rows in corpus order.

    gold may be None (empty label column) or a per-document list whose
    None entries become empty fields. UTF-8, LF line endings.
    """
    import csv

    n = proj.coords.shape[0]
    if len(ids) != n or len(assignments) != n:
        raise ValueError(
            f"ids ({len(ids)}), assignments ({len(assignments)}) and "
            f"coords ({n}) must agree in length"
        )
    if gold is not None and len(gold) != n:
        raise ValueError(f"gold labels ({len(gold)}) must have length {n}")
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["doc_id", "x", "y", "cluster", "label"])
        for i in range(n):
            label = "" if gold is None or gold[i] is None else gold[i]
            writer.writerow([
                ids[i],
                repr(float(proj.coords[i, 0])),
                repr(float(proj.coords[i, 1])),
                int(assignments[i]),
                label,
            ])
