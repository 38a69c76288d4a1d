"""Term-weighting features: tf-idf and nonnegative matrix factorization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .blocks import FeatureBlock

_NMF_EPS = 1e-12


def _as_csr(matrix) -> sparse.csr_matrix:
    if sparse.issparse(matrix):
        out = matrix.tocsr()
    else:
        out = sparse.csr_matrix(np.asarray(matrix))
    out.eliminate_zeros()
    return out


@dataclass
class TfidfModel:
    idf: np.ndarray
    n_docs_fitted: int
    normalize: bool


def fit_tfidf(counts, normalize: bool = True) -> TfidfModel:
    """Fit smoothed idf weights: idf[t] = ln((1+N)/(1+df_t)) + 1."""
    counts = _as_csr(counts)
    n_docs, n_terms = counts.shape
    if n_docs == 0 or n_terms == 0:
        raise ValueError(f"count matrix has empty shape {counts.shape}")
    if counts.nnz == 0:
        raise ValueError("count matrix is all zero; nothing to fit")
    df = counts.getnnz(axis=0).astype(np.float64)
    idf = np.log((1.0 + n_docs) / (1.0 + df)) + 1.0
    return TfidfModel(idf=idf, n_docs_fitted=n_docs, normalize=normalize)


def transform_tfidf(model: TfidfModel, counts) -> FeatureBlock:
    """Weight raw counts by idf; rows with any mass get unit L2 norm when
    the model says to normalize, zero rows stay zero."""
    counts = _as_csr(counts)
    if counts.shape[1] != model.idf.shape[0]:
        raise ValueError(
            f"count matrix has {counts.shape[1]} columns but the model was "
            f"fitted with {model.idf.shape[0]} terms"
        )
    out = counts.astype(np.float64)
    out.data = out.data * model.idf[out.indices]
    if model.normalize:
        norms = np.sqrt(np.asarray(out.multiply(out).sum(axis=1)).ravel())
        scale = np.divide(
            1.0, norms, out=np.zeros_like(norms), where=norms > 0
        )
        out = sparse.csr_matrix(
            (out.data * np.repeat(scale, np.diff(out.indptr)),
             out.indices, out.indptr),
            shape=out.shape,
        )
    return FeatureBlock("tfidf", out)


@dataclass
class NmfModel:
    rank: int
    W: np.ndarray
    H: np.ndarray
    loss_history: list[float] = field(default_factory=list)
    seed: int = 0

    def block(self) -> FeatureBlock:
        return FeatureBlock("nmf", self.W)


def _frobenius_error(X, W, H) -> float:
    if sparse.issparse(X):
        # ||X - WH||_F^2 expanded so the dense product never materializes
        wtx = (X.T @ W).T
        sq = (
            X.power(2).sum()
            - 2.0 * float(np.sum(wtx * H))
            + float(np.sum((W.T @ W) * (H @ H.T)))
        )
        return float(np.sqrt(max(sq, 0.0)))
    return float(np.linalg.norm(X - W @ H))


def nmf_step(X, W, H, eps: float = _NMF_EPS):
    """One round of multiplicative updates (H then W); returns new (W, H)."""
    if sparse.issparse(X):
        wtx = (X.T @ W).T
    else:
        wtx = W.T @ X
    H = H * (wtx / (W.T @ W @ H + eps))
    xht = X @ H.T
    W = W * (xht / (W @ (H @ H.T) + eps))
    return W, H


def fit_nmf(
    X,
    rank: int,
    iters: int = 200,
    seed: int = 0,
    tol: float | None = None,
) -> NmfModel:
    """Multiplicative-update NMF of a nonnegative matrix.

    `tol`, when given, stops early once the relative per-iteration
    improvement of the Frobenius error falls below it.
    """
    dense = not sparse.issparse(X)
    if dense:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"X must be 2-D, got shape {X.shape}")
        if (X < 0).any():
            raise ValueError("X has negative entries; NMF requires X >= 0")
    else:
        X = X.tocsr().astype(np.float64)
        if (X.data < 0).any():
            raise ValueError("X has negative entries; NMF requires X >= 0")
    n, m = X.shape
    if not 1 <= rank <= min(n, m):
        raise ValueError(
            f"rank must be in [1, {min(n, m)}] for a {n}x{m} matrix, "
            f"got {rank}"
        )
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    rng = np.random.default_rng(seed)
    scale = np.sqrt((X.mean() if dense else X.sum() / (n * m)) / rank)
    W = rng.random((n, rank)) * scale
    H = rng.random((rank, m)) * scale
    history: list[float] = []
    for _ in range(iters):
        W, H = nmf_step(X, W, H)
        err = _frobenius_error(X, W, H)
        history.append(err)
        if tol is not None and len(history) >= 2:
            prev = history[-2]
            if prev - err < tol * prev:
                break
    return NmfModel(rank=rank, W=W, H=H, loss_history=history, seed=seed)
