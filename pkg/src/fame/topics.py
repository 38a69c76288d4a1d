"""Cluster topic descriptors via class-based tf-idf.

Each cluster is pooled into one pseudo-document; a term's score there is
its within-cluster frequency share times ln(1 + A / f_t), where f_t is the
term's corpus-wide count and A the mean cluster token total. Purely
deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


@dataclass
class ClusterTopics:
    terms: list[list[str]]  # per cluster, score-descending
    scores: list[list[float]]
    n_terms: int

    @property
    def n_clusters(self) -> int:
        return len(self.terms)


def cluster_top_terms(
    counts,
    assignments,
    vocab,
    n: int,
    n_clusters: int | None = None,
) -> ClusterTopics:
    """Top-n characteristic terms per cluster.

    vocab is a Vocabulary or a plain term list. n_clusters defaults to
    max(assignments)+1; empty clusters yield empty lists. Ties rank the
    lexicographically smaller term first.
    """
    terms = list(getattr(vocab, "terms", vocab))
    counts = sp.csr_matrix(counts)
    assignments = np.asarray(assignments, dtype=np.int64)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if counts.shape[0] != assignments.shape[0]:
        raise ValueError(
            f"{assignments.shape[0]} assignments for {counts.shape[0]} "
            "count rows"
        )
    if counts.shape[1] != len(terms):
        raise ValueError(
            f"count matrix has {counts.shape[1]} columns for vocabulary "
            f"of size {len(terms)}"
        )
    if n_clusters is None:
        n_clusters = int(assignments.max()) + 1 if assignments.size else 0
    elif assignments.size and int(assignments.max()) >= n_clusters:
        raise ValueError(
            f"assignment id {int(assignments.max())} out of range for "
            f"{n_clusters} clusters"
        )

    # pooled (n_clusters, V) counts: one pseudo-document per cluster
    pooled = np.zeros((n_clusters, counts.shape[1]), dtype=np.float64)
    for c in range(n_clusters):
        rows = np.flatnonzero(assignments == c)
        if rows.size:
            pooled[c] = counts[rows].sum(axis=0)
    corpus_freq = pooled.sum(axis=0)
    cluster_totals = pooled.sum(axis=1)
    a_mean = cluster_totals.mean() if n_clusters else 0.0

    out_terms: list[list[str]] = []
    out_scores: list[list[float]] = []
    for c in range(n_clusters):
        if cluster_totals[c] == 0:
            out_terms.append([])
            out_scores.append([])
            continue
        tf = pooled[c] / cluster_totals[c]
        present = np.flatnonzero(pooled[c] > 0)
        scored = sorted(
            (
                (-tf[t] * math.log(1.0 + a_mean / corpus_freq[t]), terms[t])
                for t in present
            ),
        )
        top = scored[: min(n, len(scored))]
        out_terms.append([term for _, term in top])
        out_scores.append([-neg for neg, _ in top])
    return ClusterTopics(terms=out_terms, scores=out_scores, n_terms=n)
