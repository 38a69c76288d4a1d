"""Shared feature-block container passed between pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse


@dataclass
class FeatureBlock:
    """A named per-document feature matrix, row-aligned with the corpus.

    The matrix is logically dense; a sparse matrix is accepted as a storage
    optimization and densified by consumers that need contiguous rows.
    """

    name: str
    matrix: "np.ndarray | sparse.spmatrix"

    @property
    def n_rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def width(self) -> int:
        return int(self.matrix.shape[1])

    def dense(self, dtype=np.float64) -> np.ndarray:
        if sparse.issparse(self.matrix):
            return np.asarray(self.matrix.todense(), dtype=dtype)
        return np.asarray(self.matrix, dtype=dtype)
