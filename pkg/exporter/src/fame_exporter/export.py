"""Batch sentence-encoder export.

Documents are embedded from their raw text: pretrained sentence encoders
ship their own tokenizers and expect natural text, so none of the
downstream pipeline's preprocessing is applied here.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import read_corpus
from .embfile import write_embedding_file

DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2"


@dataclass(frozen=True)
class ExportJob:
    """One export run: corpus in, FAME-EMB file out."""

    corpus: str
    out: str
    model: str = DEFAULT_MODEL
    batch_size: int = 32
    normalize: bool = False
    device: Optional[str] = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")


def _l2_normalize(vectors: np.ndarray) -> np.ndarray:
    # norms in float64 so unit length survives the float32 round trip
    out = vectors.astype(np.float64)
    norms = np.linalg.norm(out, axis=1, keepdims=True)
    nonzero = norms[:, 0] > 0.0
    out[nonzero] = out[nonzero] / norms[nonzero]
    return out.astype(np.float32)


def export_embeddings(job: ExportJob) -> int:
    """Embed every document and write the embedding file; returns row count.

    Rows follow corpus order and carry the corpus document ids; the model
    name is recorded verbatim as the file's model_tag.
    """
    entries = read_corpus(job.corpus)
    if not entries:
        raise ValueError(
            f"{job.corpus}: corpus is empty; embedding width would be undefined"
        )

    # imported here so --help and argument errors stay fast
    from sentence_transformers import SentenceTransformer

    encoder = SentenceTransformer(job.model, device=job.device)
    vectors = encoder.encode(
        [entry.text for entry in entries],
        batch_size=job.batch_size,
        convert_to_numpy=True,
        show_progress_bar=False,
    )
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim == 1:
        vectors = vectors.reshape(1, -1)
    if job.normalize:
        vectors = _l2_normalize(vectors)

    write_embedding_file(
        job.out,
        [entry.id for entry in entries],
        vectors,
        model_tag=job.model,
    )
    return len(entries)
