"""Binary exchange format for externally computed document embeddings.

Layout: magic ``FAME-EMB`` (8 ASCII bytes), then little-endian u32 fields
version=1, n, d, then n*d float32 values row-major, then a u32 byte length
followed by that many bytes of UTF-8 JSON: {"ids": [...], "model_tag": "..."}.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .blocks import FeatureBlock

MAGIC = b"FAME-EMB"
FORMAT_VERSION = 1


@dataclass
class EmbeddingMatrix:
    ids: list[str]
    vectors: np.ndarray  # (n, d) float32
    model_tag: str

    def __post_init__(self):
        vecs = np.asarray(self.vectors, dtype=np.float32)
        if vecs.ndim != 2:
            raise ValueError(f"vectors must be 2-D, got shape {vecs.shape}")
        if vecs.shape[1] < 1:
            raise ValueError("embedding width must be >= 1")
        if len(self.ids) != vecs.shape[0]:
            raise ValueError(
                f"{len(self.ids)} ids for {vecs.shape[0]} vector rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate document ids in embedding matrix")
        if not np.isfinite(vecs).all():
            r, c = np.argwhere(~np.isfinite(vecs))[0]
            raise ValueError(
                f"non-finite embedding value at row {r}, col {c}"
            )
        self.vectors = vecs

    @property
    def n_rows(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def write_embeddings(emb: EmbeddingMatrix, path) -> None:
    """Serialize; byte-deterministic for identical input."""
    meta = json.dumps(
        {"ids": list(emb.ids), "model_tag": emb.model_tag},
        ensure_ascii=False,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", FORMAT_VERSION, emb.n_rows, emb.dim))
        f.write(np.ascontiguousarray(emb.vectors, dtype="<f4").tobytes())
        f.write(struct.pack("<I", len(meta)))
        f.write(meta)


def _read_exact(f, n_bytes: int, what: str) -> bytes:
    buf = f.read(n_bytes)
    if len(buf) != n_bytes:
        raise ValueError(
            f"truncated file: expected {n_bytes} bytes for {what} at offset "
            f"{f.tell() - len(buf)}, got {len(buf)}"
        )
    return buf


def read_embeddings(path) -> EmbeddingMatrix:
    """Parse and validate an embedding file; rejects NaN and infinity."""
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(
                f"{path}: bad magic {magic!r}, expected {MAGIC!r}"
            )
        version, n, d = struct.unpack("<III", _read_exact(f, 12, "header"))
        if version != FORMAT_VERSION:
            raise ValueError(
                f"{path}: unsupported format version {version}"
            )
        if d < 1:
            raise ValueError(f"{path}: embedding width {d} must be >= 1")
        payload = _read_exact(f, n * d * 4, f"{n}x{d} float32 matrix")
        vectors = np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()
        (meta_len,) = struct.unpack("<I", _read_exact(f, 4, "metadata length"))
        meta_raw = _read_exact(f, meta_len, "metadata")
        trailing = f.read(1)
        if trailing:
            raise ValueError(
                f"{path}: trailing data after metadata at offset {f.tell() - 1}"
            )
    try:
        meta = json.loads(meta_raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"{path}: malformed metadata JSON: {exc}") from exc
    if not isinstance(meta, dict) or "ids" not in meta:
        raise ValueError(f"{path}: metadata must be an object with 'ids'")
    ids = meta["ids"]
    if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
        raise ValueError(f"{path}: 'ids' must be a list of strings")
    if len(ids) != n:
        raise ValueError(
            f"{path}: header declares {n} rows but metadata has "
            f"{len(ids)} ids"
        )
    model_tag = meta.get("model_tag", "")
    if not isinstance(model_tag, str):
        raise ValueError(f"{path}: 'model_tag' must be a string")
    if not np.isfinite(vectors).all():
        r, c = np.argwhere(~np.isfinite(vectors))[0]
        raise ValueError(
            f"{path}: non-finite value at row {r}, col {c}"
        )
    return EmbeddingMatrix(ids=ids, vectors=vectors, model_tag=model_tag)


def align_embeddings(emb: EmbeddingMatrix, corpus, normalize: bool = False) -> FeatureBlock:
    """Reorder rows to corpus document order, optionally L2-normalizing.

    The id sets must match exactly; mismatches report up to 10 offenders
    per direction.
    """
    corpus_ids = corpus.ids()
    emb_index = {doc_id: i for i, doc_id in enumerate(emb.ids)}
    missing = [i for i in corpus_ids if i not in emb_index]
    if missing:
        shown = ", ".join(repr(i) for i in missing[:10])
        more = f" (and {len(missing) - 10} more)" if len(missing) > 10 else ""
        raise ValueError(
            f"embeddings missing {len(missing)} corpus ids: {shown}{more}"
        )
    corpus_set = set(corpus_ids)
    extra = [i for i in emb.ids if i not in corpus_set]
    if extra:
        shown = ", ".join(repr(i) for i in extra[:10])
        more = f" (and {len(extra) - 10} more)" if len(extra) > 10 else ""
        raise ValueError(
            f"embeddings contain {len(extra)} ids not in the corpus: "
            f"{shown}{more}"
        )
    order = np.array([emb_index[i] for i in corpus_ids], dtype=np.int64)
    mat = emb.vectors[order].astype(np.float64)
    if normalize:
        norms = np.linalg.norm(mat, axis=1, keepdims=True)
        np.divide(mat, norms, out=mat, where=norms > 0)
    return FeatureBlock("embeddings", mat)
