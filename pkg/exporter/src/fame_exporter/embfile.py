"""FAME-EMB v1 writer.

Byte layout, integers little-endian u32: magic ``FAME-EMB`` (8 ASCII
bytes), version=1, n, d, then n*d float32 values row-major, then a u32
byte length followed by that many bytes of UTF-8 JSON:
{"ids": [...], "model_tag": "..."}.
"""

import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"FAME-EMB"
FORMAT_VERSION = 1


def write_embedding_file(path, ids, vectors, model_tag: str) -> None:
    """Write one embedding matrix with its row ids, atomically.

    The payload is float32 row-major. The file is assembled in a
    temporary sibling and renamed into place, so `path` never holds a
    partial file.
    """
    vecs = np.ascontiguousarray(vectors, dtype="<f4")
    if vecs.ndim != 2:
        raise ValueError(f"vectors must be 2-D, got shape {vecs.shape}")
    n, d = vecs.shape
    if d < 1:
        raise ValueError("embedding width must be >= 1")
    ids = [str(i) for i in ids]
    if len(ids) != n:
        raise ValueError(f"{len(ids)} ids for {n} vector rows")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate document ids")
    if not np.isfinite(vecs).all():
        raise ValueError("vectors contain non-finite values")

    meta = json.dumps(
        {"ids": ids, "model_tag": str(model_tag)},
        ensure_ascii=False,
        separators=(",", ":"),
    ).encode("utf-8")

    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".emb-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<III", FORMAT_VERSION, n, d))
            fh.write(vecs.tobytes(order="C"))
            fh.write(struct.pack("<I", len(meta)))
            fh.write(meta)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
