"""Binary matrix persistence shared by every stage artifact.

Layout, all integers little-endian u32: magic ``FAME-MAT`` (8 ASCII bytes),
version=1, dtype tag (1=float32, 2=float64, 3=uint32), layout tag (0=dense,
1=sparse coordinate list), n_rows, n_cols. A dense payload is n_rows*n_cols
values row-major. A sparse payload is nnz, then nnz row indices (u32), nnz
column indices (u32), nnz values (dtype), sorted by (row, col).
"""

from __future__ import annotations

import struct

import numpy as np
import scipy.sparse as sp

MAGIC = b"FAME-MAT"
FORMAT_VERSION = 1

_DTYPE_TAGS = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("<u4")}
_TAG_FOR_KIND = {("f", 4): 1, ("f", 8): 2, ("u", 4): 3}

_LAYOUT_DENSE = 0
_LAYOUT_COO = 1

_U32_MAX = 2**32 - 1


def _dtype_tag(dtype: np.dtype) -> int:
    tag = _TAG_FOR_KIND.get((dtype.kind, dtype.itemsize))
    if tag is None:
        raise ValueError(
            f"unsupported dtype {dtype}; use float32, float64, or uint32"
        )
    return tag


def _check_u32(value: int, what: str) -> int:
    if not 0 <= value <= _U32_MAX:
        raise ValueError(f"{what} {value} does not fit in u32")
    return int(value)


def write_matrix(mat, path) -> None:
    """Persist a dense ndarray or scipy sparse matrix.

    Integer input is stored as uint32 (bounds-checked); float input keeps
    its 32/64-bit width. Byte-deterministic for identical input.
    """
    if sp.issparse(mat):
        coo = mat.tocoo()
        coo.eliminate_zeros()
        vals = np.asarray(coo.data)
        if vals.dtype.kind in "iu":
            if vals.size and (vals.min() < 0 or vals.max() > _U32_MAX):
                raise ValueError("integer values do not fit in u32")
            vals = vals.astype("<u4")
        dtype = np.dtype(vals.dtype).newbyteorder("<")
        tag = _dtype_tag(dtype)
        order = np.lexsort((coo.col, coo.row))
        rows = coo.row[order]
        cols = coo.col[order]
        vals = np.ascontiguousarray(vals[order], dtype=dtype)
        n_rows, n_cols = coo.shape
        _check_u32(rows.max() if rows.size else 0, "row index")
        _check_u32(cols.max() if cols.size else 0, "column index")
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack(
                "<IIIII", FORMAT_VERSION, tag, _LAYOUT_COO,
                _check_u32(n_rows, "row count"),
                _check_u32(n_cols, "column count"),
            ))
            f.write(struct.pack("<I", _check_u32(vals.size, "nnz")))
            f.write(rows.astype("<u4").tobytes())
            f.write(cols.astype("<u4").tobytes())
            f.write(vals.tobytes())
        return
    arr = np.asarray(mat)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"matrix must be 2-D, got shape {arr.shape}")
    if arr.dtype.kind in "iu":
        if arr.size and (arr.min() < 0 or arr.max() > _U32_MAX):
            raise ValueError("integer values do not fit in u32")
        arr = arr.astype("<u4")
    dtype = np.dtype(arr.dtype).newbyteorder("<")
    tag = _dtype_tag(dtype)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack(
            "<IIIII", FORMAT_VERSION, tag, _LAYOUT_DENSE,
            _check_u32(arr.shape[0], "row count"),
            _check_u32(arr.shape[1], "column count"),
        ))
        f.write(np.ascontiguousarray(arr, dtype=dtype).tobytes())


def _read_exact(f, n_bytes: int, what: str) -> bytes:
    buf = f.read(n_bytes)
    if len(buf) != n_bytes:
        raise ValueError(
            f"truncated file: expected {n_bytes} bytes for {what} at offset "
            f"{f.tell() - len(buf)}, got {len(buf)}"
        )
    return buf


def read_matrix(path):
    """Load a matrix written by write_matrix.

    Dense files return an ndarray, sparse files a CSR matrix. Dtype is
    preserved (uint32 comes back as uint32).
    """
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        version, tag, layout, n_rows, n_cols = struct.unpack(
            "<IIIII", _read_exact(f, 20, "header")
        )
        if version != FORMAT_VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        dtype = _DTYPE_TAGS.get(tag)
        if dtype is None:
            raise ValueError(f"{path}: unknown dtype tag {tag}")
        if layout == _LAYOUT_DENSE:
            payload = _read_exact(
                f, n_rows * n_cols * dtype.itemsize,
                f"{n_rows}x{n_cols} dense payload",
            )
            trailing = f.read(1)
            if trailing:
                raise ValueError(f"{path}: trailing data after payload")
            return (
                np.frombuffer(payload, dtype=dtype)
                .reshape(n_rows, n_cols)
                .copy()
            )
        if layout != _LAYOUT_COO:
            raise ValueError(f"{path}: unknown layout tag {layout}")
        (nnz,) = struct.unpack("<I", _read_exact(f, 4, "nnz"))
        rows = np.frombuffer(
            _read_exact(f, nnz * 4, "row indices"), dtype="<u4"
        )
        cols = np.frombuffer(
            _read_exact(f, nnz * 4, "column indices"), dtype="<u4"
        )
        vals = np.frombuffer(
            _read_exact(f, nnz * dtype.itemsize, "values"), dtype=dtype
        )
        trailing = f.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing data after payload")
    if nnz and (rows.max() >= n_rows or cols.max() >= n_cols):
        raise ValueError(f"{path}: index out of declared shape")
    mat = sp.coo_matrix(
        (vals.copy(), (rows.astype(np.int64), cols.astype(np.int64))),
        shape=(n_rows, n_cols),
    ).tocsr()
    mat.sort_indices()
    return mat
