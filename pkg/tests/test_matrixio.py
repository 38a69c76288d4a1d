"""Tests for the binary matrix artifact format."""

import struct

import numpy as np
import pytest
import scipy.sparse as sp

from fame.matrixio import MAGIC, read_matrix, write_matrix


class TestDenseRoundTrip:
    """Dense matrices across the three supported dtypes."""

    def test_float64(self, tmp_path):
        rng = np.random.default_rng(60)
        mat = rng.standard_normal((7, 4))
        path = tmp_path / "m.mat"
        write_matrix(mat, path)
        back = read_matrix(path)
        assert back.dtype == np.float64
        assert np.array_equal(back, mat)

    def test_float32(self, tmp_path):
        rng = np.random.default_rng(61)
        mat = rng.standard_normal((5, 6)).astype(np.float32)
        path = tmp_path / "m.mat"
        write_matrix(mat, path)
        back = read_matrix(path)
        assert back.dtype == np.float32
        assert np.array_equal(back, mat)

    def test_integers_become_uint32(self, tmp_path):
        mat = np.array([[0, 5], [2, 4294967295]], dtype=np.int64)
        path = tmp_path / "m.mat"
        write_matrix(mat, path)
        back = read_matrix(path)
        assert back.dtype == np.uint32
        assert np.array_equal(back, mat)

    def test_one_dimensional_becomes_column(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(np.array([1.0, 2.0, 3.0]), path)
        assert read_matrix(path).shape == (3, 1)

    def test_empty_matrix(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(np.zeros((0, 4)), path)
        back = read_matrix(path)
        assert back.shape == (0, 4)

    def test_write_is_byte_deterministic(self, tmp_path):
        rng = np.random.default_rng(62)
        mat = rng.standard_normal((6, 3))
        a, b = tmp_path / "a.mat", tmp_path / "b.mat"
        write_matrix(mat, a)
        write_matrix(mat, b)
        assert a.read_bytes() == b.read_bytes()

    def test_header_layout(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(np.zeros((2, 3), np.float32), path)
        raw = path.read_bytes()
        assert raw[:8] == MAGIC
        version, tag, layout, rows, cols = struct.unpack_from("<IIIII", raw, 8)
        assert (version, tag, layout, rows, cols) == (1, 1, 0, 2, 3)
        assert len(raw) == 28 + 2 * 3 * 4


class TestSparseRoundTrip:
    """COO persistence comes back as an identical CSR matrix."""

    def test_float64_csr(self, tmp_path):
        rng = np.random.default_rng(63)
        dense = rng.standard_normal((8, 10))
        dense[dense < 0.5] = 0.0
        mat = sp.csr_matrix(dense)
        path = tmp_path / "m.mat"
        write_matrix(mat, path)
        back = read_matrix(path)
        assert sp.issparse(back)
        assert back.dtype == np.float64
        assert np.array_equal(back.toarray(), dense)

    def test_integer_counts(self, tmp_path):
        mat = sp.csr_matrix(np.array([[0, 3], [7, 0]], dtype=np.int64))
        path = tmp_path / "m.mat"
        write_matrix(mat, path)
        back = read_matrix(path)
        assert back.dtype == np.uint32
        assert back.toarray().tolist() == [[0, 3], [7, 0]]

    def test_explicit_zeros_dropped(self, tmp_path):
        mat = sp.coo_matrix(
            (np.array([0.0, 2.0]), (np.array([0, 1]), np.array([0, 1]))),
            shape=(2, 2),
        )
        path = tmp_path / "m.mat"
        write_matrix(mat, path)
        assert read_matrix(path).nnz == 1

    def test_unsorted_coo_canonicalized(self, tmp_path):
        # same matrix entered in two entry orders writes identical bytes
        rows = np.array([1, 0, 1])
        cols = np.array([0, 1, 2])
        vals = np.array([4.0, 5.0, 6.0])
        a = sp.coo_matrix((vals, (rows, cols)), shape=(2, 3))
        perm = [2, 0, 1]
        b = sp.coo_matrix(
            (vals[perm], (rows[perm], cols[perm])), shape=(2, 3)
        )
        pa, pb = tmp_path / "a.mat", tmp_path / "b.mat"
        write_matrix(a, pa)
        write_matrix(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_empty_sparse(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(sp.csr_matrix((4, 5)), path)
        back = read_matrix(path)
        assert back.shape == (4, 5)
        assert back.nnz == 0


class TestValidation:
    """Bounds checks and corrupt-file diagnostics."""

    def test_unsupported_dtype(self, tmp_path):
        with pytest.raises(ValueError, match="dtype"):
            write_matrix(np.zeros((2, 2), np.float16), tmp_path / "m.mat")

    def test_negative_integer_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="u32"):
            write_matrix(np.array([[-1, 2]]), tmp_path / "m.mat")

    def test_oversized_integer_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="u32"):
            write_matrix(np.array([[2**32]]), tmp_path / "m.mat")

    def test_three_dimensional_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="2-D"):
            write_matrix(np.zeros((2, 2, 2)), tmp_path / "m.mat")

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.mat"
        path.write_bytes(b"SOMETHNG" + b"\0" * 20)
        with pytest.raises(ValueError, match="magic"):
            read_matrix(path)

    def test_unknown_version(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(np.zeros((1, 1)), path)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<I", raw, 8, 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="version 9"):
            read_matrix(path)

    def test_unknown_dtype_tag(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(np.zeros((1, 1)), path)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<I", raw, 12, 42)
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="dtype tag 42"):
            read_matrix(path)

    def test_unknown_layout_tag(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(np.zeros((1, 1)), path)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<I", raw, 16, 7)
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="layout tag 7"):
            read_matrix(path)

    def test_truncated_payload_reports_offset(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(np.zeros((2, 2)), path)
        raw = path.read_bytes()
        path.write_bytes(raw[:30])
        with pytest.raises(ValueError, match="truncated.*offset 28"):
            read_matrix(path)

    def test_trailing_data_rejected_dense(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(np.zeros((1, 1)), path)
        path.write_bytes(path.read_bytes() + b"z")
        with pytest.raises(ValueError, match="trailing"):
            read_matrix(path)

    def test_trailing_data_rejected_sparse(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(sp.csr_matrix(np.eye(2)), path)
        path.write_bytes(path.read_bytes() + b"z")
        with pytest.raises(ValueError, match="trailing"):
            read_matrix(path)

    def test_sparse_index_out_of_shape(self, tmp_path):
        path = tmp_path / "m.mat"
        write_matrix(sp.csr_matrix(np.eye(2)), path)
        raw = bytearray(path.read_bytes())
        # first row index lives right after header + nnz field
        struct.pack_into("<I", raw, 32, 9)
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="out of declared shape"):
            read_matrix(path)
