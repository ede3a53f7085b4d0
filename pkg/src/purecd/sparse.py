"""Sparse matrix storage with both column and row access, plus LIBSVM ingestion.

The solver's inner loop walks single columns (the rows ``J(i)`` touched by
primal coordinate ``i``); baselines and metrics need full products.  Both
compressed layouts are therefore kept side by side.
"""
import io
import logging

import numpy as np
from scipy import sparse as sp

__all__ = [
    "SparseMatrix",
    "LibsvmFormatError",
    "parse_libsvm",
    "load_libsvm",
    "dump_libsvm",
    "preprocess",
    "col_gather",
    "col_axpy",
    "matvec",
    "matTvec",
]

logger = logging.getLogger(__name__)


class LibsvmFormatError(ValueError):
    """Raised on malformed LIBSVM input; carries the 1-based line number."""

    def __init__(self, lineno, message):
        super().__init__("line %d: %s" % (lineno, message))
        self.lineno = lineno


def _frozen(arr, dtype):
    arr = np.ascontiguousarray(arr, dtype=dtype)
    arr.setflags(write=False)
    return arr


class SparseMatrix:
    """Immutable ``m x n`` matrix stored as CSC and CSR simultaneously.

    Attributes
    ----------
    m, n : int
        Row count (dual dimension) and column count (primal dimension).
    csc_indptr, csc_indices, csc_data : ndarray
        Column-major storage; rows inside a column are strictly increasing.
    csr_indptr, csr_indices, csr_data : ndarray
        Row-major storage of the same entries.
    col_sq_norms : ndarray
        ``||A_i||^2`` for every column.
    row_support : ndarray
        Number of stored entries in each row, ``|I(j)|``.
    """

    def __init__(self, mat):
        csc = sp.csc_matrix(mat, dtype=np.float64, copy=True)
        csc.sum_duplicates()
        csc.eliminate_zeros()
        csc.sort_indices()
        csr = csc.tocsr()
        csr.sort_indices()

        self.m, self.n = (int(s) for s in csc.shape)
        self.csc_indptr = _frozen(csc.indptr, np.int64)
        self.csc_indices = _frozen(csc.indices, np.int64)
        self.csc_data = _frozen(csc.data, np.float64)
        self.csr_indptr = _frozen(csr.indptr, np.int64)
        self.csr_indices = _frozen(csr.indices, np.int64)
        self.csr_data = _frozen(csr.data, np.float64)

        sq = np.zeros(self.n)
        cols = np.repeat(np.arange(self.n), np.diff(self.csc_indptr))
        np.add.at(sq, cols, self.csc_data**2)
        self.col_sq_norms = _frozen(sq, np.float64)
        self.row_support = _frozen(np.diff(self.csr_indptr), np.int64)
        self.col_support = _frozen(np.diff(self.csc_indptr), np.int64)

        self._csc = sp.csc_matrix(
            (self.csc_data, self.csc_indices, self.csc_indptr), shape=self.shape
        )
        self._csr = sp.csr_matrix(
            (self.csr_data, self.csr_indices, self.csr_indptr), shape=self.shape
        )

    @classmethod
    def from_dense(cls, dense):
        dense = np.atleast_2d(np.asarray(dense, dtype=np.float64))
        return cls(sp.csc_matrix(dense))

    @classmethod
    def from_triplets(cls, rows, cols, vals, shape):
        return cls(sp.coo_matrix((vals, (rows, cols)), shape=shape))

    @property
    def shape(self):
        return (self.m, self.n)

    @property
    def nnz(self):
        return int(self.csc_data.size)

    def column(self, i):
        """Return ``(rows, values)`` views of column ``i``."""
        _check_col(self, i)
        lo, hi = self.csc_indptr[i], self.csc_indptr[i + 1]
        return self.csc_indices[lo:hi], self.csc_data[lo:hi]

    def row(self, j):
        """Return ``(cols, values)`` views of row ``j``."""
        if not 0 <= j < self.m:
            raise IndexError("row %d out of range for %d rows" % (j, self.m))
        lo, hi = self.csr_indptr[j], self.csr_indptr[j + 1]
        return self.csr_indices[lo:hi], self.csr_data[lo:hi]

    def triplets(self):
        """All stored entries as a sorted list of ``(row, col, value)``."""
        cols = np.repeat(np.arange(self.n), self.col_support)
        out = list(zip(self.csc_indices.tolist(), cols.tolist(), self.csc_data.tolist()))
        out.sort()
        return out

    def toarray(self):
        return self._csr.toarray()

    def to_scipy(self, fmt="csr"):
        return self._csr.copy() if fmt == "csr" else self._csc.copy()

    def __repr__(self):
        return "SparseMatrix(shape=%r, nnz=%d)" % (self.shape, self.nnz)


def _check_col(A, i):
    if not 0 <= i < A.n:
        raise IndexError("column %d out of range for %d columns" % (i, A.n))


def col_gather(A, i, visit):
    """Call ``visit(j, A[j, i])`` for each stored entry of column ``i``, in row order."""
    rows, vals = A.column(i)
    for j, v in zip(rows.tolist(), vals.tolist()):
        visit(j, v)


def col_axpy(A, i, delta, a):
    """In-place ``a += delta * A[:, i]``, touching only the rows of the column."""
    if a.shape[0] != A.m:
        raise ValueError("vector has length %d, expected %d" % (a.shape[0], A.m))
    rows, vals = A.column(i)
    if delta != 0.0:
        a[rows] += delta * vals
    return a


def matvec(A, x):
    """``A @ x`` through the CSR layout."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (A.n,):
        raise ValueError("x has shape %r, expected (%d,)" % (x.shape, A.n))
    return A._csr @ x


def matTvec(A, y):
    """``A.T @ y`` through the CSC layout."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (A.m,):
        raise ValueError("y has shape %r, expected (%d,)" % (y.shape, A.m))
    return A._csc.T @ y


def parse_libsvm(data):
    """Parse LIBSVM text into a matrix and a label vector.

    Each non-empty line reads ``<label> <index>:<value> ...`` with 1-based,
    strictly increasing feature indices; anything after ``#`` is ignored.
    Indices are shifted to 0-based in memory. Line ``k`` becomes row ``k``
    (blank and comment-only lines are skipped) and the column count is the
    largest index seen.

    Parameters
    ----------
    data : bytes, str, or binary/text file object

    Returns
    -------
    A : SparseMatrix
    labels : ndarray

    Raises
    ------
    LibsvmFormatError
        On malformed tokens, non-positive indices, or indices that do not
        strictly increase within a line.
    """
    if hasattr(data, "read"):
        data = data.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")

    labels = []
    rows, cols, vals = [], [], []
    n = 0
    for lineno, line in enumerate(io.StringIO(data), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label = float(tokens[0])
        except ValueError:
            raise LibsvmFormatError(lineno, "bad label %r" % tokens[0]) from None
        r = len(labels)
        labels.append(label)
        prev = 0
        for tok in tokens[1:]:
            idx, sep, val = tok.partition(":")
            if not sep:
                raise LibsvmFormatError(lineno, "expected index:value, got %r" % tok)
            try:
                idx = int(idx)
                val = float(val)
            except ValueError:
                raise LibsvmFormatError(lineno, "malformed token %r" % tok) from None
            if idx < 1:
                raise LibsvmFormatError(lineno, "index %d is not 1-based" % idx)
            if idx <= prev:
                raise LibsvmFormatError(
                    lineno, "index %d does not increase (previous %d)" % (idx, prev)
                )
            prev = idx
            if val != 0.0:
                rows.append(r)
                cols.append(idx - 1)
                vals.append(val)
        n = max(n, prev)

    A = SparseMatrix.from_triplets(
        np.asarray(rows, dtype=np.int64),
        np.asarray(cols, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
        (len(labels), n),
    )
    return A, np.asarray(labels, dtype=np.float64)


def load_libsvm(path):
    with open(path, "rb") as fh:
        return parse_libsvm(fh)


def dump_libsvm(A, labels, fh):
    """Write ``A`` and ``labels`` to a text file object in LIBSVM format."""
    for j in range(A.m):
        cols, vals = A.row(j)
        feats = " ".join("%d:%.17g" % (c + 1, v) for c, v in zip(cols.tolist(), vals.tolist()))
        fh.write(("%.17g %s" % (labels[j], feats)).rstrip() + "\n")


def preprocess(A, labels):
    """Drop empty rows and columns, then scale every row to unit norm.

    Returns
    -------
    A : SparseMatrix
    labels : ndarray
        Labels of the kept rows (not rescaled).
    kept_rows, kept_cols : ndarray
        Original indices of the surviving rows and columns.
    """
    labels = np.asarray(labels, dtype=np.float64)
    kept_rows = np.flatnonzero(A.row_support > 0)
    kept_cols = np.flatnonzero(A.col_support > 0)
    if kept_rows.size < A.m or kept_cols.size < A.n:
        logger.info(
            "dropping %d empty rows and %d empty columns",
            A.m - kept_rows.size,
            A.n - kept_cols.size,
        )
    mat = A.to_scipy("csr")[kept_rows][:, kept_cols]
    norms = np.sqrt(np.asarray(mat.multiply(mat).sum(axis=1)).ravel())
    mat = sp.diags(1.0 / norms) @ mat
    return SparseMatrix(mat), labels[kept_rows], kept_rows, kept_cols
