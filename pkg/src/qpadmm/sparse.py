"""Sparse matrix formats and the kernels built on them.

CSR is the working format. COO and CSC exist for ingestion and
round-trips. All index arrays are zero-based ``int64``; values keep the
dtype they were constructed with.
"""
import numpy as np
import scipy.sparse as sps

from .precision import DEFAULT_DTYPE

INDEX_DTYPE = np.int64


class FormatError(ValueError):
    """Sparse data violates the invariants of its storage format."""


def _as_values(values, dtype):
    if dtype is None:
        dtype = values.dtype if isinstance(values, np.ndarray) and values.dtype.kind == "f" else DEFAULT_DTYPE
    return np.ascontiguousarray(values, dtype=dtype)


def _as_index(idx):
    idx = np.asarray(idx)
    if idx.size and not np.issubdtype(idx.dtype, np.integer):
        if not np.all(np.equal(np.mod(idx, 1), 0)):
            raise FormatError("index arrays must be integral")
    return np.ascontiguousarray(idx, dtype=INDEX_DTYPE)


def _check_sorted_unique(rows, cols, row_idx, col_idx, what):
    if row_idx.size == 0:
        return
    if row_idx.min() < 0 or row_idx.max() >= rows or col_idx.min() < 0 or col_idx.max() >= cols:
        raise FormatError(f"{what}: index out of bounds")
    keys = row_idx * cols + col_idx
    steps = np.diff(keys)
    if np.any(steps == 0):
        raise FormatError(f"{what}: duplicate entries")
    if np.any(steps < 0):
        raise FormatError(f"{what}: entries not sorted by row, then column")


def _check_pointer(ptr, length, nnz, what):
    if ptr.shape != (length + 1,):
        raise FormatError(f"{what}: pointer must have length {length + 1}")
    if ptr[0] != 0 or ptr[-1] != nnz:
        raise FormatError(f"{what}: pointer must start at 0 and end at nnz={nnz}")
    if np.any(np.diff(ptr) < 0):
        raise FormatError(f"{what}: pointer must be nondecreasing")


class CooMatrix:
    """Coordinate format: three arrays of length nnz, sorted by row then column."""

    def __init__(self, rows, cols, values, row_indices, col_indices, dtype=None):
        self.rows = int(rows)
        self.cols = int(cols)
        self.values = _as_values(values, dtype)
        self.row_indices = _as_index(row_indices)
        self.col_indices = _as_index(col_indices)
        if not (self.values.shape == self.row_indices.shape == self.col_indices.shape) or self.values.ndim != 1:
            raise FormatError("COO arrays must be one-dimensional with equal length")
        _check_sorted_unique(self.rows, self.cols, self.row_indices, self.col_indices, "COO")

    @property
    def nnz(self):
        return self.values.size

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __repr__(self):
        return f"CooMatrix(shape={self.shape}, nnz={self.nnz})"


class CscMatrix:
    """Compressed sparse column format."""

    def __init__(self, rows, cols, values, row_indices, col_pointer, dtype=None):
        self.rows = int(rows)
        self.cols = int(cols)
        self.values = _as_values(values, dtype)
        self.row_indices = _as_index(row_indices)
        self.col_pointer = _as_index(col_pointer)
        if self.values.shape != self.row_indices.shape or self.values.ndim != 1:
            raise FormatError("CSC value and index arrays must have equal length")
        _check_pointer(self.col_pointer, self.cols, self.nnz, "CSC")
        col_of_entry = np.repeat(np.arange(self.cols, dtype=INDEX_DTYPE), np.diff(self.col_pointer))
        # column-major keys: strictly increasing rows within each column
        _check_sorted_unique(self.cols, self.rows, col_of_entry, self.row_indices, "CSC")

    @property
    def nnz(self):
        return self.values.size

    @property
    def shape(self):
        return (self.rows, self.cols)

    def __repr__(self):
        return f"CscMatrix(shape={self.shape}, nnz={self.nnz})"


class CsrMatrix:
    """Compressed sparse row format.

    ``values`` is shared with a cached scipy view used by :func:`spmv`, so
    the in-place scaling kernels are visible to every later product.
    """

    def __init__(self, rows, cols, values, row_pointer, col_indices, dtype=None, check=True):
        self.rows = int(rows)
        self.cols = int(cols)
        values = _as_values(values, dtype)
        self.row_pointer = _as_index(row_pointer)
        self.col_indices = _as_index(col_indices)
        if check:
            if values.shape != self.col_indices.shape or values.ndim != 1:
                raise FormatError("CSR value and index arrays must have equal length")
            _check_pointer(self.row_pointer, self.rows, values.size, "CSR")
            row_of_entry = np.repeat(np.arange(self.rows, dtype=INDEX_DTYPE), np.diff(self.row_pointer))
            _check_sorted_unique(self.rows, self.cols, row_of_entry, self.col_indices, "CSR")
        self._sp = sps.csr_matrix(
            (values, self.col_indices, self.row_pointer), shape=(self.rows, self.cols), copy=False
        )
        self.values = self._sp.data
        if not np.shares_memory(self.values, values) and values.size:
            raise RuntimeError("scipy view did not share the value array")

    @property
    def nnz(self):
        return self.values.size

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def dtype(self):
        return self.values.dtype

    def copy(self):
        return CsrMatrix(self.rows, self.cols, self.values.copy(), self.row_pointer, self.col_indices, check=False)

    def astype(self, dtype):
        return CsrMatrix(self.rows, self.cols, self.values.astype(dtype), self.row_pointer, self.col_indices,
                         check=False)

    def to_dense(self):
        out = np.zeros((self.rows, self.cols), dtype=self.values.dtype)
        row_of_entry = np.repeat(np.arange(self.rows), np.diff(self.row_pointer))
        out[row_of_entry, self.col_indices] = self.values
        return out

    def to_scipy(self):
        return self._sp

    @classmethod
    def from_dense(cls, a, dtype=None):
        a = np.atleast_2d(np.asarray(a))
        rows, cols = np.nonzero(a)
        return coo_to_csr(CooMatrix(a.shape[0], a.shape[1], a[rows, cols], rows, cols, dtype=dtype))

    @classmethod
    def from_scipy(cls, m, dtype=None):
        m = sps.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.data, m.indptr, m.indices, dtype=dtype)

    @classmethod
    def empty(cls, rows, cols, dtype=None):
        return cls(rows, cols, np.zeros(0, dtype=dtype or DEFAULT_DTYPE), np.zeros(rows + 1, dtype=INDEX_DTYPE),
                   np.zeros(0, dtype=INDEX_DTYPE))

    @classmethod
    def identity(cls, n, dtype=None):
        idx = np.arange(n)
        return cls(n, n, np.ones(n, dtype=dtype or DEFAULT_DTYPE), np.arange(n + 1), idx)

    def __repr__(self):
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz}, dtype={self.dtype})"


class RowIndexCache:
    """Row index of every stored value, expanded once from ``row_pointer``."""

    def __init__(self, m):
        self.row_pointer = m.row_pointer
        self.row_of_entry = np.repeat(np.arange(m.rows, dtype=INDEX_DTYPE), np.diff(m.row_pointer))

    def consistent_with(self, m):
        if self.row_pointer is m.row_pointer:
            return True
        return np.array_equal(self.row_pointer, m.row_pointer)


def coo_to_csr(m):
    counts = np.bincount(m.row_indices, minlength=m.rows)
    row_pointer = np.zeros(m.rows + 1, dtype=INDEX_DTYPE)
    np.cumsum(counts, out=row_pointer[1:])
    return CsrMatrix(m.rows, m.cols, m.values.copy(), row_pointer, m.col_indices.copy(), check=False)


def csr_to_coo(m):
    row_indices = np.repeat(np.arange(m.rows, dtype=INDEX_DTYPE), np.diff(m.row_pointer))
    return CooMatrix(m.rows, m.cols, m.values.copy(), row_indices, m.col_indices.copy())


def csc_as_csr_transpose(m):
    """Reinterpret CSC arrays of an r x c matrix as CSR of its c x r transpose."""
    return CsrMatrix(m.cols, m.rows, m.values.copy(), m.col_pointer.copy(), m.row_indices.copy(), check=False)


def transpose_csr(m):
    counts = np.bincount(m.col_indices, minlength=m.cols)
    row_pointer = np.zeros(m.cols + 1, dtype=INDEX_DTYPE)
    np.cumsum(counts, out=row_pointer[1:])
    # stable sort keeps source rows ascending inside each new row
    order = np.argsort(m.col_indices, kind="stable")
    row_of_entry = np.repeat(np.arange(m.rows, dtype=INDEX_DTYPE), np.diff(m.row_pointer))
    return CsrMatrix(m.cols, m.rows, m.values[order], row_pointer, row_of_entry[order], check=False)


def csr_to_csc(m):
    t = transpose_csr(m)
    return CscMatrix(m.rows, m.cols, t.values, t.col_indices, t.row_pointer)


def symmetrize_upper(upper):
    """Expand an upper-triangular CSR matrix to the full symmetric matrix."""
    if upper.rows != upper.cols:
        raise FormatError("symmetrize_upper needs a square matrix")
    rows = np.repeat(np.arange(upper.rows, dtype=INDEX_DTYPE), np.diff(upper.row_pointer))
    cols = upper.col_indices
    if np.any(cols < rows):
        raise FormatError("entry below the diagonal in upper-triangular input")
    off = cols != rows
    all_rows = np.concatenate([rows, cols[off]])
    all_cols = np.concatenate([cols, rows[off]])
    all_vals = np.concatenate([upper.values, upper.values[off]])
    order = np.lexsort((all_cols, all_rows))
    return coo_to_csr(CooMatrix(upper.rows, upper.cols, all_vals[order], all_rows[order], all_cols[order],
                                dtype=upper.dtype))


def upper_triangle(m):
    """Keep entries on or above the diagonal."""
    rows = np.repeat(np.arange(m.rows, dtype=INDEX_DTYPE), np.diff(m.row_pointer))
    keep = m.col_indices >= rows
    return coo_to_csr(CooMatrix(m.rows, m.cols, m.values[keep], rows[keep], m.col_indices[keep], dtype=m.dtype))


def spmv(m, x, out=None):
    x = np.asarray(x)
    if x.shape != (m.cols,):
        raise ValueError(f"spmv: vector of length {x.shape} does not match {m.cols} columns")
    if x.dtype != m.dtype:
        x = x.astype(m.dtype)
    y = m._sp @ x
    if out is not None:
        out[...] = y
        return out
    return y


def segment_reduce(values, pointer, op, identity):
    """Reduce each segment ``values[pointer[i]:pointer[i+1]]`` with a numpy ufunc.

    Empty segments yield ``identity``.
    """
    nseg = pointer.size - 1
    out = np.full(nseg, identity, dtype=values.dtype)
    starts = pointer[:-1]
    nonempty = pointer[1:] > starts
    if np.any(nonempty):
        # empty segments have zero width, so consecutive nonempty starts
        # still bound each nonempty segment exactly
        out[nonempty] = op.reduceat(values, starts[nonempty])
    return out


def row_inf_norms(m):
    return segment_reduce(np.abs(m.values), m.row_pointer, np.maximum, 0)


def row_sums(m):
    return segment_reduce(m.values, m.row_pointer, np.add, 0)


def row_sq_norms(m):
    return segment_reduce(m.values * m.values, m.row_pointer, np.add, 0)


def scale_columns_inplace(m, d):
    """M <- M diag(d)."""
    d = np.asarray(d)
    if d.shape != (m.cols,):
        raise ValueError(f"column scaling needs {m.cols} factors, got {d.shape}")
    m.values *= d[m.col_indices].astype(m.dtype, copy=False)


def scale_rows_inplace(m, cache, d):
    """M <- diag(d) M, using the precomputed row index of every value."""
    d = np.asarray(d)
    if d.shape != (m.rows,):
        raise ValueError(f"row scaling needs {m.rows} factors, got {d.shape}")
    if not cache.consistent_with(m):
        raise ValueError("row index cache is stale for this matrix")
    m.values *= d[cache.row_of_entry].astype(m.dtype, copy=False)


def extract_diagonal(m):
    if m.rows != m.cols:
        raise ValueError("extract_diagonal needs a square matrix")
    out = np.zeros(m.rows, dtype=m.dtype)
    rows = np.repeat(np.arange(m.rows), np.diff(m.row_pointer))
    on = rows == m.col_indices
    out[rows[on]] = m.values[on]
    return out


def diag_ata(a):
    """Squared Euclidean norm of every column of ``a`` (the diagonal of A'A)."""
    v = a.values.astype(np.float64)
    return np.bincount(a.col_indices, weights=v * v, minlength=a.cols).astype(a.dtype)
