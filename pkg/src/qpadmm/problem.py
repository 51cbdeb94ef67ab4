"""The quadratic program data container."""
from functools import cached_property

import numpy as np
import scipy.sparse as sps

from .precision import DEFAULT_DTYPE
from .sparse import CsrMatrix, spmv, symmetrize_upper, transpose_csr, upper_triangle


class ProblemError(ValueError):
    """Problem data are inconsistent or not finite where they must be."""


def _to_csr(m, dtype):
    if isinstance(m, CsrMatrix):
        return m if m.dtype == dtype else m.astype(dtype)
    if sps.issparse(m):
        return CsrMatrix.from_scipy(m, dtype=dtype)
    return CsrMatrix.from_dense(np.atleast_2d(np.asarray(m, dtype=float)), dtype=dtype)


class QpProblem:
    """minimize 1/2 x'Px + q'x  subject to  l <= Ax <= u.

    ``p_upper`` holds only the upper triangle of P. P is assumed positive
    semidefinite; this is not checked.
    """

    def __init__(self, p_upper, q, a, l, u):
        self.p_upper = p_upper
        self.a = a
        dtype = p_upper.dtype
        self.q = np.asarray(q, dtype=dtype)
        self.l = np.asarray(l, dtype=dtype)
        self.u = np.asarray(u, dtype=dtype)
        self._validate()

    def _validate(self):
        n, m = self.n, self.m
        if self.p_upper.shape != (n, n):
            raise ProblemError("P must be square")
        if self.a.cols != n:
            raise ProblemError(f"A has {self.a.cols} columns, expected {n}")
        if self.a.dtype != self.p_upper.dtype:
            raise ProblemError("P and A must share a dtype")
        if self.q.shape != (n,):
            raise ProblemError(f"q has shape {self.q.shape}, expected ({n},)")
        if self.l.shape != (m,) or self.u.shape != (m,):
            raise ProblemError(f"l and u must have length {m}")
        rows = np.repeat(np.arange(n), np.diff(self.p_upper.row_pointer))
        if np.any(self.p_upper.col_indices < rows):
            raise ProblemError("P must be given as its upper triangle")
        if not (np.all(np.isfinite(self.p_upper.values)) and np.all(np.isfinite(self.a.values))):
            raise ProblemError("P and A must be finite")
        if not np.all(np.isfinite(self.q)):
            raise ProblemError("q must be finite")
        if np.any(np.isnan(self.l)) or np.any(np.isnan(self.u)):
            raise ProblemError("l and u must not contain NaN")
        if np.any(self.l == np.inf) or np.any(self.u == -np.inf):
            raise ProblemError("l may not be +inf and u may not be -inf")
        if np.any(self.l > self.u):
            raise ProblemError("l <= u violated")

    @classmethod
    def from_data(cls, P, q, A, l, u, dtype=None):
        """Build from dense arrays or scipy matrices; P may be full or upper."""
        dtype = np.dtype(dtype or DEFAULT_DTYPE)
        q = np.atleast_1d(np.asarray(q, dtype=float))
        n = q.size
        if P is None:
            p = CsrMatrix.empty(n, n, dtype=dtype)
        else:
            p = upper_triangle(_to_csr(P, dtype))
        l = np.atleast_1d(np.asarray(l, dtype=float))
        if A is None or (not sps.issparse(A) and np.asarray(A).size == 0):
            a = CsrMatrix.empty(0, n, dtype=dtype)
        else:
            a = _to_csr(A, dtype)
        return cls(p, q, a, l, u)

    @property
    def n(self):
        return self.p_upper.rows

    @property
    def m(self):
        return self.a.rows

    @property
    def dtype(self):
        return self.p_upper.dtype

    @property
    def nnz(self):
        """Problem size N = nnz(P) + nnz(A), with P stored as its upper triangle."""
        return self.p_upper.nnz + self.a.nnz

    @cached_property
    def p_full(self):
        return symmetrize_upper(self.p_upper)

    @cached_property
    def a_t(self):
        return transpose_csr(self.a)

    def astype(self, dtype):
        dtype = np.dtype(dtype)
        return QpProblem(self.p_upper.astype(dtype), self.q, self.a.astype(dtype), self.l, self.u)

    def objective(self, x):
        x = np.asarray(x, dtype=np.float64)
        px = spmv(self.p_full.astype(np.float64), x)
        return float(0.5 * x @ px + self.q.astype(np.float64) @ x)

    def __repr__(self):
        return f"QpProblem(n={self.n}, m={self.m}, N={self.nnz}, dtype={self.dtype})"
