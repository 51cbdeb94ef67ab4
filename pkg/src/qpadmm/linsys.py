"""Matrix-free reduced KKT operator, Jacobi preconditioner and PCG."""
import math
from dataclasses import dataclass

import numpy as np

from .sparse import diag_ata, extract_diagonal, spmv, transpose_csr


class OperatorNotPositiveDefinite(ArithmeticError):
    """PCG met a direction with p'Kp <= 0."""


def _inf_norm(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


class ReducedKktOperator:
    """K = P̄ + σI + ρ̄ Ā'Ā, applied without forming it.

    diag(P̄) and diag(Ā'Ā) are computed once so that a change of ρ̄ only
    touches the preconditioner diagonal.
    """

    def __init__(self, p_full, a, a_t, sigma, rho_bar, verify=True):
        n = p_full.rows
        if p_full.shape != (n, n) or a.cols != n or a_t.shape != (n, a.rows):
            raise ValueError("inconsistent operator dimensions")
        if sigma <= 0 or rho_bar <= 0:
            raise ValueError("sigma and rho_bar must be positive")
        if verify:
            t = transpose_csr(a)
            if not (np.array_equal(t.row_pointer, a_t.row_pointer)
                    and np.array_equal(t.col_indices, a_t.col_indices)
                    and np.array_equal(t.values, a_t.values)):
                raise ValueError("a_t is not the transpose of a")
        self.p_full = p_full
        self.a = a
        self.a_t = a_t
        self.sigma = sigma
        self.rho_bar = rho_bar
        self.n = n
        self.dtype = p_full.dtype
        self.scratch_z = np.zeros(a.rows, dtype=self.dtype)
        self.diag_p = extract_diagonal(p_full)
        self.diag_ata = diag_ata(a)

    def apply(self, x):
        if x.shape != (self.n,):
            raise ValueError(f"operator expects a vector of length {self.n}")
        z = self.scratch_z
        spmv(self.a, x, out=z)
        z *= self.rho_bar
        r = spmv(self.p_full, x)
        r += self.sigma * x
        r += spmv(self.a_t, z)
        return r

    __call__ = apply


class JacobiPreconditioner:
    def __init__(self, diag_m):
        self.diag_m = diag_m
        self.diag_m_inv = 1 / diag_m

    def solve(self, r):
        """M⁻¹ r."""
        return self.diag_m_inv * r


def _jacobi_diagonal(op):
    return op.diag_p + op.sigma + op.rho_bar * op.diag_ata


def build_preconditioner(op):
    return JacobiPreconditioner(_jacobi_diagonal(op))


def update_rho(op, precond, new_rho):
    """Set ρ̄ and refresh the preconditioner from the cached diagonals (O(n))."""
    if not new_rho > 0:
        raise ValueError("rho must be positive")
    op.rho_bar = new_rho
    precond.diag_m = _jacobi_diagonal(op)
    precond.diag_m_inv = 1 / precond.diag_m


def default_pcg_max_iter(n):
    """20·sqrt(n), kept within [20, max(n, 20)]."""
    return int(min(max(20 * math.sqrt(n), 20), max(n, 20)))


@dataclass
class PcgResult:
    solution: np.ndarray
    iterations: int
    final_residual_norm: float
    converged: bool


def pcg_solve(op, precond, b, warm_start, eps, max_iter, callback=None, relative=True, min_iter=0):
    """Preconditioned CG on K x = b, started from ``warm_start``.

    Terminates when ‖r‖∞ <= eps·‖b‖∞ (or ‖r‖∞ <= eps with
    ``relative=False``), where r = Kx - b is updated by recurrence, and
    at least ``min_iter`` iterations were taken. On
    hitting ``max_iter`` the iterate with the smallest residual is
    returned with ``converged=False``. ``callback(k, x, r, p)`` is called
    for every iterate, including the initial one.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    b = np.asarray(b)
    if b.shape != (op.n,) or np.shape(warm_start) != (op.n,):
        raise ValueError("dimension mismatch in pcg_solve")
    b_norm = _inf_norm(b)
    if b_norm == 0:
        return PcgResult(np.zeros(op.n, dtype=op.dtype), 0, 0.0, True)
    x = np.array(warm_start, dtype=op.dtype)
    if not np.all(np.isfinite(x)):
        raise ValueError("warm start must be finite")

    r = op.apply(x) - b
    y = precond.solve(r)
    p = -y
    ry = float(r @ y)
    r_norm = _inf_norm(r)
    best_x, best_norm = x, r_norm
    k = 0
    if callback is not None:
        callback(k, x, r, p)
    tol = eps * b_norm if relative else eps
    while r_norm > tol or k < min_iter:
        if k >= max_iter:
            return PcgResult(best_x, k, best_norm, False)
        if ry == 0:
            # zero residual in the M⁻¹-norm
            break
        kp = op.apply(p)
        pkp = float(p @ kp)
        if not pkp > 0:
            raise OperatorNotPositiveDefinite(f"p'Kp = {pkp} at PCG iteration {k}")
        alpha = ry / pkp
        x = x + alpha * p
        r += alpha * kp
        y = precond.solve(r)
        ry_next = float(r @ y)
        beta = ry_next / ry
        p = -y + beta * p
        ry = ry_next
        k += 1
        r_norm = _inf_norm(r)
        if r_norm < best_norm:
            best_x, best_norm = x, r_norm
        if callback is not None:
            callback(k, x, r, p)
    return PcgResult(x, k, r_norm, True)


def adaptive_eps(r_prim_scaled_inf, r_dual_scaled_inf, lam=0.15, eps_min=1e-7):
    """max(λ·sqrt(‖r̄_prim‖∞·‖r̄_dual‖∞), eps_min)."""
    r_prim = float(r_prim_scaled_inf)
    r_dual = float(r_dual_scaled_inf)
    if r_prim < 0 or r_dual < 0:
        raise ValueError("residual norms must be nonnegative")
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    return max(lam * math.sqrt(r_prim * r_dual), eps_min)
