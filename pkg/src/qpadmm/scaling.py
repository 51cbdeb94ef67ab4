"""Modified Ruiz equilibration of QP data and the inverse variable maps.

The scaled problem has data

    P̄ = c D P D,  q̄ = c D q,  Ā = E A D,  l̄ = E l,  ū = E u

and variables x̄ = D⁻¹ x, z̄ = E z, ȳ = c E⁻¹ y.
"""
from dataclasses import dataclass

import numpy as np

from .problem import QpProblem
from .sparse import (RowIndexCache, row_inf_norms, scale_columns_inplace, scale_rows_inplace,
                     upper_triangle)


@dataclass
class ScalingData:
    d: np.ndarray
    e: np.ndarray
    c: float
    passes: int = 0
    final_delta_deviation: float = 0.0
    converged: bool = True

    def __post_init__(self):
        self.d = np.asarray(self.d)
        self.e = np.asarray(self.e)
        if not (np.all(self.d > 0) and np.all(self.e > 0) and self.c > 0):
            raise ValueError("scaling factors must be strictly positive")
        if not (np.all(np.isfinite(self.d)) and np.all(np.isfinite(self.e)) and np.isfinite(self.c)):
            raise ValueError("scaling factors must be finite")
        self.d_inv = 1 / self.d
        self.e_inv = 1 / self.e
        self.c_inv = 1 / self.c

    @classmethod
    def identity(cls, n, m, dtype=np.float64):
        return cls(np.ones(n, dtype=dtype), np.ones(m, dtype=dtype), 1.0, passes=0)


@dataclass
class ScaledProblem:
    problem: QpProblem
    scaling: ScalingData


def _scaled_problem(p_full, q, a, a_t, l, u, scaling):
    prob = QpProblem(upper_triangle(p_full), q, a, l, u)
    # the full scaled P and Ā' are already in hand; seed the cached views
    prob.__dict__["p_full"] = p_full
    prob.__dict__["a_t"] = a_t
    return ScaledProblem(prob, scaling)


def no_scaling(p):
    """Identity scaling: copies of the data with D = E = I, c = 1."""
    scaling = ScalingData.identity(p.n, p.m, dtype=p.dtype)
    return _scaled_problem(p.p_full.copy(), p.q.copy(), p.a.copy(), p.a_t.copy(), p.l.copy(), p.u.copy(),
                           scaling)


def ruiz_equilibrate(p, eps_equil=1e-3, max_passes=10):
    """Scale ``p`` so the columns of [[P̄, Ā'], [Ā, 0]] have unit inf-norm.

    Each pass rescales the current data in place by δ = 1/sqrt(column
    norms), then rescales the cost by γ. Stops when ‖1 - δ‖∞ <= eps_equil
    or after ``max_passes`` passes.
    """
    if eps_equil <= 0:
        raise ValueError("eps_equil must be positive")
    if max_passes < 1:
        raise ValueError("max_passes must be at least 1")
    n, m = p.n, p.m
    dtype = p.dtype
    P = p.p_full.copy()
    A = p.a.copy()
    At = p.a_t.copy()
    q = p.q.copy()
    if not (np.all(np.isfinite(P.values)) and np.all(np.isfinite(A.values)) and np.all(np.isfinite(q))):
        raise ValueError("equilibration needs finite data")
    p_rows, a_rows, at_rows = RowIndexCache(P), RowIndexCache(A), RowIndexCache(At)

    d = np.ones(n, dtype=dtype)
    e = np.ones(m, dtype=dtype)
    c = dtype.type(1)
    deviation = np.inf
    passes = 0
    while deviation > eps_equil and passes < max_passes:
        # column norms of the stacked matrix: P̄ is symmetric and Ā's
        # columns are the rows of Ā'
        norms_x = np.maximum(row_inf_norms(P), row_inf_norms(At))
        norms_z = row_inf_norms(A)
        norms = np.concatenate([norms_x, norms_z])
        delta = np.ones_like(norms)
        nz = norms > 0
        delta[nz] = 1 / np.sqrt(norms[nz])
        deviation = float(np.max(np.abs(1 - delta))) if delta.size else 0.0
        dd, de = delta[:n], delta[n:]
        d *= dd
        e *= de
        # one factor d_i·d_j per entry keeps P̄ bitwise symmetric
        P.values *= dd[p_rows.row_of_entry] * dd[P.col_indices]
        # same multiplication order on Ā and Ā' keeps them exact transposes
        scale_rows_inplace(A, a_rows, de)
        scale_columns_inplace(A, dd)
        scale_columns_inplace(At, de)
        scale_rows_inplace(At, at_rows, dd)
        q *= dd

        mean_p = float(np.mean(row_inf_norms(P))) if n else 0.0
        q_inf = float(np.max(np.abs(q))) if n else 0.0
        bound = max(mean_p, q_inf)
        gamma = dtype.type(1 / bound if bound > 0 else 1)
        P.values *= gamma
        q *= gamma
        c *= gamma
        passes += 1

    scaling = ScalingData(d, e, float(c), passes=passes, final_delta_deviation=deviation,
                          converged=deviation <= eps_equil)
    l = p.l * e
    u = p.u * e
    return _scaled_problem(P, q, A, At, l, u, scaling)


def _check_len(v, k, name):
    v = np.asarray(v)
    if v.shape != (k,):
        raise ValueError(f"{name} has shape {v.shape}, expected ({k},)")
    return v


def scale_solution(s, x, z, y):
    """Map original-space iterates into the scaled space."""
    sc = s.scaling
    x = _check_len(x, sc.d.size, "x")
    z = _check_len(z, sc.e.size, "z")
    y = _check_len(y, sc.e.size, "y")
    return sc.d_inv * x, sc.e * z, sc.c * (sc.e_inv * y)


def unscale_solution(s, x_bar, z_bar, y_bar):
    """x = D x̄, z = E⁻¹ z̄, y = c⁻¹ E ȳ."""
    sc = s.scaling
    x_bar = _check_len(x_bar, sc.d.size, "x")
    z_bar = _check_len(z_bar, sc.e.size, "z")
    y_bar = _check_len(y_bar, sc.e.size, "y")
    return sc.d * x_bar, sc.e_inv * z_bar, sc.c_inv * (sc.e * y_bar)


def unscale_residuals(s, r_prim_bar, r_dual_bar):
    """r_prim = E⁻¹ r̄_prim,  r_dual = c⁻¹ D⁻¹ r̄_dual."""
    sc = s.scaling
    r_prim_bar = _check_len(r_prim_bar, sc.e.size, "r_prim")
    r_dual_bar = _check_len(r_dual_bar, sc.d.size, "r_dual")
    return sc.e_inv * r_prim_bar, sc.c_inv * (sc.d_inv * r_dual_bar)
