"""ADMM for convex QPs with a scalar penalty and inexact PCG inner solves."""
import dataclasses
import enum
import json
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .linsys import (ReducedKktOperator, adaptive_eps, build_preconditioner, default_pcg_max_iter,
                     pcg_solve, update_rho)
from .scaling import no_scaling, ruiz_equilibrate, scale_solution, unscale_residuals, unscale_solution
from .sparse import spmv

RHO_MIN = 1e-6
RHO_MAX = 1e6
RHO_NORM_FLOOR = 1e-10
# sqrt of machine epsilon; relative residuals below this count as zero
RHO_NOISE_FLOOR = math.sqrt(np.finfo(np.float64).eps)


class SolverDiverged(ArithmeticError):
    """The iterates overflowed; no status describes the outcome."""


class Status(str, enum.Enum):
    SOLVED = "solved"
    PRIMAL_INFEASIBLE = "primal_infeasible"
    DUAL_INFEASIBLE = "dual_infeasible"
    MAX_ITER_REACHED = "max_iter_reached"


@dataclass
class Settings:
    alpha: float = 1.6
    sigma: float = 1e-6
    rho_bar_init: float = 0.1
    eps_abs: float = 1e-3
    eps_rel: float = 1e-3
    eps_pinf: float = 1e-4
    eps_dinf: float = 1e-4
    max_admm_iter: int = 50_000
    check_interval: int = 5
    rho_update_interval: int = 10
    lambda_pcg: float = 0.15
    eps_pcg_min: float = 1e-7
    pcg_max_iter: Optional[int] = None
    # compare the PCG residual with eps itself rather than eps·‖b‖∞
    pcg_absolute_guard: bool = True
    # a warm start that already passes the guard would freeze x̃
    pcg_min_iter: int = 1
    scaling_enabled: bool = True
    eps_equil: float = 1e-3
    equil_max_passes: int = 10
    precision_note: str = ""

    def __post_init__(self):
        if not 0 < self.alpha < 2:
            raise ValueError("alpha must lie in (0, 2)")
        if not (self.sigma > 0 and self.rho_bar_init > 0):
            raise ValueError("sigma and rho_bar_init must be positive")
        if min(self.eps_abs, self.eps_rel) < 0 or min(self.eps_pinf, self.eps_dinf) <= 0:
            raise ValueError("tolerances must be nonnegative (infeasibility tolerances positive)")
        if self.eps_abs == 0 and self.eps_rel == 0:
            raise ValueError("eps_abs and eps_rel cannot both be zero")
        if min(self.max_admm_iter, self.check_interval, self.rho_update_interval, self.equil_max_passes) < 1:
            raise ValueError("iteration counts and intervals must be positive")
        if not 0 < self.lambda_pcg < 1:
            raise ValueError("lambda_pcg must lie in (0, 1)")
        if not self.eps_pcg_min > 0 or not self.eps_equil > 0:
            raise ValueError("eps_pcg_min and eps_equil must be positive")

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown settings: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass
class SolverState:
    """ADMM iterates on the scaled problem."""
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    x_tilde: np.ndarray
    z_tilde: np.ndarray
    delta_x: np.ndarray
    delta_y: np.ndarray
    rho_bar: float
    iter: int = 0

    @classmethod
    def start(cls, x, z, y, rho_bar):
        return cls(x=x, z=z, y=y, x_tilde=x.copy(), z_tilde=np.zeros_like(z), delta_x=np.zeros_like(x),
                   delta_y=np.zeros_like(y), rho_bar=rho_bar)

    @property
    def pcg_warm(self):
        return self.x_tilde


class IterateNorms(NamedTuple):
    """Infinity norms of Ax, z, Px, A'y and q."""
    ax: float
    z: float
    px: float
    aty: float
    q: float


@dataclass
class SolveOutcome:
    status: Status
    x: Optional[np.ndarray]
    y: Optional[np.ndarray]
    z: Optional[np.ndarray]
    certificate: Optional[np.ndarray]
    objective: float
    iterations: int
    pcg_iterations_total: int
    r_prim_inf: float
    r_dual_inf: float
    eps_prim: float
    eps_dual: float
    runtime: float
    rho_bar: float
    rho_updates: list = field(default_factory=list)
    scaling_passes: int = 0
    scaling_deviation: float = 0.0

    @property
    def residuals(self):
        return self.r_prim_inf, self.r_dual_inf

    def record(self):
        """Flat summary suitable for JSON output."""
        return {
            "status": self.status.value,
            "iterations": self.iterations,
            "pcg_iterations_total": self.pcg_iterations_total,
            "runtime": self.runtime,
            "r_prim_inf": self.r_prim_inf,
            "r_dual_inf": self.r_dual_inf,
            "objective": self.objective,
            "rho_bar": self.rho_bar,
            "rho_rule": "rho*sqrt(rel_prim/rel_dual)",
            "scaling_passes": self.scaling_passes,
            "scaling_deviation": self.scaling_deviation,
        }


def _inf(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


def project_box(v, l, u):
    return np.minimum(np.maximum(v, l), u)


def _products(prob, x, y):
    return spmv(prob.a, x), spmv(prob.p_full, x), spmv(prob.a_t, y)


def compute_residuals(prob, state):
    """r_prim = Ax - z and r_dual = Px + q + A'y for the given data."""
    ax, px, aty = _products(prob, state.x, state.y)
    return ax - state.z, px + prob.q + aty


def tolerances(norms, s):
    eps_prim = s.eps_abs + s.eps_rel * max(norms.ax, norms.z)
    eps_dual = s.eps_abs + s.eps_rel * max(norms.px, norms.aty, norms.q)
    return eps_prim, eps_dual


def check_optimal(r_prim_inf, r_dual_inf, iterate_norms, s):
    eps_prim, eps_dual = tolerances(iterate_norms, s)
    return r_prim_inf <= eps_prim and r_dual_inf <= eps_dual


def _f64(m):
    return m if m.dtype == np.float64 else m.astype(np.float64)


def _bound_product(bound, mult):
    # 0·∞ counts as 0; a nonzero multiplier against an infinite bound is +∞
    out = np.zeros_like(mult, dtype=np.float64)
    nz = mult != 0
    out[nz] = bound[nz].astype(np.float64) * mult[nz]
    return out


def check_primal_infeasible(delta_y, p, s):
    """Approximate certificate test: A'δy ≈ 0 and l'δy₋ + u'δy₊ < 0.

    ``delta_y`` lives in the original space and is normalized to unit
    inf-norm first. The strict sign is approximated by < -eps_pinf: a
    zero support value is no certificate.
    """
    delta_y = np.asarray(delta_y, dtype=np.float64)
    norm = _inf(delta_y)
    if norm == 0:
        return False
    dy = delta_y / norm
    support = float(np.sum(_bound_product(p.u, np.maximum(dy, 0)) + _bound_product(p.l, np.minimum(dy, 0))))
    if not support < -s.eps_pinf:
        return False
    aty = spmv(_f64(p.a_t), dy)
    return _inf(aty) <= s.eps_pinf


def check_dual_infeasible(delta_x, p, s):
    """Approximate certificate test: Pδx ≈ 0, q'δx < 0 and Aδx in the recession cone of [l, u].

    As in the primal test, q'δx < 0 becomes q'δx < -eps_dinf on the
    normalized vector, so a zero-cost recession direction is rejected.
    """
    delta_x = np.asarray(delta_x, dtype=np.float64)
    norm = _inf(delta_x)
    if norm == 0:
        return False
    dx = delta_x / norm
    eps = s.eps_dinf
    if not float(p.q.astype(np.float64) @ dx) < -eps:
        return False
    if _inf(spmv(_f64(p.p_full), dx)) > eps:
        return False
    adx = spmv(_f64(p.a), dx)
    l_fin = np.isfinite(p.l)
    u_fin = np.isfinite(p.u)
    both = l_fin & u_fin
    if np.any(np.abs(adx[both]) > eps):
        return False
    # only an upper bound: A δx must not increase; only a lower bound: must not decrease;
    # free rows impose nothing
    if np.any(adx[u_fin & ~l_fin] > eps):
        return False
    if np.any(adx[l_fin & ~u_fin] < -eps):
        return False
    return True


def adapt_rho(rho_bar, r_prim_scaled_inf, r_dual_scaled_inf, norms, noise=RHO_NOISE_FLOOR):
    """ρ̄·sqrt(rel_prim / rel_dual), clipped to [1e-6, 1e6].

    Relative residuals divide by the largest term of each residual,
    computed on the scaled data. ρ̄ is kept when either relative residual
    is at or below ``noise``: z̄ and Āx̄ are updated by separate recursions
    whose rounding drift grows with the iteration count, so a residual at
    that level says nothing about the primal/dual balance. Letting it
    through sends ρ̄ to the clip, where inexact PCG solves can diverge.
    """
    rel_prim = r_prim_scaled_inf / max(norms.ax, norms.z, RHO_NORM_FLOOR)
    rel_dual = r_dual_scaled_inf / max(norms.px, norms.aty, norms.q, RHO_NORM_FLOOR)
    if rel_prim <= noise or rel_dual <= noise:
        return rho_bar
    return float(min(max(rho_bar * math.sqrt(rel_prim / rel_dual), RHO_MIN), RHO_MAX))


def certificate_vectors(state, scaling):
    """Consecutive-iterate differences δx, δy mapped to the original space."""
    return scaling.d * state.delta_x, scaling.c_inv * (scaling.e * state.delta_y)


def admm_step(state, op, precond, prob, s, eps_pcg, pcg_max_iter):
    """One ADMM iteration on the scaled data; returns the PCG iteration count."""
    rho = state.rho_bar
    alpha = s.alpha
    x, z, y = state.x, state.z, state.y
    rhs = s.sigma * x - prob.q + spmv(prob.a_t, rho * z - y)
    if not np.all(np.isfinite(rhs)):
        raise SolverDiverged(f"iterates are no longer finite at iteration {state.iter + 1}")
    res = pcg_solve(op, precond, rhs, state.x_tilde, eps_pcg, pcg_max_iter,
                    relative=not s.pcg_absolute_guard, min_iter=s.pcg_min_iter)
    x_tilde = res.solution
    z_tilde = spmv(prob.a, x_tilde)

    x_new = alpha * x_tilde + (1 - alpha) * x
    w = alpha * z_tilde + (1 - alpha) * z
    v = w + y / rho
    z_new = project_box(v, prob.l, prob.u)
    # same as y + ρ(w - z_new); this form is exactly zero wherever the
    # projection is inactive
    y_new = rho * (v - z_new)

    state.delta_x = x_new - x
    state.delta_y = y_new - y
    state.x, state.z, state.y = x_new, z_new, y_new
    state.x_tilde, state.z_tilde = x_tilde, z_tilde
    state.iter += 1
    return res.iterations


class _Residuals(NamedTuple):
    r_prim_bar_inf: float
    r_dual_bar_inf: float
    scaled_norms: IterateNorms
    r_prim_inf: float
    r_dual_inf: float
    norms: IterateNorms


def _evaluate(sp, state):
    prob, sc = sp.problem, sp.scaling
    ax, px, aty = _products(prob, state.x, state.y)
    r_prim_bar = ax - state.z
    r_dual_bar = px + prob.q + aty
    r_prim, r_dual = unscale_residuals(sp, r_prim_bar, r_dual_bar)
    scaled = IterateNorms(_inf(ax), _inf(state.z), _inf(px), _inf(aty), _inf(prob.q))
    dinv_c = sc.c_inv * sc.d_inv
    norms = IterateNorms(_inf(sc.e_inv * ax), _inf(sc.e_inv * state.z), _inf(dinv_c * px),
                         _inf(dinv_c * aty), _inf(dinv_c * prob.q))
    return _Residuals(_inf(r_prim_bar), _inf(r_dual_bar), scaled, _inf(r_prim), _inf(r_dual), norms)


def solve(p, s=None, initial=None, monitor=None):
    """Solve ``p`` with ADMM.

    ``initial`` is an optional ``(x, z, y)`` warm start in the original
    space. ``monitor(event, info)`` receives ``"pcg"``, ``"check"`` and
    ``"rho"`` events; it is meant for instrumentation and tests.
    """
    s = s or Settings()
    t0 = time.perf_counter()
    if s.scaling_enabled:
        sp = ruiz_equilibrate(p, s.eps_equil, s.equil_max_passes)
    else:
        sp = no_scaling(p)
    prob, sc = sp.problem, sp.scaling
    dtype = p.dtype
    n, m = p.n, p.m

    if initial is None:
        x0, z0, y0 = np.zeros(n, dtype), np.zeros(m, dtype), np.zeros(m, dtype)
    else:
        x0, z0, y0 = (np.asarray(v, dtype=dtype) for v in scale_solution(sp, *initial))
        z0 = project_box(z0, prob.l, prob.u)
    state = SolverState.start(x0, z0, y0, s.rho_bar_init)

    op = ReducedKktOperator(prob.p_full, prob.a, prob.a_t, s.sigma, s.rho_bar_init)
    precond = build_preconditioner(op)
    pcg_max_iter = s.pcg_max_iter or default_pcg_max_iter(n)

    ev = _evaluate(sp, state)
    eps_pcg = adaptive_eps(ev.r_prim_bar_inf, ev.r_dual_bar_inf, s.lambda_pcg, s.eps_pcg_min)
    pcg_total = 0
    rho_updates = []
    status = Status.MAX_ITER_REACHED
    certificate = None

    for k in range(1, s.max_admm_iter + 1):
        pcg_total += admm_step(state, op, precond, prob, s, eps_pcg, pcg_max_iter)
        if monitor is not None:
            monitor("pcg", {"iter": k, "eps": eps_pcg})
        check = k % s.check_interval == 0
        update = k % s.rho_update_interval == 0
        if not (check or update):
            continue
        ev = _evaluate(sp, state)
        if not (math.isfinite(ev.r_prim_bar_inf) and math.isfinite(ev.r_dual_bar_inf)):
            raise SolverDiverged(f"residuals are no longer finite at iteration {k}")
        if monitor is not None:
            monitor("check", {"iter": k, "r_prim_bar_inf": ev.r_prim_bar_inf, "r_dual_bar_inf": ev.r_dual_bar_inf,
                              "state": state, "scaled": sp})
        if check:
            if check_optimal(ev.r_prim_inf, ev.r_dual_inf, ev.norms, s):
                status = Status.SOLVED
                break
            dx, dy = certificate_vectors(state, sc)
            if check_primal_infeasible(dy, p, s):
                status, certificate = Status.PRIMAL_INFEASIBLE, dy
                break
            if check_dual_infeasible(dx, p, s):
                status, certificate = Status.DUAL_INFEASIBLE, dx
                break
        eps_pcg = adaptive_eps(ev.r_prim_bar_inf, ev.r_dual_bar_inf, s.lambda_pcg, s.eps_pcg_min)
        if update:
            new_rho = adapt_rho(state.rho_bar, ev.r_prim_bar_inf, ev.r_dual_bar_inf, ev.scaled_norms,
                                noise=math.sqrt(np.finfo(dtype).eps))
            if monitor is not None:
                monitor("rho", {"iter": k, "old": state.rho_bar, "new": new_rho})
            rho_updates.append((k, new_rho))
            state.rho_bar = new_rho
            update_rho(op, precond, new_rho)
    else:
        ev = _evaluate(sp, state)

    eps_prim, eps_dual = tolerances(ev.norms, s)
    if status in (Status.SOLVED, Status.MAX_ITER_REACHED):
        x, z, y = unscale_solution(sp, state.x, state.z, state.y)
        # E⁻¹(E l) can miss l by an ulp
        z = project_box(z, p.l, p.u)
        objective = p.objective(x)
    else:
        x = z = y = None
        objective = math.inf if status is Status.PRIMAL_INFEASIBLE else -math.inf
    return SolveOutcome(
        status=status, x=x, y=y, z=z, certificate=certificate, objective=objective,
        iterations=state.iter, pcg_iterations_total=pcg_total, r_prim_inf=ev.r_prim_inf,
        r_dual_inf=ev.r_dual_inf, eps_prim=eps_prim, eps_dual=eps_dual,
        runtime=time.perf_counter() - t0, rho_bar=state.rho_bar, rho_updates=rho_updates,
        scaling_passes=sc.passes, scaling_deviation=sc.final_delta_deviation,
    )
