"""Seeded random instances of the seven benchmark problem classes.

Every generator draws from a Philox counter-based generator keyed by
``(seed, scale_index, class id)``, so a ``BenchSpec`` always yields the
same problem. Problem dimensions are chosen so that
N = nnz(triu P) + nnz(A) lands near a target that grows geometrically
with the scale index: 10³ at scale 1 to 10⁶ at scale 8.

Each class has a ``*_data`` function drawing raw data, a ``*_qp``
builder that reformulates that data as ``l <= Ax <= u``, and a direct
objective for the nonsmooth classes so reformulations can be checked.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from ..problem import QpProblem

CLASSES = ("control", "equality", "huber", "lasso", "portfolio", "random", "svm")

DENSITY_A = 0.15
DENSITY_GRAM = 0.10
DATA_RATIO = 10   # data points per feature for huber and lasso
SVM_DATA_RATIO = 100
EQUALITY_ROW_RATIO = 0.8
HORIZON = 10
HUBER_M = 1.0
SVM_LAMBDA = 1.0
PORTFOLIO_GAMMA = 1.0


@dataclass(frozen=True)
class BenchSpec:
    class_name: str
    scale_index: int
    seed: int = 0
    instances_per_size: int = 1

    def __post_init__(self):
        if self.class_name not in CLASSES:
            raise ValueError(f"unknown problem class {self.class_name!r}")
        if self.scale_index < 1:
            raise ValueError("scale_index starts at 1")


def target_nnz(scale_index):
    return 10 ** (3 + 3 * (scale_index - 1) / 7)


def rng_for(spec):
    key = np.random.SeedSequence([spec.seed, spec.scale_index, CLASSES.index(spec.class_name)])
    return np.random.Generator(np.random.Philox(key))


def sprandn(rng, rows, cols, density):
    """Sparse matrix with ``round(density·rows·cols)`` standard-normal entries."""
    k = int(round(density * rows * cols))
    k = min(max(k, 0), rows * cols)
    if k == 0:
        return sps.csr_matrix((rows, cols))
    flat = np.sort(rng.choice(rows * cols, size=k, replace=False))
    vals = rng.standard_normal(k)
    return sps.csr_matrix((vals, (flat // cols, flat % cols)), shape=(rows, cols))


def _fill_empty_rows(rng, m):
    """Give every structurally empty row one random entry."""
    m = sps.csr_matrix(m)
    empty = np.flatnonzero(np.diff(m.indptr) == 0)
    if empty.size == 0:
        return m
    cols = rng.integers(0, m.shape[1], size=empty.size)
    extra = sps.csr_matrix((rng.standard_normal(empty.size), (empty, cols)), shape=m.shape)
    return sps.csr_matrix(m + extra)


def _gram(rng, n, density):
    g = sprandn(rng, n, n, density)
    return sps.csr_matrix(g.T @ g)


def _qp(P, q, A, l, u):
    return QpProblem.from_data(sps.csr_matrix(P), q, sps.csr_matrix(A), l, u)


# ---- size models --------------------------------------------------------

def _gram_fill(n, density):
    return 1 - (1 - density * density) ** n


def _est_nnz(class_name, k):
    dA, dG = DENSITY_A, DENSITY_GRAM
    if class_name == "random":
        return 0.5 * k * k * _gram_fill(k, dG) + k + 10 * k * k * dA
    if class_name == "equality":
        return 0.5 * k * k * _gram_fill(k, dG) + k + EQUALITY_ROW_RATIO * k * k * dA
    if class_name == "control":
        nu = max(1, k // 2)
        per_step = k * k * dA + k * nu * dA + 3 * k + 2 * nu
        return HORIZON * per_step + 3 * k
    if class_name in ("huber", "lasso", "svm"):
        m = (SVM_DATA_RATIO if class_name == "svm" else DATA_RATIO) * k
        return m * k * dA + 6 * m
    if class_name == "portfolio":
        f = max(1, k // 100)
        return 0.5 * k * f + 4 * k + 2 * f
    raise ValueError(class_name)


def dimension_for(class_name, scale_index):
    """Smallest size parameter whose expected N reaches the scale's target."""
    target = target_nnz(scale_index)
    lo, hi = 1, 2
    while _est_nnz(class_name, hi) < target:
        hi *= 2
    while lo < hi:
        mid = (lo + hi) // 2
        if _est_nnz(class_name, mid) < target:
            lo = mid + 1
        else:
            hi = mid
    return max(lo, 2)


# ---- control ------------------------------------------------------------

def control_data(rng, nx):
    nu = max(1, nx // 2)
    ad = sprandn(rng, nx, nx, DENSITY_A).toarray() + np.eye(nx)
    radius = np.max(np.abs(np.linalg.eigvals(ad)))
    ad *= 0.95 / radius
    bd = _fill_empty_rows(rng, sprandn(rng, nx, nu, DENSITY_A)).toarray()
    q = rng.uniform(0, 10, nx)
    q[rng.random(nx) < 0.3] = 0
    r = 0.1 * np.ones(nu)
    x_init = rng.uniform(-1, 1, nx)
    # bounds generous enough that the zero-input trajectory is feasible
    traj = [x_init]
    for _ in range(HORIZON):
        traj.append(ad @ traj[-1])
    reach = np.max(np.abs(traj), axis=0)
    x_bound = np.maximum(1.0, 1.2 * reach) + rng.uniform(0, 1, nx)
    u_bound = rng.uniform(0.5, 1.5, nu)
    return dict(ad=sps.csr_matrix(ad), bd=sps.csr_matrix(bd), q_diag=q, qt_diag=q.copy(), r_diag=r,
                x_init=x_init, x_lo=-x_bound, x_hi=x_bound, u_lo=-u_bound, u_hi=u_bound, horizon=HORIZON)


def control_qp(ad, bd, q_diag, qt_diag, r_diag, x_init, x_lo, x_hi, u_lo, u_hi, horizon):
    """Stack x_0..x_T, u_0..u_{T-1}; cost x_T'Q_T x_T + Σ x_t'Qx_t + u_t'Ru_t."""
    ad, bd = sps.csr_matrix(ad), sps.csr_matrix(bd)
    nx, nu = bd.shape
    T = horizon
    nvx = nx * (T + 1)
    P = 2 * sps.block_diag([sps.kron(sps.eye(T), sps.diags(q_diag)), sps.diags(qt_diag),
                            sps.kron(sps.eye(T), sps.diags(r_diag))])
    q = np.zeros(nvx + nu * T)
    # x_{t+1} - A x_t - B u_t = 0, preceded by x_0 = x_init
    ax_blk = sps.kron(sps.eye(T + 1), -sps.eye(nx)) + sps.kron(sps.eye(T + 1, k=-1), ad)
    bu_blk = sps.kron(sps.vstack([sps.csr_matrix((1, T)), sps.eye(T)]), bd)
    a_eq = sps.hstack([ax_blk, bu_blk])
    b_eq = np.concatenate([-np.asarray(x_init, dtype=float), np.zeros(T * nx)])
    a_box = sps.eye(nvx + nu * T)
    lo = np.concatenate([np.tile(x_lo, T + 1), np.tile(u_lo, T)])
    hi = np.concatenate([np.tile(x_hi, T + 1), np.tile(u_hi, T)])
    A = sps.vstack([a_eq, a_box])
    return _qp(P, q, A, np.concatenate([b_eq, lo]), np.concatenate([b_eq, hi]))


# ---- equality -----------------------------------------------------------

def equality_data(rng, n):
    m = max(1, int(EQUALITY_ROW_RATIO * n))
    P = _gram(rng, n, DENSITY_GRAM) + 1e-2 * sps.eye(n)
    q = rng.standard_normal(n)
    A = _fill_empty_rows(rng, sprandn(rng, m, n, DENSITY_A))
    b = A @ rng.standard_normal(n)
    return dict(P=P, q=q, A=A, b=b)


def equality_qp(P, q, A, b):
    b = np.asarray(b, dtype=float)
    return _qp(P, q, A, b, b)


# ---- huber --------------------------------------------------------------

def huber_data(rng, n):
    m = DATA_RATIO * n
    A = _fill_empty_rows(rng, sprandn(rng, m, n, DENSITY_A))
    x_true = rng.standard_normal(n) / np.sqrt(n)
    noise = 0.1 * rng.standard_normal(m)
    outliers = rng.random(m) < 0.05
    noise[outliers] = 10 * rng.standard_normal(outliers.sum())
    return dict(A=A, b=A @ x_true + noise, M=HUBER_M)


def huber_qp(A, b, M=HUBER_M):
    """Variables (x, u, r, s): minimize u'u + 2M·1'(r + s), Ax - b - u = r - s, r, s >= 0."""
    A = sps.csr_matrix(A)
    m, n = A.shape
    P = sps.block_diag([sps.csr_matrix((n, n)), 2 * sps.eye(m), sps.csr_matrix((2 * m, 2 * m))])
    q = np.concatenate([np.zeros(n + m), 2 * M * np.ones(2 * m)])
    Im = sps.eye(m)
    a_fit = sps.hstack([A, -Im, -Im, Im])
    a_pos = sps.hstack([sps.csr_matrix((2 * m, n + m)), sps.eye(2 * m)])
    b = np.asarray(b, dtype=float)
    l = np.concatenate([b, np.zeros(2 * m)])
    u = np.concatenate([b, np.full(2 * m, np.inf)])
    return _qp(P, q, sps.vstack([a_fit, a_pos]), l, u)


def huber_penalty(r, M=HUBER_M):
    r = np.abs(r)
    return np.where(r <= M, r * r, M * (2 * r - M))


def huber_objective(A, b, x, M=HUBER_M):
    return float(np.sum(huber_penalty(A @ x - b, M)))


# ---- lasso --------------------------------------------------------------

def lasso_data(rng, n):
    m = DATA_RATIO * n
    A = _fill_empty_rows(rng, sprandn(rng, m, n, DENSITY_A))
    x_true = rng.standard_normal(n) / np.sqrt(n)
    x_true[rng.random(n) < 0.5] = 0
    b = A @ x_true + rng.standard_normal(m)
    lam = 0.2 * np.max(np.abs(A.T @ b))
    return dict(A=A, b=b, lam=lam)


def lasso_qp(A, b, lam):
    """Variables (x, y, t): minimize y'y + λ·1't, y = Ax - b, -t <= x <= t."""
    A = sps.csr_matrix(A)
    m, n = A.shape
    P = sps.block_diag([sps.csr_matrix((n, n)), 2 * sps.eye(m), sps.csr_matrix((n, n))])
    q = np.concatenate([np.zeros(n + m), lam * np.ones(n)])
    In = sps.eye(n)
    a_fit = sps.hstack([A, -sps.eye(m), sps.csr_matrix((m, n))])
    a_up = sps.hstack([In, sps.csr_matrix((n, m)), -In])
    a_lo = sps.hstack([In, sps.csr_matrix((n, m)), In])
    b = np.asarray(b, dtype=float)
    l = np.concatenate([b, np.full(n, -np.inf), np.zeros(n)])
    u = np.concatenate([b, np.zeros(n), np.full(n, np.inf)])
    return _qp(P, q, sps.vstack([a_fit, a_up, a_lo]), l, u)


def lasso_objective(A, b, lam, x):
    r = A @ x - b
    return float(r @ r + lam * np.sum(np.abs(x)))


# ---- portfolio ----------------------------------------------------------

def portfolio_data(rng, n):
    k = max(1, n // 100)
    F = sprandn(rng, n, k, 0.5)
    d = rng.random(n) * np.sqrt(k)
    mu = rng.standard_normal(n)
    return dict(F=F, d=d, mu=mu, gamma=PORTFOLIO_GAMMA)


def portfolio_qp(F, d, mu, gamma=PORTFOLIO_GAMMA):
    """Variables (x, w): minimize γ(x'diag(d)x + w'w) - μ'x, w = F'x, 1'x = 1, x >= 0."""
    F = sps.csr_matrix(F)
    n, k = F.shape
    P = 2 * gamma * sps.block_diag([sps.diags(d), sps.eye(k)])
    q = np.concatenate([-np.asarray(mu, dtype=float), np.zeros(k)])
    a_fac = sps.hstack([-F.T, sps.eye(k)])
    a_bud = sps.hstack([sps.csr_matrix(np.ones((1, n))), sps.csr_matrix((1, k))])
    a_pos = sps.hstack([sps.eye(n), sps.csr_matrix((n, k))])
    l = np.concatenate([np.zeros(k), [1.0], np.zeros(n)])
    u = np.concatenate([np.zeros(k), [1.0], np.full(n, np.inf)])
    return _qp(P, q, sps.vstack([a_fac, a_bud, a_pos]), l, u)


# ---- random -------------------------------------------------------------

def random_data(rng, n):
    m = 10 * n
    P = _gram(rng, n, DENSITY_GRAM) + 1e-2 * sps.eye(n)
    q = rng.standard_normal(n)
    A = sprandn(rng, m, n, DENSITY_A)
    x0 = rng.standard_normal(n)
    ax0 = A @ x0
    return dict(P=P, q=q, A=A, l=ax0 - rng.random(m), u=ax0 + rng.random(m), x0=x0)


def random_qp(P, q, A, l, u, x0=None):
    return _qp(P, q, A, l, u)


# ---- svm ----------------------------------------------------------------

def svm_data(rng, n):
    m = SVM_DATA_RATIO * n
    half = m // 2
    A = sprandn(rng, m, n, DENSITY_A).tocsr()
    rows = np.repeat(np.arange(m), np.diff(A.indptr))
    shift = np.where(rows < half, 1.0, -1.0) / n
    A.data = shift + A.data / np.sqrt(n)
    A = _fill_empty_rows(rng, A)
    labels = np.where(np.arange(m) < half, 1.0, -1.0)
    return dict(A=A, labels=labels, lam=SVM_LAMBDA)


def svm_qp(A, labels, lam=SVM_LAMBDA):
    """Variables (x, t): minimize x'x + λ·1't, t >= diag(b)Ax + 1, t >= 0."""
    A = sps.csr_matrix(A)
    m, n = A.shape
    P = sps.block_diag([2 * sps.eye(n), sps.csr_matrix((m, m))])
    q = np.concatenate([np.zeros(n), lam * np.ones(m)])
    a_hinge = sps.hstack([-sps.diags(labels) @ A, sps.eye(m)])
    a_pos = sps.hstack([sps.csr_matrix((m, n)), sps.eye(m)])
    l = np.concatenate([np.ones(m), np.zeros(m)])
    u = np.full(2 * m, np.inf)
    return _qp(P, q, sps.vstack([a_hinge, a_pos]), l, u)


def svm_objective(A, labels, lam, x):
    return float(x @ x + lam * np.sum(np.maximum(0, labels * (A @ x) + 1)))


# ---- dispatch -----------------------------------------------------------

_DATA = {
    "control": control_data, "equality": equality_data, "huber": huber_data, "lasso": lasso_data,
    "portfolio": portfolio_data, "random": random_data, "svm": svm_data,
}
_BUILD = {
    "control": control_qp, "equality": equality_qp, "huber": huber_qp, "lasso": lasso_qp,
    "portfolio": portfolio_qp, "random": random_qp, "svm": svm_qp,
}


def generate_data(spec, size=None):
    """Raw data of one instance; ``size`` overrides the scale's size parameter."""
    size = size or dimension_for(spec.class_name, spec.scale_index)
    return _DATA[spec.class_name](rng_for(spec), size)


def generate(spec, size=None, dtype=None):
    data = generate_data(spec, size)
    prob = _BUILD[spec.class_name](**data)
    return prob if dtype is None else prob.astype(dtype)


def _gen(class_name):
    def gen(spec, size=None):
        if spec.class_name != class_name:
            raise ValueError(f"spec is for {spec.class_name!r}, not {class_name!r}")
        return generate(spec, size)
    gen.__name__ = f"gen_{class_name}"
    return gen


gen_control = _gen("control")
gen_equality = _gen("equality")
gen_huber = _gen("huber")
gen_lasso = _gen("lasso")
gen_portfolio = _gen("portfolio")
gen_random_qp = _gen("random")
gen_svm = _gen("svm")
