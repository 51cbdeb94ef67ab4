import numpy as np
import pytest
import scipy.sparse as sps

from qpadmm import CsrMatrix, QpProblem

# the 4x5 example matrix used throughout the format tests
EXAMPLE_DENSE = np.array([
    [1, 0, 0, 0, 4],
    [0, 5, 1, 0, 0],
    [0, 2, 0, 0, 1],
    [7, 0, 1, 0, 0],
], dtype=float)

_RESULTS = {}


def record_criterion(number, passed, detail=""):
    """Remember an acceptance outcome and print it right away."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}" + (f" ({detail})" if detail else "")
    _RESULTS[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[number])


def random_sparse(rng, rows, cols, density, scale=1.0):
    m = sps.random(rows, cols, density=density, random_state=rng, data_rvs=rng.standard_normal, format="csr")
    return m * scale


def random_qp(rng, n, m, density=0.3, dtype=np.float64):
    """Feasible, strongly convex random QP with finite and infinite bounds."""
    g = random_sparse(rng, n, n, density)
    P = (g.T @ g + 0.1 * sps.eye(n)).toarray()
    A = random_sparse(rng, m, n, density).toarray() if m else None
    x0 = rng.standard_normal(n)
    ax0 = A @ x0 if m else np.zeros(0)
    l = ax0 - rng.random(m)
    u = ax0 + rng.random(m)
    if m:
        l[rng.random(m) < 0.2] = -np.inf
        u[rng.random(m) < 0.2] = np.inf
    return QpProblem.from_data(P, rng.standard_normal(n), A, l, u, dtype=dtype)


def cvxopt_solve(prob):
    """Reference ``(x, objective)`` from cvxopt's interior-point QP solver."""
    x, _, obj = cvxopt_kkt(prob)
    return x, obj


def cvxopt_kkt(prob):
    """Reference ``(x, y, objective)``; y follows the Px + q + A'y = 0 sign convention."""
    cvxopt = pytest.importorskip("cvxopt")
    from cvxopt import matrix, solvers

    P = prob.p_full.to_dense().astype(float)
    q = prob.q.astype(float)
    A = prob.a.to_dense().astype(float)
    l, u = prob.l.astype(float), prob.u.astype(float)
    eq = np.isfinite(l) & np.isfinite(u) & (l == u)
    up = np.isfinite(u) & ~eq
    lo = np.isfinite(l) & ~eq
    G = np.vstack([A[up], -A[lo]])
    h = np.concatenate([u[up], -l[lo]])
    args = [matrix(P), matrix(q)]
    kw = {}
    if G.shape[0]:
        kw.update(G=matrix(G), h=matrix(h))
    if eq.any():
        kw.update(A=matrix(A[eq]), b=matrix(l[eq]))
    opts = {"show_progress": False, "abstol": 1e-9, "reltol": 1e-9, "feastol": 1e-9, "maxiters": 200}
    sol = solvers.qp(*args, options=opts, **kw)
    assert sol["status"] == "optimal", sol["status"]
    x = np.array(sol["x"]).ravel()
    y = np.zeros(prob.m)
    if G.shape[0]:
        zg = np.array(sol["z"]).ravel()
        y[up] += zg[:up.sum()]
        y[lo] -= zg[up.sum():]
    if eq.any():
        y[eq] = np.array(sol["y"]).ravel()
    return x, y, float(0.5 * x @ P @ x + q @ x)


def csr(dense):
    return CsrMatrix.from_dense(np.asarray(dense, dtype=float))


@pytest.fixture
def example_csr():
    return csr(EXAMPLE_DENSE)
