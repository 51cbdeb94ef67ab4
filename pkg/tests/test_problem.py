import numpy as np
import pytest
import scipy.sparse as sps

from qpadmm import ProblemError, QpProblem
from qpadmm.sparse import CsrMatrix


def test_from_data_keeps_upper_triangle():
    p = QpProblem.from_data(np.array([[2.0, 1.0], [1.0, 3.0]]), [0, 0], np.eye(2), [0, 0], [1, 1])
    np.testing.assert_array_equal(p.p_upper.to_dense(), [[2, 1], [0, 3]])
    np.testing.assert_array_equal(p.p_full.to_dense(), [[2, 1], [1, 3]])
    assert p.nnz == 3 + 2


def test_size_counts_upper_triangle_only():
    P = sps.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    p = QpProblem.from_data(P, [0, 0], sps.csr_matrix(np.ones((3, 2))), np.zeros(3), np.ones(3))
    assert p.nnz == 3 + 6


def test_no_constraints():
    p = QpProblem.from_data(np.eye(2), [1, 1], None, [], [])
    assert p.m == 0 and p.a.shape == (0, 2)


@pytest.mark.parametrize("l,u", [([1.0], [0.0]), ([np.inf], [np.inf]), ([-np.inf], [-np.inf]), ([np.nan], [1.0])])
def test_bad_bounds(l, u):
    with pytest.raises(ProblemError):
        QpProblem.from_data(np.eye(1), [0], np.eye(1), l, u)


def test_lower_triangle_rejected():
    lower = CsrMatrix.from_dense(np.array([[1.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(ProblemError):
        QpProblem(lower, np.zeros(2), CsrMatrix.empty(0, 2), [], [])


def test_non_finite_cost_rejected():
    with pytest.raises(ProblemError):
        QpProblem.from_data(np.eye(1), [np.inf], None, [], [])


def test_dimension_checks():
    with pytest.raises(ProblemError):
        QpProblem.from_data(np.eye(2), [0, 0], np.ones((1, 3)), [0], [1])
    with pytest.raises(ProblemError):
        QpProblem.from_data(np.eye(2), [0, 0], np.ones((1, 2)), [0, 0], [1, 1])


def test_objective_and_astype():
    p = QpProblem.from_data(np.array([[2.0, 1.0], [1.0, 2.0]]), [1, -1], None, [], [])
    x = np.array([1.0, 2.0])
    assert p.objective(x) == pytest.approx(0.5 * x @ np.array([[2, 1], [1, 2]]) @ x + 1 - 2)
    single = p.astype(np.float32)
    assert single.dtype == np.float32 and single.q.dtype == np.float32
