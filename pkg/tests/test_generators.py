import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cvxopt_solve
from qpadmm import Settings, Status, solve
from qpadmm.bench import generators as g
from qpadmm.bench.generators import CLASSES, BenchSpec, generate, generate_data, rng_for
from qpadmm.io import write_problem

INF = np.inf
TIGHT = Settings(eps_abs=1e-9, eps_rel=1e-9, eps_pcg_min=1e-12, max_admm_iter=20000)


def tight(p):
    out = solve(p, TIGHT)
    assert out.status is Status.SOLVED
    return out


class TestSpec:
    def test_unknown_class(self):
        with pytest.raises(ValueError, match="unknown problem class"):
            BenchSpec("qp", 1)

    def test_scale_starts_at_one(self):
        with pytest.raises(ValueError):
            BenchSpec("svm", 0)

    def test_target_grows_from_1e3_to_1e6(self):
        assert g.target_nnz(1) == pytest.approx(1e3)
        assert g.target_nnz(8) == pytest.approx(1e6)

    def test_wrong_class_for_named_generator(self):
        with pytest.raises(ValueError):
            g.gen_lasso(BenchSpec("svm", 1))

    def test_named_generators_match_dispatch(self):
        spec = BenchSpec("portfolio", 1, seed=2)
        assert g.gen_portfolio(spec).nnz == generate(spec).nnz

    def test_rng_keys_differ_per_class(self):
        a = rng_for(BenchSpec("svm", 1, 0)).random(4)
        b = rng_for(BenchSpec("lasso", 1, 0)).random(4)
        assert not np.array_equal(a, b)


@pytest.mark.parametrize("cls", CLASSES)
class TestEveryClass:
    def test_deterministic_bytes(self, cls, tmp_path):
        spec = BenchSpec(cls, 1, seed=3)
        write_problem(tmp_path / "a.txt", generate(spec))
        write_problem(tmp_path / "b.txt", generate(spec))
        write_problem(tmp_path / "c.txt", generate(BenchSpec(cls, 1, seed=4)))
        a, b, c = ((tmp_path / f).read_bytes() for f in ("a.txt", "b.txt", "c.txt"))
        assert a == b
        assert a != c

    def test_size_is_upper_p_plus_a(self, cls):
        p = generate(BenchSpec(cls, 1, seed=1))
        P = sps.csr_matrix(p.p_full.to_dense())
        A = sps.csr_matrix(p.a.to_dense())
        assert p.nnz == sps.triu(P).nnz + A.nnz

    def test_p_is_psd(self, cls):
        p = generate(BenchSpec(cls, 1, seed=1))
        P = p.p_full.to_dense()
        np.testing.assert_array_equal(P, P.T)
        lam = np.linalg.eigvalsh(P)
        assert lam.min() >= -1e-10 * max(1.0, abs(lam).max())

    def test_size_near_target(self, cls):
        for scale in (1, 2):
            n = generate(BenchSpec(cls, scale, seed=0)).nnz
            assert 0.3 * g.target_nnz(scale) <= n <= 3 * g.target_nnz(scale)


class TestControl:
    def data(self, **kw):
        base = dict(ad=[[0.5]], bd=[[1.0]], q_diag=[1.0], qt_diag=[1.0], r_diag=[1.0], x_init=[0.0],
                    x_lo=[-INF], x_hi=[INF], u_lo=[-INF], u_hi=[INF], horizon=1)
        base.update(kw)
        return base

    def test_zero_initial_state_gives_zero(self):
        out = tight(g.control_qp(**self.data()))
        np.testing.assert_allclose(out.x, 0, atol=1e-8)
        assert out.objective == pytest.approx(0, abs=1e-12)

    def test_dimensions(self):
        data = generate_data(BenchSpec("control", 1, seed=0), size=4)
        data["horizon"] = 3
        p = g.control_qp(**data)
        nx, nu, T = 4, 2, 3
        assert p.n == nx * (T + 1) + nu * T
        eq = p.l == p.u
        assert eq.sum() == nx * (T + 1)
        assert p.m == nx * (T + 1) + p.n

    def test_dynamics_are_stable(self):
        data = generate_data(BenchSpec("control", 2, seed=5))
        radius = np.max(np.abs(np.linalg.eigvals(data["ad"].toarray())))
        assert radius < 1

    def test_small_instance_against_reference(self):
        data = generate_data(BenchSpec("control", 1, seed=2), size=4)
        data["horizon"] = 3
        p = g.control_qp(**data)
        _, ref = cvxopt_solve(p)
        assert tight(p).objective == pytest.approx(ref, abs=1e-4)


class TestEquality:
    def test_min_norm_solution(self):
        p = g.equality_qp(sps.eye(2), np.zeros(2), sps.csr_matrix([[1.0, 1.0]]), [2.0])
        out = tight(p)
        np.testing.assert_allclose(out.x, [1, 1], atol=1e-7)

    def test_zero_data_gives_zero(self):
        p = g.equality_qp(sps.eye(3), np.zeros(3), sps.csr_matrix([[1.0, 2.0, 0.0]]), [0.0])
        np.testing.assert_allclose(tight(p).x, 0, atol=1e-8)

    def test_against_kkt_system(self):
        d = generate_data(BenchSpec("equality", 1, seed=1), size=12)
        P, A = d["P"].toarray(), d["A"].toarray()
        m = A.shape[0]
        kkt = np.block([[P, A.T], [A, np.zeros((m, m))]])
        x_ref = np.linalg.lstsq(kkt, np.concatenate([-d["q"], d["b"]]), rcond=None)[0][:12]
        out = solve(g.equality_qp(**d), Settings(eps_abs=1e-7, eps_rel=1e-7, eps_pcg_min=1e-12))
        assert out.status is Status.SOLVED
        np.testing.assert_allclose(out.x, x_ref, atol=1e-5)

    @pytest.mark.parametrize("scale", [1, 2])
    def test_solved_at_default_tolerances(self, scale):
        p = generate(BenchSpec("equality", scale, seed=0))
        assert p.n <= 500
        assert solve(p).status is Status.SOLVED


class TestHuber:
    def test_inliers_give_least_squares(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((30, 4))
        b = A @ rng.standard_normal(4) + 0.05 * rng.standard_normal(30)
        x_ls = np.linalg.lstsq(A, b, rcond=None)[0]
        assert np.max(np.abs(A @ x_ls - b)) < g.HUBER_M
        out = tight(g.huber_qp(sps.csr_matrix(A), b))
        np.testing.assert_allclose(out.x[:4], x_ls, atol=1e-6)
        np.testing.assert_allclose(out.x[4 + 30:], 0, atol=1e-7)

    def test_single_point(self):
        out = tight(g.huber_qp(sps.csr_matrix([[1.0]]), [0.0]))
        assert out.x[0] == pytest.approx(0, abs=1e-8)

    def test_penalty_pieces(self):
        np.testing.assert_allclose(g.huber_penalty(np.array([0.5, -0.5, 3.0, -3.0]), 1.0), [0.25, 0.25, 5, 5])

    def test_objective_matches_direct(self):
        d = generate_data(BenchSpec("huber", 1, seed=3), size=5)
        out = tight(g.huber_qp(**d))
        assert out.objective == pytest.approx(g.huber_objective(d["A"], d["b"], out.x[:5], d["M"]), abs=1e-6)


class TestLasso:
    def test_large_lambda_kills_solution(self):
        d = generate_data(BenchSpec("lasso", 1, seed=1), size=5)
        lam = 2 * np.max(np.abs(d["A"].T @ d["b"]))
        out = tight(g.lasso_qp(d["A"], d["b"], lam))
        np.testing.assert_allclose(out.x[:5], 0, atol=1e-7)

    def test_zero_rhs(self):
        d = generate_data(BenchSpec("lasso", 1, seed=1), size=5)
        out = tight(g.lasso_qp(d["A"], np.zeros(d["A"].shape[0]), 1.0))
        np.testing.assert_allclose(out.x[:5], 0, atol=1e-8)
        assert out.objective == pytest.approx(0, abs=1e-8)

    def test_lambda_rule(self):
        d = generate_data(BenchSpec("lasso", 1, seed=2), size=6)
        assert d["lam"] == pytest.approx(0.2 * np.max(np.abs(d["A"].T @ d["b"])))

    def test_objective_matches_direct(self):
        d = generate_data(BenchSpec("lasso", 1, seed=3), size=5)
        out = tight(g.lasso_qp(**d))
        assert out.objective == pytest.approx(g.lasso_objective(d["A"], d["b"], d["lam"], out.x[:5]), abs=1e-6)


class TestPortfolio:
    def test_identical_assets_split_evenly(self):
        p = g.portfolio_qp(sps.csr_matrix([[0.5], [0.5]]), [1.0, 1.0], [0.3, 0.3])
        np.testing.assert_allclose(tight(p).x[:2], [0.5, 0.5], atol=1e-7)

    def test_budget_is_tight(self):
        p = generate(BenchSpec("portfolio", 1, seed=4))
        out = solve(p)
        n = p.n - max(1, (p.n - 1) // 100)
        assert abs(out.x[:n].sum() - 1) <= out.eps_prim

    def test_two_assets_against_reference(self):
        p = g.portfolio_qp(sps.csr_matrix([[0.8], [-0.3]]), [0.4, 0.9], [0.5, -0.2])
        _, ref = cvxopt_solve(p)
        assert tight(p).objective == pytest.approx(ref, abs=1e-5)


class TestRandom:
    def test_planted_point_is_feasible(self):
        d = generate_data(BenchSpec("random", 1, seed=6))
        ax0 = d["A"] @ d["x0"]
        assert np.all(d["l"] <= ax0) and np.all(ax0 <= d["u"])
        assert np.all(np.isfinite(d["l"])) and np.all(np.isfinite(d["u"]))

    @pytest.mark.parametrize("scale", [1, 2, 3])
    def test_solved_at_default_tolerances(self, scale):
        p = generate(BenchSpec("random", scale, seed=0))
        assert p.n <= 500
        assert solve(p).status is Status.SOLVED

    def test_small_instance_against_reference(self):
        p = generate(BenchSpec("random", 1, seed=7), size=8)
        _, ref = cvxopt_solve(p)
        # the every-10-iterations ρ̄ rule cycles on this instance below 1e-3;
        # a fixed ρ̄ converges to any accuracy
        out = solve(p, Settings(eps_abs=1e-7, eps_rel=1e-7, rho_update_interval=10**9))
        assert out.status is Status.SOLVED
        assert out.objective == pytest.approx(ref, abs=1e-4)


class TestSvm:
    def test_separated_clouds_leave_hinges_inactive(self):
        rng = np.random.default_rng(1)
        pos = np.column_stack([np.full(10, -10.0), 0.1 * rng.standard_normal(10)])
        neg = np.column_stack([np.full(10, 10.0), 0.1 * rng.standard_normal(10)])
        A = sps.csr_matrix(np.vstack([pos, neg]))
        labels = np.r_[np.ones(10), -np.ones(10)]
        out = tight(g.svm_qp(A, labels))
        x = out.x[:2]
        assert np.all(labels * (A @ x) + 1 <= 1e-7)
        np.testing.assert_allclose(out.x[2:], 0, atol=1e-7)
        assert out.objective == pytest.approx(x @ x, abs=1e-8)

    def test_no_hinge_weight_gives_zero(self):
        d = generate_data(BenchSpec("svm", 1, seed=1), size=3)
        out = tight(g.svm_qp(d["A"], d["labels"], lam=0.0))
        np.testing.assert_allclose(out.x[:3], 0, atol=1e-8)

    def test_labels_split_in_half(self):
        d = generate_data(BenchSpec("svm", 1, seed=1), size=4)
        assert d["labels"].sum() == 0

    def test_objective_matches_direct(self):
        d = generate_data(BenchSpec("svm", 1, seed=3), size=3)
        out = tight(g.svm_qp(**d))
        assert out.objective == pytest.approx(g.svm_objective(d["A"], d["labels"], d["lam"], out.x[:3]), abs=1e-6)


_OBJECTIVES = {
    "huber": lambda d, x: g.huber_objective(d["A"], d["b"], x, d["M"]),
    "lasso": lambda d, x: g.lasso_objective(d["A"], d["b"], d["lam"], x),
    "svm": lambda d, x: g.svm_objective(d["A"], d["labels"], d["lam"], x),
}


@settings(max_examples=12, deadline=None)
@given(st.sampled_from(sorted(_OBJECTIVES)), st.integers(0, 10**6), st.integers(2, 5))
def test_reformulations_are_exact(cls, seed, size):
    d = generate_data(BenchSpec(cls, 1, seed=seed), size=size)
    p = g._BUILD[cls](**d)
    out = tight(p)
    assert out.objective == pytest.approx(_OBJECTIVES[cls](d, out.x[:size]), abs=1e-5)
