import numpy as np
import pytest
from hypothesis import given, strategies as st

from drsvm.sdp import smat, solve_sdp_eq, solve_sdp_ipm, svec, svec_outer

from strategies import sym_matrices


@given(sym_matrices(), sym_matrices())
def test_svec_inner_product(a, b):
    if a.shape != b.shape:
        b = np.eye(len(a))
    assert svec(a) @ svec(b) == pytest.approx(np.sum(a * b), rel=1e-12, abs=1e-9)
    np.testing.assert_allclose(smat(svec(a), len(a)), a, rtol=1e-15, atol=1e-15)


@given(st.integers(1, 6), st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_svec_outer(n, e, seed):
    g = np.random.default_rng(seed).normal(size=(e, n))
    expected = np.array([svec(np.outer(r, r)) for r in g])
    np.testing.assert_allclose(svec_outer(g), expected, rtol=1e-14, atol=1e-14)


def _box_problem():
    # rank-one rows e1, e2 and e1 - e2
    g = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, -1.0]])
    upper = np.array([1.0, 4.0, 1.0])
    return g, upper


def test_ipm_small_problem_against_hand_solution():
    # max tr X  s.t.  X11 <= 1, X22 <= 4  ->  X = [[1, 2], [2, 4]] (rank one, PSD edge)
    g = np.array([[1.0, 0.0], [0.0, 1.0]])
    res = solve_sdp_ipm(2, np.eye(2), g, [1.0, 4.0], rank_one=True, gap_tol=1e-9)
    assert res.objective == pytest.approx(5.0, rel=1e-7)
    assert res.rel_gap <= 1e-7
    assert np.linalg.eigvalsh(res.x).min() >= -1e-9


def test_ipm_stays_feasible():
    g, upper = _box_problem()
    res = solve_sdp_ipm(2, np.eye(2), g, upper, rank_one=True)
    values = np.einsum("ei,ij,ej->e", g, res.x, g)
    assert np.all(values <= upper * (1 + 1e-9))
    assert np.linalg.eigvalsh(res.x).min() >= 0


def test_eq_hand_solution():
    # X = Y Y^T with |y1| = 1 and |y1 - y2| = 1: the trace peaks at y2 = 2 y1
    g = np.array([[1.0, -1.0], [1.0, 0.0]])
    res = solve_sdp_eq(2, np.eye(2), g, [1.0, 1.0], tol=1e-10)
    np.testing.assert_allclose(res.x, [[1.0, 2.0], [2.0, 4.0]], atol=1e-6)
    assert res.converged and res.max_violation <= 1e-8


def test_eq_trace_file(tmp_path):
    g = np.array([[1.0, -1.0], [1.0, 0.0]])
    solve_sdp_eq(2, np.eye(2), g, [1.0, 1.0], trace_path=tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,objective,relative_gap,primal_infeasibility,dual_infeasibility"


def test_eq_against_cvxpy():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(4)
    n, e = 6, 12
    x0 = rng.normal(size=(n, n))
    x0 = x0 @ x0.T  # strictly feasible point
    g = rng.normal(size=(e, n))
    b = np.einsum("ij,jk,ik->i", g, x0, g)
    c = rng.normal(size=(n, n))
    c = c @ c.T
    res = solve_sdp_eq(n, c, g, b)
    x = cp.Variable((n, n), PSD=True)
    ref = cp.Problem(cp.Maximize(cp.trace(c @ x)), [cp.quad_form(gi, x) == bi for gi, bi in zip(g, b)]).solve()
    assert res.objective == pytest.approx(ref, rel=1e-5)


def test_ipm_trace_file(tmp_path):
    g, upper = _box_problem()
    solve_sdp_ipm(2, np.eye(2), g, upper, rank_one=True, trace_path=tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,objective,certified_gap,dual_residual"
    assert len(lines) > 2


def test_ipm_against_cvxpy():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(3)
    n, e = 5, 30
    g = rng.normal(size=(e, n))
    upper = rng.uniform(0.5, 2.0, size=e)
    c = rng.normal(size=(n, n))
    c = c @ c.T
    res = solve_sdp_ipm(n, c, g, upper, rank_one=True, gap_tol=1e-9)
    x = cp.Variable((n, n), PSD=True)
    cons = [cp.quad_form(gi, x) <= ui for gi, ui in zip(g, upper)]
    ref = cp.Problem(cp.Maximize(cp.trace(c @ x)), cons).solve()
    assert res.objective == pytest.approx(ref, rel=1e-5)
