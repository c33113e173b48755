import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from dwelljsr import _backend
from dwelljsr.lp import LpProblem, LpStatus, dual_problem, solve, solve_standard
from dwelljsr.polytope import gauge


def test_single_bound():
    s = solve(LpProblem(c=np.array([1.0]), A_ub=np.array([[-1.0]]), b_ub=np.array([-1.0])))
    assert s.ok
    assert s.x[0] == pytest.approx(1.0)


def test_feasibility_only():
    s = solve(LpProblem(c=np.zeros(2), A_eq=np.array([[1.0, 1.0]]), b_eq=np.array([1.0])))
    assert s.ok
    assert s.x.sum() == pytest.approx(1.0)
    assert np.all(s.x >= 0)


def test_membership_of_origin():
    V = np.eye(2)
    assert gauge(V, np.zeros(2)) == 0.0


def test_infeasible_and_unbounded():
    p = LpProblem(c=np.ones(1), A_eq=np.array([[1.0]]), b_eq=np.array([-1.0]))
    assert solve(p).status is LpStatus.INFEASIBLE
    q = LpProblem(c=np.array([-1.0, 0.0]), A_eq=np.array([[1.0, -1.0]]), b_eq=np.array([0.0]))
    assert solve(q).status is LpStatus.UNBOUNDED


def test_free_and_boxed_variables():
    # min x - y with -1 <= x <= 2, y free, y <= 3, x + y >= 0
    p = LpProblem(c=np.array([1.0, -1.0]), A_ub=np.array([[0.0, 1.0], [-1.0, -1.0]]), b_ub=np.array([3.0, 0.0]),
                  lb=np.array([-1.0, -np.inf]), ub=np.array([2.0, np.inf]))
    s = solve(p)
    assert s.ok
    np.testing.assert_allclose(s.x, [-1.0, 3.0], atol=1e-12)
    assert s.objective_value == pytest.approx(-4.0)


def test_redundant_equalities_are_dropped():
    A = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 0.0], [0.0, 1.0, 1.0]])
    s = solve(LpProblem(c=np.array([1.0, 2.0, 3.0]), A_eq=A, b_eq=np.array([1.0, 2.0, 1.0])))
    assert s.ok
    assert len(s.dropped_rows) == 1
    # x1 = 1 - x2, x3 = 1 - x2 gives 4 - 2 x2, minimised at x2 = 1
    assert s.objective_value == pytest.approx(2.0, abs=1e-12)


def test_degenerate_cycling_example_terminates():
    # Beale's example cycles under a naive Dantzig rule without anti-cycling
    c = np.array([-0.75, 150.0, -0.02, 6.0])
    A = np.array([[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]])
    b = np.array([0.0, 0.0, 1.0])
    s = solve(LpProblem(c=c, A_ub=A, b_ub=b))
    assert s.ok
    assert s.objective_value == pytest.approx(-0.05, abs=1e-12)


def test_iteration_limit_status():
    rng = np.random.default_rng(0)
    A = rng.uniform(0, 1, (20, 30))
    s = solve(LpProblem(c=-np.ones(30), A_ub=A, b_ub=np.ones(20)), max_iter=2)
    assert s.status is LpStatus.ITERATION_LIMIT


def test_bad_shapes_rejected():
    with pytest.raises(ValueError):
        solve(LpProblem(c=np.ones(2), A_eq=np.ones((1, 3)), b_eq=np.ones(1)))
    with pytest.raises(ValueError):
        solve(LpProblem(c=np.array([np.nan, 1.0])))


def _random_bounded(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 6)), int(rng.integers(2, 8))
    A = rng.standard_normal((m, n))
    x0 = rng.uniform(0, 1, n)
    b = A @ x0 + rng.uniform(0, 1, m)  # x0 is feasible
    c = rng.standard_normal(n)
    ub = np.full(n, 3.0)
    return c, A, b, ub


@given(st.integers(0, 10**6))
def test_matches_highs_on_bounded_problems(seed):
    c, A, b, ub = _random_bounded(seed)
    ours = solve(LpProblem(c=c, A_ub=A, b_ub=b, ub=ub))
    ref = linprog(c, A_ub=A, b_ub=b, bounds=[(0, 3.0)] * len(c), method="highs")
    assert ours.ok and ref.status == 0
    assert ours.objective_value == pytest.approx(ref.fun, abs=1e-8)
    assert np.all(A @ ours.x <= b + 1e-9)
    assert np.all(ours.x >= -1e-12) and np.all(ours.x <= 3.0 + 1e-9)


@given(st.integers(0, 10**6))
def test_strong_duality(seed):
    rng = np.random.default_rng(seed)
    m, n = int(rng.integers(1, 5)), int(rng.integers(2, 7))
    A = rng.standard_normal((m, n))
    b = A @ rng.uniform(0, 1, n)
    c = rng.uniform(0.1, 2.0, n)  # c > 0, x >= 0: the primal is bounded below
    p = LpProblem(c=c, A_eq=A, b_eq=b)
    primal = solve(p)
    dual = solve(dual_problem(p))
    assert primal.ok and dual.ok
    assert primal.objective_value == pytest.approx(-dual.objective_value, abs=1e-8)


def test_deterministic():
    c, A, b, ub = _random_bounded(7)
    s1 = solve(LpProblem(c=c, A_ub=A, b_ub=b, ub=ub))
    s2 = solve(LpProblem(c=c, A_ub=A, b_ub=b, ub=ub))
    assert np.array_equal(s1.x, s2.x) and s1.iterations == s2.iterations


@pytest.mark.skipif("compiled" not in _backend.available(), reason="compiled kernels not built")
@given(st.integers(0, 10**6))
def test_backends_agree(seed):
    c, A, b, ub = _random_bounded(seed)
    p = LpProblem(c=c, A_ub=A, b_ub=b, ub=ub)
    try:
        _backend.use("python")
        sp = solve(p)
        _backend.use("compiled")
        sc = solve(p)
    finally:
        _backend.use("compiled")
    assert sp.status is sc.status
    assert sp.iterations == sc.iterations
    np.testing.assert_allclose(sp.x, sc.x, atol=1e-12)


def test_standard_form_empty():
    st_, z, obj, *_ = solve_standard(np.ones(2), np.zeros((0, 2)), np.zeros(0))
    assert st_ is LpStatus.OPTIMAL and obj == 0.0
