import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trajopt.nlp import NlpOptions, NlpProblem, kkt_check, solve

INNER = ["newton", "lbfgs"]


def _quadratic(seed=0, n=5):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    A = M @ M.T + n * np.eye(n)
    b = rng.normal(size=n)
    nlp = NlpProblem(
        dimension=n,
        objective=lambda x: 0.5 * x @ A @ x - b @ x,
        gradient=lambda x: A @ x - b,
        hessian=lambda x, mu: A,
    )
    return nlp, A, b


def _equality():
    return NlpProblem(
        dimension=1,
        objective=lambda x: float(x[0] ** 2),
        gradient=lambda x: 2 * x,
        constraints=lambda x: np.array([x[0] - 1.0]),
        jacobian=lambda x: np.array([[1.0]]),
        hessian=lambda x, mu: np.array([[2.0]]),
    )


def _box(n=3):
    return NlpProblem(
        dimension=n,
        objective=lambda x: float(x @ x),
        gradient=lambda x: 2 * x,
        hessian=lambda x, mu: 2 * np.eye(n),
        lower=np.ones(n),
    )


@pytest.mark.parametrize("inner", INNER)
def test_unconstrained_quadratic(inner):
    nlp, A, b = _quadratic()
    sol = solve(nlp, np.zeros(5), NlpOptions(inner=inner))
    assert sol.success
    np.testing.assert_allclose(sol.x, np.linalg.solve(A, b), atol=1e-6)


@pytest.mark.parametrize("inner", INNER)
def test_equality_constrained_scalar(inner):
    opts = NlpOptions(inner=inner, constraint_tol=1e-8, stationarity_tol=1e-8)
    sol = solve(_equality(), np.array([5.0]), opts)
    assert sol.success
    assert sol.x[0] == pytest.approx(1.0, abs=1e-6)
    assert sol.multipliers[0] == pytest.approx(-2.0, abs=1e-6)


def test_equality_scalar_default_tolerances():
    # with |x - 1| <= ctol and |2x + lam| <= stol the multiplier error is at most 2 ctol + stol
    opts = NlpOptions()
    sol = solve(_equality(), np.array([5.0]), opts)
    assert sol.success
    assert abs(sol.x[0] - 1.0) <= opts.constraint_tol
    assert abs(sol.multipliers[0] + 2.0) <= 2 * opts.constraint_tol + opts.stationarity_tol


@pytest.mark.parametrize("inner", INNER)
def test_box(inner):
    sol = solve(_box(), np.array([3.0, -2.0, 0.5]), NlpOptions(inner=inner))
    assert sol.success
    np.testing.assert_allclose(sol.x, 1.0, atol=1e-12)


def test_status_invariant_on_optimal():
    opts = NlpOptions()
    sol = solve(_equality(), np.array([-3.0]), opts)
    assert sol.status == "optimal"
    assert sol.max_violation < opts.constraint_tol
    assert sol.stationarity_norm < opts.stationarity_tol


class TestKkt:
    def test_analytic_point(self):
        rep = kkt_check(_equality(), np.array([1.0]), np.array([-2.0]))
        assert rep.stationarity_norm < 1e-8
        assert rep.max_violation < 1e-8
        assert rep.complementarity_max < 1e-8

    def test_infeasible_point(self):
        rep = kkt_check(_equality(), np.array([1.7]), np.array([0.0]))
        assert rep.max_violation == pytest.approx(0.7)

    def test_unconstrained_minimum(self):
        nlp, A, b = _quadratic()
        rep = kkt_check(nlp, np.linalg.solve(A, b))
        assert rep.stationarity_norm < 1e-8
        assert rep.max_violation == 0.0

    def test_active_bound_removes_gradient(self):
        rep = kkt_check(_box(), np.ones(3))
        assert rep.stationarity_norm == 0.0
        assert rep.max_violation == 0.0

    def test_bound_violation_reported(self):
        assert kkt_check(_box(), np.array([0.5, 1.0, 1.0])).max_violation == pytest.approx(0.5)

    def test_accepts_solution(self):
        sol = solve(_equality(), np.array([2.0]))
        rep = kkt_check(_equality(), sol)
        assert rep.stationarity_norm == pytest.approx(sol.stationarity_norm)


def test_finite_difference_fallbacks():
    # no gradient, Jacobian or Hessian: forward differences and L-BFGS
    nlp = NlpProblem(
        dimension=2,
        objective=lambda x: float((x[0] - 2) ** 2 + (x[1] + 1) ** 2),
        constraints=lambda x: np.array([x[0] + x[1] - 0.5]),
    )
    sol = solve(nlp, np.zeros(2))
    # minimize distance to (2, -1) on x0 + x1 = 0.5
    np.testing.assert_allclose(sol.x, [1.75, -1.25], atol=1e-5)


def test_rosenbrock_lbfgs():
    def f(x):
        return float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)

    def g(x):
        return np.array([-400 * x[0] * (x[1] - x[0] ** 2) - 2 * (1 - x[0]),
                         200 * (x[1] - x[0] ** 2)])

    nlp = NlpProblem(dimension=2, objective=f, gradient=g)
    sol = solve(nlp, np.array([-1.2, 1.0]), NlpOptions(max_inner=2000))
    np.testing.assert_allclose(sol.x, [1.0, 1.0], atol=1e-5)


def test_initial_point_projected():
    sol = solve(_box(), np.array([-5.0, -5.0, -5.0]), NlpOptions(max_outer=1))
    assert np.all(sol.x >= 1.0)


def test_non_finite_start_rejected():
    nlp = NlpProblem(dimension=1, objective=lambda x: float(np.log(x[0])))
    with pytest.raises(ValueError), np.errstate(invalid="ignore"):
        solve(nlp, np.array([-1.0]))


def test_newton_requires_hessian():
    nlp = NlpProblem(dimension=1, objective=lambda x: float(x[0] ** 2))
    with pytest.raises(ValueError):
        solve(nlp, np.array([1.0]), NlpOptions(inner="newton"))


@pytest.mark.parametrize("kwargs", [dict(max_outer=0), dict(constraint_tol=2.0),
                                    dict(rho0=-1.0), dict(inner="bfgs")])
def test_options_validated(kwargs):
    with pytest.raises(ValueError):
        NlpOptions(**kwargs)


def test_log_stream_one_line_per_outer():
    buf = io.StringIO()
    sol = solve(_equality(), np.array([3.0]), NlpOptions(log_stream=buf))
    lines = buf.getvalue().strip().splitlines()
    assert len(lines) == sol.outer_iterations
    assert all(len(line.split()) == 5 for line in lines)


def test_deterministic():
    nlp = NlpProblem(
        dimension=3,
        objective=lambda x: float(np.sum(np.cos(x)) + x @ x),
        gradient=lambda x: -np.sin(x) + 2 * x,
        constraints=lambda x: np.array([x[0] * x[1] - 0.3]),
        jacobian=lambda x: np.array([[x[1], x[0], 0.0]]),
    )
    a = solve(nlp, np.array([1.0, 2.0, 3.0]))
    b = solve(nlp, np.array([1.0, 2.0, 3.0]))
    assert a.x.tobytes() == b.x.tobytes()
    assert a.history == b.history


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 6), p=st.integers(1, 3))
def test_equality_qp_matches_kkt_solve(seed, n, p):
    """Random convex QPs with linear equalities against a direct KKT solve."""
    p = min(p, n - 1)
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n))
    A = M @ M.T + np.eye(n)
    b = rng.normal(size=n)
    C = rng.normal(size=(p, n))
    d = rng.normal(size=p)
    nlp = NlpProblem(
        dimension=n,
        objective=lambda x: 0.5 * x @ A @ x - b @ x,
        gradient=lambda x: A @ x - b,
        constraints=lambda x: C @ x - d,
        jacobian=lambda x: C,
        hessian=lambda x, mu: A,
    )
    K = np.block([[A, C.T], [C, np.zeros((p, p))]])
    sol_kkt = np.linalg.solve(K, np.concatenate([b, d]))
    sol = solve(nlp, np.zeros(n), NlpOptions(constraint_tol=1e-9, stationarity_tol=1e-9))
    scale = max(1.0, np.max(np.abs(sol_kkt)))
    np.testing.assert_allclose(sol.x, sol_kkt[:n], atol=1e-6 * scale)
    np.testing.assert_allclose(sol.multipliers, sol_kkt[n:], atol=1e-5 * scale)
