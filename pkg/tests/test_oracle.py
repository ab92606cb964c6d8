"""
Tests for the exact-constraint reference solvers

Validates:
- LcpStepProblem shape / diagonal checks
- PSOR complementarity on dense and sparse operators
- NotConverged after the sweep cap
- Reference marches against the penalized ones
"""
import numpy as np
import pytest
import scipy.sparse as sps

from src.errors import NotConverged, ProblemSpecInvalid, ShapeMismatch
from src.oracle import LcpStepProblem, psor_run, psor_solve, solve_reference
from src.problems import build_builtin
from src.solvers import march, march_unconstrained


def _tridiagonal(n: int, diag: float = 2.5) -> sps.csr_matrix:
    return sps.diags([-np.ones(n - 1), diag * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()


def _problem(n: int = 30, seed: int = 3, dense: bool = False) -> LcpStepProblem:
    rng = np.random.default_rng(seed)
    operator = _tridiagonal(n)
    if dense:
        operator = operator.toarray()
    return LcpStepProblem(operator, rng.normal(size=n), 0.5 * rng.normal(size=n), np.ones(n, dtype=bool))


def test_problem_validation():
    with pytest.raises(ShapeMismatch):
        LcpStepProblem(_tridiagonal(4), np.zeros(5), np.zeros(5), np.ones(5, dtype=bool))
    with pytest.raises(ShapeMismatch):
        LcpStepProblem(_tridiagonal(4), np.zeros(4), np.zeros(3), np.ones(4, dtype=bool))
    with pytest.raises(ProblemSpecInvalid):
        LcpStepProblem(-_tridiagonal(4), np.zeros(4), np.zeros(4), np.ones(4, dtype=bool))


@pytest.mark.parametrize("dense", [False, True])
def test_psor_solves_complementarity(dense):
    problem = _problem(dense=dense)
    z = psor_solve(problem, tol=1e-10)

    assert problem.defect(z) <= 1e-10
    assert np.all(z >= problem.obstacle - 1e-12)
    assert problem.complementarity(z) <= 1e-8


def test_dense_and_sparse_agree():
    sparse = psor_solve(_problem(dense=False), tol=1e-11)
    dense = psor_solve(_problem(dense=True), tol=1e-11)
    np.testing.assert_allclose(sparse, dense, atol=1e-9)


def test_sweep_order_does_not_change_solution():
    problem = _problem()
    forward = psor_solve(problem, tol=1e-11)
    reverse = psor_solve(problem, tol=1e-11, order="reverse")
    np.testing.assert_allclose(forward, reverse, atol=1e-9)


def test_inactive_obstacle_gives_linear_solution():
    n = 20
    operator = _tridiagonal(n)
    rhs = np.ones(n)
    problem = LcpStepProblem(operator, rhs, np.full(n, -100.0), np.ones(n, dtype=bool))
    z = psor_solve(problem, tol=1e-11)
    np.testing.assert_allclose(z, np.linalg.solve(operator.toarray(), rhs), atol=1e-9)


def test_unconstrained_nodes_solve_equation():
    n = 20
    mask = np.zeros(n, dtype=bool)
    mask[::2] = True
    problem = LcpStepProblem(_tridiagonal(n), np.linspace(-1.0, 1.0, n), np.zeros(n), mask)
    outcome = psor_run(problem, tol=1e-10)
    r = problem.apply(outcome.z) - problem.rhs

    assert np.max(np.abs(r[~mask])) <= 1e-10
    assert np.all(r[mask] >= -1e-10)
    assert outcome.sweeps >= 1


def test_psor_argument_checks():
    problem = _problem(n=5)
    with pytest.raises(ValueError):
        psor_solve(problem, omega=2.0)
    with pytest.raises(ValueError):
        psor_solve(problem, tol=0.0)
    with pytest.raises(ValueError):
        psor_solve(problem, order="sideways")


def test_psor_not_converged():
    n = 50
    problem = LcpStepProblem(_tridiagonal(n, diag=2.0), np.ones(n), np.full(n, -10.0), np.ones(n, dtype=bool))
    with pytest.raises(NotConverged) as excinfo:
        psor_solve(problem, tol=1e-14, max_iters=1)
    assert excinfo.value.max_iters == 1
    assert excinfo.value.defect > 1e-14


def test_reference_far_obstacle_is_linear_march():
    spec, _ = build_builtin("unconstrained-heat", n_space=33, n_time=21)
    reference = solve_reference(spec)
    linear = march_unconstrained(spec)

    np.testing.assert_allclose(reference.u.values, linear.u.values, atol=1e-14)
    assert all(r.newton_iters == 0 for r in reference.per_step)
    assert reference.name == "unconstrained-heat:reference"


def test_reference_thick_active_respects_obstacle():
    spec, _ = build_builtin("thick-active", n_space=65, n_time=17, eps=1e-2)
    reference = solve_reference(spec)
    penalized = march(spec)

    assert reference.min_gap() >= -1e-8
    assert reference.eps_used == 0.0
    assert np.max(np.abs(penalized.u.values - reference.u.values)) <= 3e-2


def test_reference_signorini_and_fractional():
    signorini, _ = build_builtin("signorini-active", n_space=17, n_time=9)
    assert solve_reference(signorini).min_gap() >= -1e-8

    fractional, _ = build_builtin("fractional-active", n_space=32, n_time=9)
    assert solve_reference(fractional).min_gap() >= -1e-8


def test_no_reference_for_dynamic_prototype():
    spec, _ = build_builtin("dynamic-caloric", n_space=9, n_time=5)
    with pytest.raises(ProblemSpecInvalid):
        solve_reference(spec)
