import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riesz_balayage.qp import ConeQPProblem, brute_force, kkt_residuals, project_simplex, solve_cone, solve_simplex

K2 = np.array([[2.0, 1.0], [1.0, 2.0]])


def random_spd(rng, n):
    A = rng.normal(size=(n, n))
    return A @ A.T + 0.1 * np.eye(n)


def test_interior_cone_solution():
    sol = solve_cone(K2, [1.0, 1.0])
    np.testing.assert_allclose(sol.w, [1 / 3, 1 / 3], atol=1e-9)
    assert sol.objective == pytest.approx(-2 / 3)
    assert sol.converged


def test_active_constraint_cone_solution():
    sol = solve_cone(K2, [1.0, 0.0])
    np.testing.assert_allclose(sol.w, [0.5, 0.0], atol=1e-9)
    g = K2 @ sol.w - np.array([1.0, 0.0])
    np.testing.assert_allclose(g, [0.0, 0.5], atol=1e-9)


def test_zero_field_gives_zero():
    sol = solve_cone(K2, [0.0, 0.0])
    np.testing.assert_array_equal(sol.w, [0.0, 0.0])


def test_simplex_small_cases():
    sol = solve_simplex(np.eye(2), [0.0, 0.0])
    np.testing.assert_allclose(sol.w, [0.5, 0.5])
    assert sol.multiplier_c == pytest.approx(0.5)
    one = solve_simplex(np.array([[3.0]]), [1.0])
    assert one.w.tolist() == [1.0] and one.multiplier_c == pytest.approx(2.0)


def test_simplex_enumeration_example():
    # supports {1}, {2}, {1,2}: only {1} satisfies the KKT conditions
    sol = solve_simplex(K2, [1.0, 0.0])
    ref = brute_force(ConeQPProblem(K2, np.array([1.0, 0.0]), "simplex"))
    np.testing.assert_allclose(sol.w, ref.w, atol=1e-9)
    np.testing.assert_allclose(sol.w, [1.0, 0.0], atol=1e-9)


def test_brute_force_hand_case():
    ref = brute_force(ConeQPProblem(K2, np.array([1.0, 0.0])))
    np.testing.assert_allclose(ref.w, [0.5, 0.0])


def test_brute_force_size_limit():
    with pytest.raises(ValueError):
        brute_force(ConeQPProblem(np.eye(13), np.ones(13)))


def test_problem_validation():
    with pytest.raises(ValueError):
        ConeQPProblem(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        ConeQPProblem(np.eye(2), np.ones(2), "box")


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_project_simplex_properties(v):
    v = np.array(v)
    p = project_simplex(v)
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(project_simplex(p), p, atol=1e-12)
    # optimality: v - p is constant on the support and no larger off it
    r = v - p
    supp = p > 0
    assert np.ptp(r[supp]) < 1e-9
    assert np.all(r[~supp] <= r[supp].max() + 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.sampled_from(["nonneg_cone", "simplex"]))
def test_solvers_match_brute_force(seed, n, constraint):
    rng = np.random.default_rng(seed)
    p = ConeQPProblem(random_spd(rng, n), rng.normal(size=n), constraint)
    tol = 1e-8
    sol = (solve_cone if constraint == "nonneg_cone" else solve_simplex)(p, tol=tol)
    ref = brute_force(p)
    assert sol.converged
    assert abs(sol.objective - ref.objective) <= 10 * tol * max(1.0, abs(ref.objective))
    assert np.linalg.norm(sol.w - ref.w) <= 100 * tol * max(1.0, np.linalg.norm(ref.w))


def test_kkt_residuals_at_solution():
    rng = np.random.default_rng(3)
    p = ConeQPProblem(random_spd(rng, 6), rng.normal(size=6))
    sol = solve_cone(p)
    stat, comp, c = kkt_residuals(p, sol.w)
    assert stat <= 1e-8 and comp <= 1e-8 and c is None


def test_warm_start_and_history():
    rng = np.random.default_rng(4)
    K = random_spd(rng, 20)
    b = rng.random(20)
    cold = solve_cone(K, b)
    warm = solve_cone(K, b, x0=cold.w)
    assert warm.iterations <= cold.iterations
    np.testing.assert_allclose(warm.w, cold.w, atol=1e-7)
