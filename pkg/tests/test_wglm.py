import math

import numpy as np
import pytest
from scipy.optimize import minimize

from mixmarkov.errors import InvalidInputError
from mixmarkov.wglm import WeightedMultinomialProblem, gradient, objective, solve

from oracles import multinomial_objective_direct


def random_problem(rng, m=60, K=3, q=2, zero_frac=0.0):
    X = np.column_stack([np.ones(m), rng.normal(size=(m, q - 1))])
    y = rng.integers(1, K + 1, size=m)
    w = rng.uniform(0, 1, size=m)
    if zero_frac:
        w[rng.random(m) < zero_frac] = 0.0
    return WeightedMultinomialProblem(X, y, w, K)


def fd_gradient(coef, problem, h=1e-6):
    coef = np.asarray(coef, dtype=float)
    g = np.zeros_like(coef)
    for idx in np.ndindex(coef.shape):
        up, dn = coef.copy(), coef.copy()
        up[idx] += h
        dn[idx] -= h
        g[idx] = (objective(up, problem) - objective(dn, problem)) / (2 * h)
    return g


def optimizer_oracle(problem):
    """Generic quasi-Newton on the brute-force objective, no analytic derivatives."""
    km1, q = problem.K - 1, problem.q

    def neg(b):
        return -multinomial_objective_direct(b.reshape(km1, q), problem.X, problem.y, problem.w)

    res = minimize(neg, np.zeros(km1 * q), method="BFGS", options={"gtol": 1e-9})
    res = minimize(neg, res.x, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 20000})
    return -res.fun, res.x.reshape(km1, q)


def test_problem_validation():
    X = np.ones((3, 1))
    with pytest.raises(InvalidInputError):
        WeightedMultinomialProblem(X, [1, 2, 4], [1, 1, 1], 3)
    with pytest.raises(InvalidInputError):
        WeightedMultinomialProblem(X, [1, 2, 3], [1, -1, 1], 3)
    with pytest.raises(InvalidInputError):
        WeightedMultinomialProblem(X, [1, 2], [1, 1], 3)


def test_symmetric_binary_counts_give_zero():
    X = np.ones((10, 1))
    res = solve(WeightedMultinomialProblem(X, [1, 2] * 5, np.ones(10), 2))
    assert res.converged
    np.testing.assert_allclose(res.coef, [[0.0]], atol=1e-12)


def test_intercept_only_closed_form():
    # weighted counts (4, 2, 1) over outcomes 1..3
    X = np.ones((7, 1))
    y = [1, 1, 1, 1, 2, 2, 3]
    problem = WeightedMultinomialProblem(X, y, np.ones(7), 3)
    res = solve(problem)
    assert res.converged
    np.testing.assert_allclose(res.coef[:, 0], [math.log(2 / 4), math.log(1 / 4)], atol=1e-8)
    # the same totals carried by fractional weights
    problem_w = WeightedMultinomialProblem(np.ones((3, 1)), [1, 2, 3], [4.0, 2.0, 1.0], 3)
    np.testing.assert_allclose(solve(problem_w).coef[:, 0],
                               [math.log(0.5), math.log(0.25)], atol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_matches_generic_optimizer(seed):
    rng = np.random.default_rng(seed)
    problem = random_problem(rng)
    res = solve(problem)
    best, coef = optimizer_oracle(problem)
    assert res.converged
    assert res.objective == pytest.approx(best, abs=1e-6)
    assert res.objective >= best - 1e-9
    np.testing.assert_allclose(res.coef, coef, atol=1e-4)


@pytest.mark.parametrize("seed", range(5))
def test_fd_gradient_small_at_solution(seed):
    rng = np.random.default_rng(100 + seed)
    problem = random_problem(rng, m=200, K=4, q=3)
    res = solve(problem)
    assert res.converged
    assert np.abs(fd_gradient(res.coef, problem)).max() < 1e-6


def test_analytic_gradient_matches_fd(rng):
    problem = random_problem(rng, m=40, K=3, q=3)
    coef = rng.normal(size=(2, 3))
    np.testing.assert_allclose(gradient(coef, problem), fd_gradient(coef, problem), atol=1e-6)


def test_weight_scaling_invariance(rng):
    problem = random_problem(rng, m=80, K=3, q=3)
    scaled = WeightedMultinomialProblem(problem.X, problem.y, 10 * problem.w, problem.K)
    a, b = solve(problem), solve(scaled)
    np.testing.assert_allclose(a.coef, b.coef, atol=1e-8)
    assert b.objective == pytest.approx(10 * a.objective, rel=1e-10)


def test_zero_weight_rows_are_noops(rng):
    problem = random_problem(rng, m=90, K=3, q=2, zero_frac=0.3)
    keep = problem.w > 0
    trimmed = WeightedMultinomialProblem(problem.X[keep], problem.y[keep], problem.w[keep], 3)
    a, b = solve(problem), solve(trimmed)
    np.testing.assert_allclose(a.coef, b.coef, atol=1e-12)
    assert a.objective == pytest.approx(b.objective, abs=1e-12)


def test_objective_never_below_init(rng):
    problem = random_problem(rng, m=50, K=3, q=2)
    init = rng.normal(scale=3, size=(2, 2))
    res = solve(problem, init)
    assert res.objective >= objective(init, problem)


def test_degenerate_problem_returns_init():
    problem = WeightedMultinomialProblem(np.ones((4, 2)), [1, 2, 2, 1], np.zeros(4), 2)
    init = np.array([[0.3, -0.1]])
    res = solve(problem, init)
    assert res.degenerate and not res.converged
    np.testing.assert_array_equal(res.coef, init)


def test_separable_data_does_not_crash():
    # outcome 2 exactly when x > 0: the MLE is at infinity
    x = np.linspace(-2, 2, 40)
    X = np.column_stack([np.ones(40), x])
    y = np.where(x > 0, 2, 1)
    problem = WeightedMultinomialProblem(X, y, np.ones(40), 2)
    res = solve(problem)
    assert np.all(np.isfinite(res.coef))
    assert res.coef[0, 1] > 10
    assert res.objective > -1e-6
