#  Copyright 2026 DALD Developers
#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.

import itertools
import time

import numpy as np
import pytest

from dald.dald_config import AnalyticLinearSpec, LbfgsbSpec, ProjectedGradientSpec
from dald.dald_errors import DaldError, NonFiniteValue, NotApplicable, SingularNormal
from dald.model import (
    VariableBlock,
    build_problem,
    callback_constraint,
    callback_term,
    expression_constraint,
    quadratic_term,
)
from dald.lagrangian import MultiplierState, eval_local_al
from dald.problems import COUNTEREXAMPLE_MATRIX
from dald.solvers import (
    BlockStatus,
    finite_difference_gradient,
    solve_block,
    solve_block_analytic_linear,
    solve_block_lbfgsb,
    solve_block_projected_gradient,
)

from conftest import random_convex_problem


def _shifted_square(lower: float, upper: float):
    """(x - 3)^2 over the box [lower, upper]"""
    return build_problem(
        [VariableBlock(1, 1, lower, upper)],
        [quadratic_term("f", [(1, 0)], hessian=[[2.0]], linear=[-6.0], constant=9.0)],
        [],
    )


def _box_qp(seed: int = 3, dim: int = 5):
    """1/2 x'Hx + g'x over [-1, 1]^dim, H = m m' + 0.1 I"""
    rng = np.random.default_rng(seed)
    m = rng.normal(size=dim)
    hessian = np.outer(m, m) + 0.1 * np.eye(dim)
    linear = 3.0 * rng.normal(size=dim)
    problem = build_problem(
        [VariableBlock(1, dim, -1.0, 1.0)],
        [quadratic_term("f", [(1, _j) for _j in range(dim)], hessian=hessian, linear=linear)],
        [],
    )
    return problem, hessian, linear


def _box_qp_minimizer(hessian, linear, lower=-1.0, upper=1.0, tol=1e-9) -> np.ndarray:
    """the KKT point, found by trying every assignment of free / lower / upper"""
    for assignment in itertools.product((None, lower, upper), repeat=linear.size):
        fixed = np.array([_a is not None for _a in assignment])
        free = ~fixed
        x = np.array([0.0 if _a is None else _a for _a in assignment])

        if free.any():
            rhs = -(linear[free] + hessian[np.ix_(free, fixed)] @ x[fixed])
            x[free] = np.linalg.solve(hessian[np.ix_(free, free)], rhs)

        if np.any(x < lower - tol) or np.any(x > upper + tol):
            continue

        grad = hessian @ x + linear
        if np.all(grad[fixed & (x == lower)] >= -tol) and np.all(grad[fixed & (x == upper)] <= tol):
            return x

    raise AssertionError("no active set satisfies the KKT conditions")


# -----------------------------------------------------------------------------
# projected gradient
# -----------------------------------------------------------------------------


def test_projected_gradient_interior_minimum():
    problem = _shifted_square(0.0, 10.0)
    sol = solve_block_projected_gradient(problem, 1, np.zeros(0), MultiplierState.initial(0), np.zeros(1))
    assert sol.status is BlockStatus.converged
    assert sol.x_i[0] == pytest.approx(3.0, abs=1e-8)


def test_projected_gradient_bound_binds():
    problem = _shifted_square(0.0, 2.0)
    sol = solve_block_projected_gradient(problem, 1, np.zeros(0), MultiplierState.initial(0), np.zeros(1))
    assert sol.x_i[0] == pytest.approx(2.0)
    assert sol.value == pytest.approx(1.0)


def test_projected_gradient_iteration_cap():
    problem = _shifted_square(-100.0, 100.0)
    spec = ProjectedGradientSpec(max_iters=1, initial_step=1e-3)
    sol = solve_block(spec, problem, 1, np.zeros(0), MultiplierState.initial(0), np.array([-50.0]))
    assert sol.status is BlockStatus.max_iters
    assert sol.iters_used == 1


def test_projected_gradient_never_worse_than_warm_start(rng):
    problem = random_convex_problem(rng, n_blocks=3, dim=2, n_constraints=2, n_inequalities=1, bounded=True)
    state = MultiplierState.initial(3, mu=[0.3, -0.2, 0.1], rho=1.0)
    x = rng.uniform(-5.0, 5.0, size=problem.n_vars)

    for i in problem.block_ids:
        w = x[problem.coupling_index(i)]
        warm = x[problem.block_slice(i)]
        sol = solve_block_projected_gradient(problem, i, w, state, warm)
        assert sol.value <= eval_local_al(problem, i, warm, w, state) + 1e-12
        assert np.all(sol.x_i >= -5.0) and np.all(sol.x_i <= 5.0)


def test_non_finite_objective_raises():
    problem = build_problem(
        [VariableBlock.unbounded(1)],
        [callback_term("f", [(1, 0)], lambda z: float("nan"), lambda z: np.zeros(1))],
        [],
    )
    with pytest.raises(NonFiniteValue):
        solve_block_projected_gradient(problem, 1, np.zeros(0), MultiplierState.initial(0), np.zeros(1))


def test_exp_constraint_overflow_raises_non_finite():
    problem = build_problem(
        [VariableBlock.unbounded(1)],
        [],
        [expression_constraint("c", exp=[((1, 0), 1.0)], constant=-1.0)],
    )
    with pytest.raises(NonFiniteValue) as excinfo:
        solve_block_projected_gradient(problem, 1, np.zeros(0), MultiplierState.initial(1), np.array([800.0]))
    assert isinstance(excinfo.value, DaldError)


def test_projected_gradient_box_qp_kkt():
    problem, hessian, linear = _box_qp()
    expected = _box_qp_minimizer(hessian, linear)
    spec = ProjectedGradientSpec()

    started = time.perf_counter()
    sol = solve_block(spec, problem, 1, np.zeros(0), MultiplierState.initial(0), np.zeros(5))
    assert time.perf_counter() - started < 5.0

    assert sol.status is BlockStatus.converged
    assert sol.iters_used < spec.max_iters
    np.testing.assert_allclose(sol.x_i, expected, atol=1e-6)
    assert sol.value == pytest.approx(0.5 * expected @ hessian @ expected + linear @ expected, abs=1e-8)


@pytest.mark.parametrize("seed", [4, 5, 6])
def test_projected_gradient_box_qp_other_instances(seed):
    problem, hessian, linear = _box_qp(seed=seed, dim=3)
    sol = solve_block(ProjectedGradientSpec(), problem, 1, np.zeros(0), MultiplierState.initial(0), np.zeros(3))
    assert sol.status is not BlockStatus.max_iters
    np.testing.assert_allclose(sol.x_i, _box_qp_minimizer(hessian, linear), atol=1e-6)


def test_projected_gradient_steps_strictly_decrease():
    problem, _, _ = _box_qp()
    state = MultiplierState.initial(0)
    values = [eval_local_al(problem, 1, np.zeros(5), np.zeros(0), state)]

    for n in range(1, 30):
        sol = solve_block(ProjectedGradientSpec(max_iters=n), problem, 1, np.zeros(0), state, np.zeros(5))
        if sol.status is not BlockStatus.max_iters:
            break
        values.append(sol.value)

    assert len(values) > 2
    assert all(b < a for a, b in zip(values, values[1:])), values


def test_projected_gradient_reports_a_stall():
    # |x - 0.1| has a kink at its minimum; no step along the subgradient
    # decreases it there, so the stationarity test can never pass
    problem = build_problem(
        [VariableBlock(1, 1, 0.0, 1.0)],
        [
            callback_term(
                "f",
                [(1, 0)],
                lambda z: float(abs(z[0] - 0.1)),
                lambda z: np.array([1.0 if z[0] >= 0.1 else -1.0]),
            )
        ],
        [],
    )
    spec = ProjectedGradientSpec()
    sol = solve_block(spec, problem, 1, np.zeros(0), MultiplierState.initial(0), np.zeros(1))

    assert sol.status is BlockStatus.stalled
    assert sol.iters_used < spec.max_iters
    assert sol.stationarity > spec.tol_solver
    assert sol.x_i[0] == pytest.approx(0.1, abs=1e-9)


def test_projected_gradient_callback_constraint():
    # x^2 = 1 with the root selected by the box [0.5, 5]
    problem = build_problem(
        [VariableBlock(1, 1, 0.5, 5.0)],
        [],
        [callback_constraint("c", [(1, 0)], lambda z: float(z[0] ** 2 - 1.0), lambda z: 2.0 * z)],
    )
    sol = solve_block_projected_gradient(problem, 1, np.zeros(0), MultiplierState.initial(1), np.array([3.0]))
    assert sol.status is not BlockStatus.max_iters
    assert sol.x_i[0] == pytest.approx(1.0, abs=1e-5)

    with pytest.raises(NotApplicable):
        solve_block_analytic_linear(problem, 1, np.zeros(0), MultiplierState.initial(1))


# -----------------------------------------------------------------------------
# analytic
# -----------------------------------------------------------------------------


def test_analytic_counterexample_zero_input(counterexample):
    sol = solve_block_analytic_linear(counterexample, 1, np.zeros(2), MultiplierState.initial(3))
    assert sol.x_i[0] == pytest.approx(0.0)


def test_analytic_counterexample_closed_form(counterexample):
    # x1 = -A1'(A2 x2 + A3 x3) / ||A1||^2 with x2 = x3 = 1: -(2 + 3 + 4) / 3
    sol = solve_block_analytic_linear(counterexample, 1, np.ones(2), MultiplierState.initial(3))
    assert sol.x_i[0] == pytest.approx(-3.0)


def test_analytic_counterexample_general_closed_form(counterexample, rng):
    a = COUNTEREXAMPLE_MATRIX
    for _ in range(20):
        mu = rng.normal(size=3)
        rho = rng.uniform(0.5, 2.0)
        w = rng.normal(size=2)
        state = MultiplierState.initial(3, mu=mu, rho=rho)

        # minimize mu'(a1 x + r) + rho^2 ||a1 x + r||^2 over x
        r = a[:, 1:] @ w
        expected = -(a[:, 0] @ mu + 2.0 * rho**2 * a[:, 0] @ r) / (2.0 * rho**2 * a[:, 0] @ a[:, 0])

        sol = solve_block_analytic_linear(counterexample, 1, w, state)
        assert sol.x_i[0] == pytest.approx(expected)


def test_solvers_agree_on_an_unbounded_block(rng):
    problem = random_convex_problem(rng, n_blocks=3, dim=2, n_constraints=2)
    state = MultiplierState.initial(2, mu=[0.5, -0.5], rho=1.5)
    x = rng.normal(size=problem.n_vars)
    specs = [AnalyticLinearSpec(), ProjectedGradientSpec(), LbfgsbSpec()]

    started = time.perf_counter()
    for i in problem.block_ids:
        w, warm = x[problem.coupling_index(i)], x[problem.block_slice(i)]
        exact, gradient, quasi_newton = [solve_block(_s, problem, i, w, state, warm) for _s in specs]

        assert gradient.status is BlockStatus.converged
        np.testing.assert_allclose(gradient.x_i, exact.x_i, atol=1e-8)
        np.testing.assert_allclose(quasi_newton.x_i, exact.x_i, atol=1e-6)
        assert quasi_newton.value == pytest.approx(exact.value, abs=1e-8)

    assert time.perf_counter() - started < 10.0


def test_analytic_not_applicable(toy, rng):
    state = MultiplierState.initial(toy.n_constraints)
    with pytest.raises(NotApplicable):
        solve_block_analytic_linear(toy, 4, np.ones(1), state)

    bounded = random_convex_problem(rng, bounded=True)
    with pytest.raises(NotApplicable):
        solve_block_analytic_linear(bounded, 1, np.zeros(bounded.coupling_index(1).size), MultiplierState.initial(2))

    with_inequality = random_convex_problem(rng, n_inequalities=1)
    with pytest.raises(NotApplicable):
        solve_block_analytic_linear(
            with_inequality, 1, np.zeros(with_inequality.coupling_index(1).size), MultiplierState.initial(3)
        )


def test_analytic_singular_normal():
    problem = build_problem(
        [VariableBlock.unbounded(1), VariableBlock.unbounded(2)],
        [quadratic_term("f", [(2, 0)], hessian=[[2.0]])],
        [],
    )
    with pytest.raises(SingularNormal):
        solve_block_analytic_linear(problem, 1, np.zeros(0), MultiplierState.initial(0))


# -----------------------------------------------------------------------------
# L-BFGS-B
# -----------------------------------------------------------------------------


def test_lbfgsb_bound_binds():
    problem = _shifted_square(0.0, 2.0)
    sol = solve_block(LbfgsbSpec(), problem, 1, np.zeros(0), MultiplierState.initial(0), np.zeros(1))
    assert sol.x_i[0] == pytest.approx(2.0)


def test_lbfgsb_matches_projected_gradient(rng):
    problem = random_convex_problem(rng, n_blocks=2, dim=3, n_constraints=1, n_inequalities=1, bounded=True)
    state = MultiplierState.initial(2, mu=[0.1, 0.4], rho=1.0)
    x = rng.uniform(-1.0, 1.0, size=problem.n_vars)

    started = time.perf_counter()
    for i in problem.block_ids:
        w = x[problem.coupling_index(i)]
        warm = x[problem.block_slice(i)]
        a = solve_block_lbfgsb(problem, i, w, state, warm)
        b = solve_block_projected_gradient(problem, i, w, state, warm)
        assert b.status is not BlockStatus.max_iters
        assert a.value == pytest.approx(b.value, abs=1e-7)

    assert time.perf_counter() - started < 10.0


def test_lbfgsb_box_qp_kkt():
    problem, hessian, linear = _box_qp()
    sol = solve_block(LbfgsbSpec(), problem, 1, np.zeros(0), MultiplierState.initial(0), np.zeros(5))
    np.testing.assert_allclose(sol.x_i, _box_qp_minimizer(hessian, linear), atol=1e-5)


def test_unregistered_spec():
    with pytest.raises(NotApplicable):
        solve_block(object(), _shifted_square(0.0, 1.0), 1, np.zeros(0), MultiplierState.initial(0), np.zeros(1))


# -----------------------------------------------------------------------------
# finite differences
# -----------------------------------------------------------------------------


def test_finite_difference_square():
    grad = finite_difference_gradient(lambda _x: float(_x @ _x), np.array([1.0]))
    assert grad[0] == pytest.approx(2.0, abs=1e-6)


def test_finite_difference_constant():
    np.testing.assert_array_equal(
        finite_difference_gradient(lambda _x: 4.0, np.array([1.0, 2.0, 3.0])), np.zeros(3)
    )


def test_finite_difference_step_must_be_positive():
    with pytest.raises(ValueError):
        finite_difference_gradient(lambda _x: 0.0, np.zeros(1), h=0.0)
