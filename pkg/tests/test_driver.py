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

import json
from itertools import groupby

import numpy as np
import pandas as pd
import pytest

from dald.dald_config import AnalyticLinearSpec, DaldConfig, LbfgsbSpec, ProjectedGradientSpec
from dald.dald_errors import ConstraintsPresent, InvalidNetwork, NotApplicable
from dald.model import VariableBlock, build_problem, quadratic_term
from dald.lagrangian import MultiplierState, grad_global_al, primal_residual, update_multipliers
from dald.coordination import HierarchicalNetwork, es_sweep_plan, sequential_chain
from dald.solvers import BlockStatus, solve_block
from dald.problems import lnf_generate
from dald.driver import (
    TRACE_COLUMNS,
    IterationRecord,
    RunStatus,
    RunTrace,
    eps_dual_at,
    inner_should_stop,
    outer_should_stop,
    run_alm,
    run_bcd,
    run_dald,
    vmax_at,
)

from conftest import random_convex_problem, separable_problem

ANALYTIC = AnalyticLinearSpec()
LONG_RUN = 200_000


def chain(n: int, **kwargs):
    return es_sweep_plan(sequential_chain(n), **kwargs)


def assert_descent(trace):
    """the global AL never increases across the block solves of one sweep"""
    for _, group in groupby(trace.descent, key=lambda _d: (_d.k, _d.v)):
        values = [_d.al_value for _d in group]
        assert all(b <= a + 1e-9 * max(1.0, abs(a)) for a, b in zip(values, values[1:])), values


# -----------------------------------------------------------------------------
# criteria
# -----------------------------------------------------------------------------


def test_b4_with_one_sweep_always_stops():
    config = DaldConfig(criterion="B4", v_max=1)
    assert inner_should_stop("B4", 1, 1, 10.0, config)


def test_b1_stops_on_zero_dual():
    assert inner_should_stop("B1", 5, 7, 0.0, DaldConfig())
    assert not inner_should_stop("B1", 5, 7, 1.0, DaldConfig())


def test_b3_schedule():
    config = DaldConfig(criterion="B3", vmax_initial=1, vmax_growth=2.0)
    assert vmax_at(3, config) == 4
    assert not inner_should_stop("B3", 3, 3, 1.0, config)
    assert inner_should_stop("B3", 3, 4, 1.0, config)


def test_b2_schedule():
    config = DaldConfig(criterion="B2", eps_dual_initial=0.1, eps_dual_decay=0.5, eps_dual=1e-3)
    assert eps_dual_at(1, config) == pytest.approx(0.1)
    assert eps_dual_at(2, config) == pytest.approx(0.05)
    assert eps_dual_at(20, config) == pytest.approx(1e-3)
    assert inner_should_stop("B2", 1, 1, 0.08, config)
    assert not inner_should_stop("B2", 3, 1, 0.08, config)


@pytest.mark.parametrize(
    "primal, dual, stop",
    [(0.0, 0.0, True), (1e-4, 1.0, False), (1.0, 1e-4, False)],
)
def test_outer_stop(primal, dual, stop):
    assert outer_should_stop(primal, dual, DaldConfig()) is stop


# -----------------------------------------------------------------------------
# the three-block counterexample
# -----------------------------------------------------------------------------


def test_counterexample_one_sweep_does_not_converge(counterexample):
    config = DaldConfig(criterion="B4", v_max=1, max_cumulative_inner=300)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)

    assert trace.status in (RunStatus.diverged, RunStatus.max_inner)
    assert trace.cumulative_inner <= 300
    assert all(_r.primal_inf > 1e-3 for _r in trace.records)


@pytest.mark.parametrize("v_max", [3, 4, 5])
def test_counterexample_converges_with_enough_sweeps(counterexample, v_max):
    config = DaldConfig(criterion="B4", v_max=v_max)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)

    assert trace.status is RunStatus.converged
    assert np.max(np.abs(trace.x)) <= 1e-3


@pytest.mark.parametrize("v_max", [3, 4, 5])
def test_counterexample_al_vanishes(counterexample, v_max):
    config = DaldConfig(
        criterion="B4", v_max=v_max, eps_pri=1e-7, eps_dual=1e-7, max_outer=100_000, max_cumulative_inner=LONG_RUN
    )
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)

    assert trace.converged
    assert abs(trace.last.al_value) <= 1e-6


def test_counterexample_reaches_the_origin(counterexample):
    config = DaldConfig(criterion="B4", v_max=3, eps_pri=1e-5, eps_dual=1e-5)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)

    assert trace.converged
    assert np.max(np.abs(trace.x)) <= 1e-3
    assert abs(trace.last.al_value) <= 1e-5


def test_counterexample_standard_dald(counterexample):
    config = DaldConfig(criterion="B1", max_cumulative_inner=LONG_RUN)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)
    assert trace.converged
    assert np.max(np.abs(trace.x)) <= 1e-3
    assert trace.standard_exits == len(trace.outer)


def test_counterexample_descent(counterexample):
    config = DaldConfig(criterion="B1", max_cumulative_inner=LONG_RUN, record_descent=True)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)
    assert len(trace.descent) >= 3
    assert_descent(trace)


def test_b1_exit_is_a_sweep_fixed_point(counterexample):
    config = DaldConfig(criterion="B1", eps_dual=1e-6, max_cumulative_inner=LONG_RUN)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)
    assert trace.converged

    # one more sweep at the returned point and multipliers
    state = MultiplierState.initial(3, mu=trace.mu, rho=trace.rho)
    x = trace.x.copy()
    for i in counterexample.block_ids:
        index, part = counterexample.coupling_index(i), counterexample.block_slice(i)
        x[part] = solve_block(ANALYTIC, counterexample, i, x[index], state, x[part]).x_i

    np.testing.assert_allclose(x, trace.x, atol=1e-5)


def test_multiplier_step_is_bounded_at_exit(counterexample):
    config = DaldConfig(criterion="B4", v_max=3)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)
    assert trace.converged

    state = MultiplierState.initial(3, mu=trace.mu, rho=trace.rho)
    step = update_multipliers(state, primal_residual(counterexample, trace.x, state)).mu - state.mu
    assert np.max(np.abs(step)) <= 2.0 * np.max(trace.rho) ** 2 * config.eps_pri


def test_solver_layer_does_not_change_iteration_counts(counterexample):
    config = DaldConfig(criterion="B4", v_max=3)
    exact = run_dald(counterexample, chain(3), ANALYTIC, config)
    iterative = run_dald(counterexample, chain(3), ProjectedGradientSpec(), config)

    assert exact.converged
    assert (iterative.status, iterative.k_final, iterative.cumulative_inner) == (
        exact.status,
        exact.k_final,
        exact.cumulative_inner,
    )
    np.testing.assert_allclose(iterative.x, exact.x, atol=1e-6)


def test_feasible_start_stops_at_first_outer(counterexample):
    trace = run_dald(counterexample, chain(3), ANALYTIC, DaldConfig(), x0=np.zeros(3))
    assert trace.converged
    assert trace.k_final == 1
    assert trace.cumulative_inner == 1


# -----------------------------------------------------------------------------
# reductions
# -----------------------------------------------------------------------------


def test_separable_problem_solved_in_one_sweep():
    problem = separable_problem(3)
    trace = run_dald(problem, chain(3), config=DaldConfig(record_snapshots=True))

    assert trace.converged
    np.testing.assert_allclose(trace.records[0].x, [1.0, 2.0, 3.0], atol=1e-6)


def test_unconstrained_dald_equals_bcd(rng):
    problem = random_convex_problem(rng, n_blocks=3, dim=2, n_constraints=0, bounded=True)
    dald = run_dald(problem, chain(3))
    bcd = run_bcd(problem, chain(3))

    assert dald.records == bcd.records
    np.testing.assert_array_equal(dald.x, bcd.x)


def test_bcd_rejects_constraints(toy):
    with pytest.raises(ConstraintsPresent):
        run_bcd(toy, chain(4))


def test_single_block_dald_equals_alm(rng):
    problem = random_convex_problem(rng, n_blocks=1, dim=3, n_constraints=2)
    config = DaldConfig(criterion="B1", max_cumulative_inner=LONG_RUN)

    dald = run_dald(problem, chain(1), ANALYTIC, config)
    alm = run_alm(problem, ANALYTIC, config)

    assert [(_r.k, _r.v) for _r in dald.records] == [(_r.k, _r.v) for _r in alm.records]
    np.testing.assert_allclose(
        [_r.objective for _r in dald.records], [_r.objective for _r in alm.records], rtol=1e-9, atol=1e-12
    )
    np.testing.assert_allclose(dald.x, alm.x, rtol=1e-9, atol=1e-12)


def test_alm_and_dald_agree(rng):
    problem = random_convex_problem(rng, n_blocks=3, dim=2, n_constraints=2)
    config = DaldConfig(criterion="B1", max_cumulative_inner=LONG_RUN, eps_pri=1e-8, eps_dual=1e-8)

    dald = run_dald(problem, chain(3), ANALYTIC, config)
    alm = run_alm(problem, ANALYTIC, config)

    assert dald.converged and alm.converged
    np.testing.assert_allclose(dald.x, alm.x, atol=1e-4)


# -----------------------------------------------------------------------------
# coordination modes
# -----------------------------------------------------------------------------


@pytest.mark.parametrize("criterion", ["B1", "B2", "B3"])
def test_random_convex_problem_converges(rng, criterion):
    problem = random_convex_problem(rng, n_blocks=3, dim=2, n_constraints=2, n_inequalities=1, bounded=True)
    config = DaldConfig(criterion=criterion, max_cumulative_inner=LONG_RUN, record_descent=True)
    trace = run_dald(problem, chain(3), config=config)

    assert trace.converged
    assert trace.last.primal_inf <= 1e-3
    assert_descent(trace)


def test_partial_cycle_run(rng):
    problem = random_convex_problem(rng, n_blocks=4, dim=1, n_constraints=2)
    plan = chain(4, mode="partial-cycle", quota=2, seed=7)
    trace = run_dald(problem, plan, ANALYTIC, DaldConfig(criterion="B1", max_cumulative_inner=LONG_RUN))
    assert trace.converged


def test_partial_cycle_greedy_run(rng):
    problem = random_convex_problem(rng, n_blocks=4, dim=1, n_constraints=2)
    plan = chain(4, mode="partial-cycle", selection_policy="greedy", quota=2)
    trace = run_dald(problem, plan, ANALYTIC, DaldConfig(criterion="B1", max_cumulative_inner=LONG_RUN))
    assert trace.converged


def test_selective_repetitive_run(counterexample):
    plan = chain(3, mode="selective-repetitive", repeats={1: 2})
    config = DaldConfig(criterion="B1", max_cumulative_inner=LONG_RUN, record_descent=True)
    trace = run_dald(counterexample, plan, ANALYTIC, config)

    assert trace.converged
    assert_descent(trace)
    # four solves per sweep
    first = [_d for _d in trace.descent if (_d.k, _d.v) == (1, 1)]
    assert [_d.block_id for _d in first] == [1, 2, 3, 1]


def test_seeded_runs_are_reproducible(rng):
    problem = random_convex_problem(rng, n_blocks=4, dim=1, n_constraints=2)
    plan = chain(4, mode="partial-cycle", quota=2, seed=11)
    a = run_dald(problem, plan, ANALYTIC, DaldConfig())
    b = run_dald(problem, plan, ANALYTIC, DaldConfig())
    assert a.records == b.records


def test_parallel_stage_matches_serial():
    blocks = [VariableBlock.unbounded(_i) for _i in (1, 2, 3)]
    terms = [
        quadratic_term("f1", [(1, 0)], hessian=[[2.0]], linear=[-2.0]),
        quadratic_term("f2", [(2, 0)], hessian=[[2.0]], linear=[-4.0]),
        quadratic_term("f13", [(1, 0), (3, 0)], hessian=[[1.0, -1.0], [-1.0, 1.0]]),
        quadratic_term("f23", [(2, 0), (3, 0)], hessian=[[1.0, -1.0], [-1.0, 1.0]]),
    ]
    problem = build_problem(blocks, terms, [])
    plan = es_sweep_plan(HierarchicalNetwork.from_edges(3, [(1, 3), (2, 3)]))

    serial = run_dald(problem, plan, config=DaldConfig(parallel_stages=False))
    parallel = run_dald(problem, plan, config=DaldConfig(parallel_stages=True))

    assert serial.warnings == []
    assert serial.records == parallel.records


def test_coupled_stage_is_serialized(counterexample):
    plan = es_sweep_plan(HierarchicalNetwork.from_edges(3, [(1, 3), (2, 3)]))
    config = DaldConfig(criterion="B1", max_cumulative_inner=LONG_RUN, record_descent=True)
    trace = run_dald(counterexample, plan, ANALYTIC, config)

    assert len(trace.warnings) == 1
    assert trace.converged
    assert_descent(trace)


def test_lbfgsb_solver_layer(rng):
    problem = random_convex_problem(rng, n_blocks=3, dim=2, n_constraints=2, bounded=True)
    trace = run_dald(problem, chain(3), LbfgsbSpec(), DaldConfig(criterion="B3", max_cumulative_inner=LONG_RUN))
    assert trace.converged


def test_block_statuses_are_counted(rng):
    problem = random_convex_problem(rng, n_blocks=3, dim=2, n_constraints=2, bounded=True)
    trace = run_dald(problem, chain(3), config=DaldConfig(criterion="B4", v_max=2, max_outer=5))

    assert sum(trace.block_statuses.values()) == 3 * trace.cumulative_inner
    assert BlockStatus.max_iters.value not in trace.block_statuses
    assert trace.summary()["block_statuses"] == dict(trace.block_statuses)


def test_lnf_sweeps_descend():
    problem, _ = lnf_generate(4, 4, seed=5, n_partitions=2)
    config = DaldConfig(criterion="B4", v_max=2, max_outer=5, record_descent=True)
    trace = run_dald(problem, chain(2), LbfgsbSpec(), config)

    assert len(trace.descent) == 2 * trace.cumulative_inner
    assert_descent(trace)


def test_toy_is_feasible_and_stationary(toy):
    config = DaldConfig(criterion="B1", eps_dual=1e-6, max_outer=100_000, max_cumulative_inner=LONG_RUN)
    trace = run_dald(toy, chain(4), config=config)

    assert trace.converged
    assert trace.last.primal_inf <= config.eps_pri
    assert np.all(trace.x >= 1.0) and np.all(trace.x <= 7.0)

    # the projected gradient of the AL at the returned point and multipliers
    state = MultiplierState.initial(toy.n_constraints, mu=trace.mu, rho=trace.rho)
    step = toy.project(trace.x - grad_global_al(toy, trace.x, state)) - trace.x
    assert np.max(np.abs(step)) <= 1e-3


# -----------------------------------------------------------------------------
# failures and limits
# -----------------------------------------------------------------------------


def test_plan_must_match_problem(toy):
    with pytest.raises(InvalidNetwork):
        run_dald(toy, chain(3))


def test_solver_failure_names_the_block(toy):
    with pytest.raises(NotApplicable, match="block 1 at k=1 v=1"):
        run_dald(toy, chain(4), ANALYTIC)


def test_max_outer_reached(counterexample):
    config = DaldConfig(criterion="B4", v_max=3, max_outer=2)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)
    assert trace.status is RunStatus.max_outer
    assert trace.k_final == 2


def test_divergence_detected(counterexample):
    config = DaldConfig(criterion="B4", v_max=1, divergence_norm=10.0, max_cumulative_inner=10_000)
    trace = run_dald(counterexample, chain(3), ANALYTIC, config)
    assert trace.status is RunStatus.diverged


def test_overflowing_run_ends_as_diverged(counterexample, tmp_path):
    # the AL overflows long before the iterate norm reaches the limit
    config = DaldConfig(
        criterion="B4", v_max=1, divergence_norm=1e300, max_outer=1_000_000, max_cumulative_inner=1_000_000
    )
    trace = run_dald(counterexample, chain(3), ANALYTIC, config, x0=np.full(3, 1e100))

    assert trace.status is RunStatus.diverged
    assert not np.isfinite(trace.last.al_value) or np.max(np.abs(trace.x)) > 1e300

    def reject(constant):
        raise AssertionError(f"summary.json holds the non-JSON constant {constant}")

    trace.write(tmp_path)
    summary = json.loads((tmp_path / "summary.json").read_text(), parse_constant=reject)
    assert summary["status"] == "Diverged"


# -----------------------------------------------------------------------------
# trace output
# -----------------------------------------------------------------------------


def test_trace_files(tmp_path, counterexample):
    trace = run_dald(counterexample, chain(3), ANALYTIC, DaldConfig(criterion="B4", v_max=3))
    trace.write(tmp_path, config=dict(method="dald"))

    header = (tmp_path / "trace.csv").read_text().splitlines()[0]
    assert header == "k,v,cum_inner,objective,al_value,primal_inf,dual_inf"
    assert TRACE_COLUMNS == header.split(",")

    frame = pd.read_csv(tmp_path / "trace.csv")
    assert len(frame) == len(trace.records)
    assert frame["cum_inner"].tolist() == list(range(1, len(trace.records) + 1))

    summary = trace.summary()
    assert summary["status"] == "Converged"
    assert summary["standard_exits"] + summary["capped_exits"] == summary["outer_iterations"]


def test_summary_is_strict_json(tmp_path):
    trace = RunTrace(status=RunStatus.diverged, extras=dict(oracle_gap=float("nan")))
    trace.records.append(
        IterationRecord(k=1, v=1, cum_inner=1, objective=-np.inf, al_value=np.inf, primal_inf=1.0, dual_inf=np.nan)
    )
    trace.write_summary(tmp_path / "summary.json", config=dict(dald=dict(rho_cap=np.inf)))

    text = (tmp_path / "summary.json").read_text()
    assert "Infinity" not in text and "NaN" not in text

    summary = json.loads(text)
    assert (summary["objective"], summary["al_value"], summary["dual_inf"]) == ("-inf", "inf", "nan")
    assert summary["oracle_gap"] == "nan"
    assert summary["config"]["dald"]["rho_cap"] == "inf"
