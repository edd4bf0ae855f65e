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

# =============================================================================
# This file contains the three-loop driver:
#
#   outer loop   multipliers and penalties, updated from the primal residual
#                after every inner loop, x^{k+1,0} = x^{k,v}
#   inner loop   sweeps over the subproblems in the order of the sweep plan,
#                until the configured criterion B1..B4 holds
#   solver layer one `solve_block` call per planned solve
#
# The method of multipliers is the driver applied to the merged single-block
# problem; block coordinate descent is the driver on a problem without
# constraints.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Iterable, Optional, Sequence, Set

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_config import DaldConfig, ProjectedGradientSpec, SolverSpec
from dald.dald_errors import ConstraintsPresent, InvalidNetwork, SolverFailure
from dald.dald_logger import get_logger
from dald.model import DecomposedProblem
from dald.lagrangian import (
    MultiplierState,
    Residuals,
    compute_residuals,
    eval_global_al,
    update_multipliers,
    update_penalty,
)
from dald.coordination import (
    SweepPlan,
    Stage,
    coupled_pairs,
    es_sweep_plan,
    select_blocks,
    sequential_chain,
    validate_stage_coupling,
)
from dald.solvers import BlockSolution, BlockStatus, solve_block
from .dald_criteria import dual_tolerance_met, inner_should_stop, outer_should_stop
from .dald_trace import DescentRecord, IterationRecord, OuterRecord, RunStatus, RunTrace

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["run_dald", "run_alm", "run_bcd"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


def run_dald(
    problem: DecomposedProblem,
    plan: SweepPlan,
    solver: Optional[SolverSpec] = None,
    config: Optional[DaldConfig] = None,
    x0: Optional[Sequence[float]] = None,
    method: str = "dald",
) -> RunTrace:
    """
    Run the distributed augmented Lagrangian decomposition.

    Parameters
    ----------
    problem:
        The decomposed problem.

    plan:
        The sweep plan over the problem's blocks.

    solver:
        The solver-layer specification; projected gradient by default.

    config:
        The driver configuration; defaults mu=0, rho=1, eps = 1e-3, B1.

    x0:
        The initial point x^{1,0}; defaults to the problem's default start,
        else the origin.  Projected onto the boxes.

    Returns
    -------
    RunTrace
        The trace; its status tells how the run ended.

    Raises
    ------
    InvalidNetwork
        The plan does not cover exactly the problem's blocks.

    SolverFailure
        A block solve failed; the message names the block and iteration.
    """
    runner = _DaldRun(problem, plan, solver or ProjectedGradientSpec(), config or DaldConfig(), method)
    return runner.run(x0)


def run_alm(
    problem: DecomposedProblem,
    solver: Optional[SolverSpec] = None,
    config: Optional[DaldConfig] = None,
    x0: Optional[Sequence[float]] = None,
) -> RunTrace:
    """
    The method of multipliers: every inner step minimizes the global AL
    jointly over all variables, which is the driver with criterion B1 on the
    problem with all blocks merged into one.
    """
    config = (config or DaldConfig()).copy(update=dict(criterion="B1"))
    plan = es_sweep_plan(sequential_chain(1))
    trace = run_dald(problem.merged(), plan, solver, config, x0, method="alm")
    trace.problem_name = problem.name
    return trace


def run_bcd(
    problem: DecomposedProblem,
    plan: SweepPlan,
    solver: Optional[SolverSpec] = None,
    config: Optional[DaldConfig] = None,
    x0: Optional[Sequence[float]] = None,
) -> RunTrace:
    """
    Cyclic block minimization of f, stopping when ||D||_inf <= eps_dual.

    Raises
    ------
    ConstraintsPresent
        The problem has constraints.
    """
    if problem.is_constrained:
        raise ConstraintsPresent(
            f"{problem.name or 'problem'}: block coordinate descent needs a problem "
            f"without constraints, found {problem.n_constraints}"
        )

    config = (config or DaldConfig()).copy(update=dict(criterion="B1"))
    return run_dald(problem, plan, solver, config, x0, method="bcd")


# -----------------------------------------------------------------------------
#
#                            PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


class _DaldRun:
    """the state of one driver run"""

    def __init__(
        self,
        problem: DecomposedProblem,
        plan: SweepPlan,
        solver: SolverSpec,
        config: DaldConfig,
        method: str,
    ):
        if plan.node_ids != problem.block_ids:
            raise InvalidNetwork(
                f"plan covers subproblems {list(plan.node_ids)}, "
                f"problem {problem.name!r} has {list(problem.block_ids)}"
            )

        self.problem = problem
        self.plan = plan
        self.solver = solver
        self.config = config
        self.name = f"{method}:{problem.name or 'problem'}"
        self.rng = np.random.default_rng(plan.seed)
        self.trace = RunTrace(method=method, problem_name=problem.name)
        self.trace.warnings.extend(validate_stage_coupling(problem, plan))

        # the owning block of every coupled element, per block
        self._owners = {
            _i: np.array([_ref[0] for _ref in problem.coupling_refs(_i)], dtype=int)
            for _i in problem.block_ids
        }
        self._serial: Dict[Stage, bool] = dict()

        self.state = MultiplierState.initial(
            problem.n_constraints,
            mu=config.mu_initial,
            rho=config.rho_initial,
            penalty_growth=config.penalty_growth,
            rho_cap=config.rho_cap,
        )

        self.k = 0
        self.v = 0
        self.cum_inner = 0
        self.last_dual: Dict[int, float] = {_i: np.inf for _i in problem.block_ids}

    # -------------------------------------------------------------------------
    # Main loop
    # -------------------------------------------------------------------------

    def run(self, x0: Optional[Sequence[float]]) -> RunTrace:
        log = get_logger()
        problem, config = self.problem, self.config
        started = time.perf_counter()

        x = problem.start_point() if x0 is None else np.asarray(x0, dtype=float)
        problem.check_vector(x)
        x = problem.project(x)

        pool = ThreadPoolExecutor() if config.parallel_stages else None

        try:
            for k in range(1, config.max_outer + 1):
                self.k = k
                x, residuals, status = self._inner_loop(x, pool)

                if status is None:
                    if outer_should_stop(residuals.primal_inf_norm, residuals.dual_inf_norm, config):
                        status = RunStatus.converged
                    elif self.cum_inner >= config.max_cumulative_inner:
                        status = RunStatus.max_inner
                    elif k == config.max_outer:
                        status = RunStatus.max_outer

                if status is not None:
                    break

                self.state = update_penalty(update_multipliers(self.state, residuals.primal))
        finally:
            if pool is not None:
                pool.shutdown()

        trace = self.trace
        trace.status = status
        trace.x = x
        trace.mu = self.state.mu.copy()
        trace.rho = self.state.rho.copy()
        trace.k_final = self.k
        trace.cumulative_inner = self.cum_inner
        trace.wall_time = time.perf_counter() - started

        log.info(
            f"{self.name}: {status.value} after {self.k} outer iterations, "
            f"{self.cum_inner} sweeps, ||C||={residuals.primal_inf_norm:.3e}, "
            f"||D||={residuals.dual_inf_norm:.3e}"
        )
        return trace

    def _inner_loop(self, x: np.ndarray, pool):
        """
        Returns
        -------
        (x, residuals, status) where status is None unless the run must end.
        """
        log = get_logger()
        problem, config, k = self.problem, self.config, self.k
        all_blocks = set(problem.block_ids)
        solved_since_update: Set[int] = set()

        v = 0
        while True:
            v += 1
            self.v = v
            self.cum_inner += 1

            x_prev = x.copy()
            stages = select_blocks(self.plan, self.cum_inner, self.rng, self.last_dual)
            x, solved = self._sweep(x_prev, stages, pool)

            residuals = compute_residuals(problem, x_prev, x, self.state)
            for block_id in solved:
                self.last_dual[block_id] = float(np.max(np.abs(residuals.dual[block_id])))
            solved_since_update |= solved

            diverged = self._diverged(x, residuals)
            record = self._record(x, residuals)
            log.debug(
                f"{self.name}: k={k} v={v} ||C||={residuals.primal_inf_norm:.3e} "
                f"||D||={residuals.dual_inf_norm:.3e}"
            )

            if diverged or not np.isfinite(record.al_value):
                log.warning(f"{self.name}: diverged at k={k} v={v}")
                return x, residuals, RunStatus.diverged

            stop = inner_should_stop(config.criterion, k, v, residuals.dual_inf_norm, config)
            if stop and self.plan.mode == "partial-cycle":
                stop = solved_since_update == all_blocks

            if stop:
                on_tolerance = dual_tolerance_met(config.criterion, k, residuals.dual_inf_norm, config)
                self.trace.outer.append(
                    OuterRecord(
                        k=k,
                        v_exit=v,
                        on_tolerance=on_tolerance,
                        primal_inf=residuals.primal_inf_norm,
                        dual_inf=residuals.dual_inf_norm,
                    )
                )
                log.info(
                    f"{self.name}: outer {k}: inner exit at v={v} "
                    f"({'tolerance' if on_tolerance else 'sweep cap'}), "
                    f"||C||={residuals.primal_inf_norm:.3e} ||D||={residuals.dual_inf_norm:.3e}"
                )
                return x, residuals, None

            if self.cum_inner >= config.max_cumulative_inner:
                return x, residuals, RunStatus.max_inner

    # -------------------------------------------------------------------------
    # One sweep
    # -------------------------------------------------------------------------

    def _sweep(self, x_prev: np.ndarray, stages: Iterable[Stage], pool):
        """
        Execute the stages of one sweep.  A block reads the current sweep's
        value of every predecessor already solved in this sweep, and the
        previous sweep's value of everything else.  Repeated solves and blocks
        of a serialized stage also read the values solved before them.
        """
        x = x_prev.copy()
        solved: Set[int] = set()

        for stage in stages:
            repeat = any(_i in solved for _i in stage)

            if self._is_serial(stage) or repeat:
                done_in_stage: Set[int] = set()
                for block_id in stage:
                    if repeat:
                        fresh = solved
                    else:
                        fresh = (self.plan.predecessors[block_id] & solved) | done_in_stage
                    sol = self._solve(block_id, x, x_prev, fresh)
                    x[self.problem.block_slice(block_id)] = sol.x_i
                    self._tally(block_id, sol)
                    done_in_stage.add(block_id)
                    self._record_descent(block_id, x)
                solved = solved | done_in_stage
                continue

            jobs = [
                (_i, self._coupled_values(_i, x, x_prev, self.plan.predecessors[_i] & solved))
                for _i in stage
            ]
            warm = {_i: x[self.problem.block_slice(_i)].copy() for _i in stage}

            if pool is not None and len(jobs) > 1:
                results = list(
                    pool.map(lambda _job: self._solve_with(_job[0], _job[1], warm[_job[0]]), jobs)
                )
            else:
                results = [self._solve_with(_i, _w, warm[_i]) for _i, _w in jobs]

            for (block_id, _), sol in zip(jobs, results):
                x[self.problem.block_slice(block_id)] = sol.x_i
                self._tally(block_id, sol)
                self._record_descent(block_id, x)

            solved = solved | set(stage)

        return x, solved

    def _is_serial(self, stage: Stage) -> bool:
        if stage not in self._serial:
            self._serial[stage] = bool(coupled_pairs(self.problem, stage))
        return self._serial[stage]

    def _coupled_values(
        self, block_id: int, x: np.ndarray, x_prev: np.ndarray, fresh: Set[int]
    ) -> np.ndarray:
        index = self.problem.coupling_index(block_id)
        use_fresh = np.isin(self._owners[block_id], list(fresh))
        return np.where(use_fresh, x[index], x_prev[index])

    def _solve(self, block_id: int, x: np.ndarray, x_prev: np.ndarray, fresh: Set[int]) -> BlockSolution:
        w = self._coupled_values(block_id, x, x_prev, fresh)
        return self._solve_with(block_id, w, x[self.problem.block_slice(block_id)].copy())

    def _solve_with(self, block_id: int, w: np.ndarray, warm_start: np.ndarray) -> BlockSolution:
        try:
            return solve_block(self.solver, self.problem, block_id, w, self.state, warm_start)
        except SolverFailure as exc:
            rt_exc = type(exc)(
                f"{self.name}: block {block_id} at k={self.k} v={self.v}: {str(exc)}"
            )
            rt_exc.__traceback__ = exc.__traceback__
            raise rt_exc

    # -------------------------------------------------------------------------
    # Recording
    # -------------------------------------------------------------------------

    def _record(self, x: np.ndarray, residuals: Residuals) -> IterationRecord:
        with np.errstate(over="ignore", invalid="ignore"):
            objective = self.problem.objective(x)

        record = IterationRecord(
            k=self.k,
            v=self.v,
            cum_inner=self.cum_inner,
            objective=objective,
            al_value=eval_global_al(self.problem, x, self.state, strict=False),
            primal_inf=residuals.primal_inf_norm,
            dual_inf=residuals.dual_inf_norm,
            x=x.copy() if self.config.record_snapshots else None,
        )
        self.trace.records.append(record)
        return record

    def _tally(self, block_id: int, sol: BlockSolution):
        self.trace.block_statuses[sol.status.value] += 1
        if sol.status is not BlockStatus.converged:
            get_logger().debug(
                f"{self.name}: block {block_id} at k={self.k} v={self.v}: {sol.status.value} "
                f"after {sol.iters_used} iterations, stationarity {sol.stationarity:.3e}"
            )

    def _record_descent(self, block_id: int, x: np.ndarray):
        if not self.config.record_descent:
            return

        self.trace.descent.append(
            DescentRecord(
                k=self.k,
                v=self.v,
                block_id=block_id,
                al_value=eval_global_al(self.problem, x, self.state, strict=False),
            )
        )

    def _diverged(self, x: np.ndarray, residuals: Residuals) -> bool:
        limit = self.config.divergence_norm
        if not np.all(np.isfinite(x)) or not np.isfinite(residuals.primal_inf_norm):
            return True
        return float(np.max(np.abs(x), initial=0.0)) > limit or residuals.primal_inf_norm > limit
