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

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from typing import Optional, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_config import ProjectedGradientSpec
from dald.dald_logger import get_logger
from dald.model import DecomposedProblem
from dald.lagrangian import MultiplierState, CouplingValues
from .dald_solver_base import BlockSolution, BlockStatus, LocalObjective, solve_block

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["solve_block_projected_gradient"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

# the smallest backtracking step, relative to the initial step, before the
# line search gives up.
_MIN_STEP_RATIO = 1e-20

# a trial step this small relative to the iterate cannot change it
_STEP_FLOOR = 4.0 * np.finfo(float).eps


def solve_block_projected_gradient(
    problem: DecomposedProblem,
    i: int,
    w_minus_i: CouplingValues,
    state: MultiplierState,
    warm_start: np.ndarray,
    spec: Optional[ProjectedGradientSpec] = None,
) -> BlockSolution:
    """
    Projected gradient descent on the local augmented Lagrangian of block i:

        x <- P_box(x - alpha * grad),

    with alpha found by Armijo backtracking from `spec.initial_step`.  A trial
    d = x_trial - x is accepted when it does not increase the local AL and

        f(x_trial) < f(x)  and  f(x_trial) <= f(x) + c * grad'd,   or
        (grad + grad(x_trial))'d / 2 <= c * grad'd < 0

    The second form estimates the decrease from the end-point gradients; it is
    exact for quadratics and still resolves a decrease once the two values
    agree to the last bit.  The result is never worse than the warm start.

    The solve ends with status

        converged   ||x - P_box(x - alpha0 * grad)||_inf <= tol_solver * (1 + ||x||_inf)
        stalled     no step along the projected gradient decreases the local AL
        max_iters   after `max_iters` iterations

    Raises
    ------
    NonFiniteValue
        The local AL or its gradient was not finite.
    """
    spec = spec or ProjectedGradientSpec()
    local = LocalObjective(problem, i, w_minus_i, state)

    x = local.project(np.asarray(warm_start, dtype=float))
    f = local.value(x)
    g = local.grad(x)
    alpha0 = spec.initial_step

    for iteration in range(spec.max_iters):
        trial = local.project(x - alpha0 * g)
        stationarity = float(np.max(np.abs(trial - x)))
        scale = 1.0 + float(np.max(np.abs(x)))

        if stationarity <= spec.tol_solver * scale:
            return BlockSolution(x, iteration, stationarity, BlockStatus.converged, f)

        alpha = alpha0
        while True:
            f_trial, g_trial = _accept(local, spec, x, f, g, trial)
            if g_trial is not None:
                break

            alpha *= spec.shrink
            trial = local.project(x - alpha * g)
            if alpha < _MIN_STEP_RATIO * alpha0 or np.max(np.abs(trial - x)) <= _STEP_FLOOR * scale:
                get_logger().debug(
                    f"block {i}: line search stalled after {iteration} iterations "
                    f"at stationarity {stationarity:.3e}"
                )
                return BlockSolution(x, iteration, stationarity, BlockStatus.stalled, f)

        x, f, g = trial, f_trial, g_trial

    stationarity = local.stationarity(x, alpha0)
    status = (
        BlockStatus.converged
        if stationarity <= spec.tol_solver * (1.0 + float(np.max(np.abs(x))))
        else BlockStatus.max_iters
    )
    return BlockSolution(x, spec.max_iters, stationarity, status, f)


@solve_block.register
def _(
    spec: ProjectedGradientSpec,
    problem: DecomposedProblem,
    i: int,
    w_minus_i: CouplingValues,
    state: MultiplierState,
    warm_start: np.ndarray,
) -> BlockSolution:
    return solve_block_projected_gradient(problem, i, w_minus_i, state, warm_start, spec)


# -----------------------------------------------------------------------------
#
#                            PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


def _accept(
    local: LocalObjective,
    spec: ProjectedGradientSpec,
    x: np.ndarray,
    f: float,
    g: np.ndarray,
    trial: np.ndarray,
) -> Tuple[float, Optional[np.ndarray]]:
    """
    Returns
    -------
    (f_trial, g_trial); g_trial is None when the trial is rejected.
    """
    f_trial = local.value(trial)
    if f_trial > f:
        return f_trial, None

    d = trial - x
    slope = float(g @ d)
    if not slope < 0.0:
        return f_trial, None

    g_trial = local.grad(trial)
    if f_trial < f and f_trial <= f + spec.armijo_c * slope:
        return f_trial, g_trial

    if 0.5 * float((g + g_trial) @ d) <= spec.armijo_c * slope:
        return f_trial, g_trial

    return f_trial, None
