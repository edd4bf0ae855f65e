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

from typing import Optional

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
from scipy.optimize import Bounds, minimize

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_config import LbfgsbSpec
from dald.model import DecomposedProblem
from dald.lagrangian import MultiplierState, CouplingValues
from .dald_solver_base import BlockSolution, BlockStatus, LocalObjective, solve_block

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["solve_block_lbfgsb"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


def solve_block_lbfgsb(
    problem: DecomposedProblem,
    i: int,
    w_minus_i: CouplingValues,
    state: MultiplierState,
    warm_start: np.ndarray,
    spec: Optional[LbfgsbSpec] = None,
) -> BlockSolution:
    """
    Minimize the local AL of block i with the bounded quasi-Newton method of
    scipy.  When the method returns a point worse than the warm start the warm
    start is kept, so the solve never increases the local AL.
    """
    spec = spec or LbfgsbSpec()
    local = LocalObjective(problem, i, w_minus_i, state)

    x0 = local.project(np.asarray(warm_start, dtype=float))
    f0 = local.value(x0)

    res = minimize(
        local.value,
        x0,
        jac=local.grad,
        method="L-BFGS-B",
        bounds=Bounds(local.block.lower, local.block.upper),
        options=dict(
            maxiter=spec.max_iters,
            ftol=spec.ftol,
            gtol=spec.tol_solver,
            maxcor=spec.memory,
        ),
    )

    x, f = local.project(np.asarray(res.x, dtype=float)), float(res.fun)
    if f > f0:
        x, f = x0, f0

    stationarity = local.stationarity(x)
    status = (
        BlockStatus.converged
        if res.success or stationarity <= spec.tol_solver
        else BlockStatus.max_iters
    )
    return BlockSolution(x, int(res.nit), stationarity, status, f)


@solve_block.register
def _(
    spec: LbfgsbSpec,
    problem: DecomposedProblem,
    i: int,
    w_minus_i: CouplingValues,
    state: MultiplierState,
    warm_start: np.ndarray,
) -> BlockSolution:
    return solve_block_lbfgsb(problem, i, w_minus_i, state, warm_start, spec)
