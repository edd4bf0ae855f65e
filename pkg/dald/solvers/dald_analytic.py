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
# This file contains the closed-form block solver.  When the local AL of block
# i is a quadratic in x_i (quadratic objective terms, affine equality
# constraints, no bounds) its minimizer solves the normal equations
#
#   (H_xx + 2 A_x' R A_x) x = -(H_xw w + g_x + A_x' mu + 2 A_x' R (A_w w + b))
#
# with R = diag(rho^2).  For a zero objective and a single column A_i this is
#
#   x_i = -(A_i' / ||A_i||^2) (mu / (2 rho^2) + sum_{j != i} A_j x_j).
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from typing import Optional

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_config import AnalyticLinearSpec
from dald.dald_errors import NotApplicable, SingularNormal
from dald.model import DecomposedProblem
from dald.lagrangian import MultiplierState, CouplingValues
from .dald_solver_base import BlockSolution, BlockStatus, LocalObjective, solve_block

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["solve_block_analytic_linear"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


def solve_block_analytic_linear(
    problem: DecomposedProblem,
    i: int,
    w_minus_i: CouplingValues,
    state: MultiplierState,
    spec: Optional[AnalyticLinearSpec] = None,
) -> BlockSolution:
    """
    Return the exact minimizer of block i's local AL in one step.

    Raises
    ------
    NotApplicable
        The block has callback terms or constraints, inequality constraints,
        or finite bounds.

    SingularNormal
        The normal matrix is not positive definite, e.g. the block appears in
        no constraint (||A_i|| = 0) and has no curvature of its own.
    """
    spec = spec or AnalyticLinearSpec()
    local = LocalObjective(problem, i, w_minus_i, state)
    asm = local.assembly

    if not asm.is_structured:
        raise NotApplicable(f"block {i}: local AL has callback terms or constraints")
    if asm.inequality.any():
        raise NotApplicable(f"block {i}: inequality constraints need a bounded solver")
    if not local.block.is_unbounded:
        raise NotApplicable(f"block {i}: finite bounds need a projected solver")

    n = asm.n_own
    w = local.w
    mu = state.mu[asm.constraint_rows]
    r = state.rho[asm.constraint_rows] ** 2

    h_xx, h_xw = asm.hessian[:n, :n], asm.hessian[:n, n:]
    a_x, a_w = asm.A[:, :n], asm.A[:, n:]

    normal = h_xx + 2.0 * a_x.T @ (r[:, None] * a_x)
    rhs = -(h_xw @ w + asm.linear[:n] + a_x.T @ mu + 2.0 * a_x.T @ (r * (a_w @ w + asm.b)))

    try:
        factor = cho_factor(normal)
    except LinAlgError:
        raise SingularNormal(
            f"block {i}: normal matrix is not positive definite "
            f"(constraint column norm {np.linalg.norm(a_x):.3e})"
        )

    x = cho_solve(factor, rhs)
    return BlockSolution(
        x_i=x,
        iters_used=1,
        stationarity=float(np.max(np.abs(local.grad(x)))),
        status=BlockStatus.converged,
        value=local.value(x, strict=False),
    )


@solve_block.register
def _(
    spec: AnalyticLinearSpec,
    problem: DecomposedProblem,
    i: int,
    w_minus_i: CouplingValues,
    state: MultiplierState,
    warm_start: np.ndarray,
) -> BlockSolution:
    return solve_block_analytic_linear(problem, i, w_minus_i, state, spec)
