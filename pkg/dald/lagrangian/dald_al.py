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
# This file contains the augmented Lagrangian evaluators.  The global AL is
#
#       f(x) + sum_c [ mu_c * phi_c(x) + rho_c^2 * phi_c(x)^2 ]
#
# and the local AL of block i keeps only the terms that read block i and the
# constraints assigned to block i, with the coupled elements x_{-i} frozen at
# the supplied values.  Inequalities enter through their slack-eliminated
# value phi = max(psi, -mu / (2 rho^2)).
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from typing import Mapping, Union

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import DimensionMismatch
from dald.model import DecomposedProblem, VarRef
from .dald_multipliers import MultiplierState

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "eval_global_al",
    "grad_global_al",
    "eval_local_al",
    "grad_local_al",
    "CouplingValues",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

CouplingValues = Union[np.ndarray, Mapping[VarRef, float]]


def _check_state(problem: DecomposedProblem, state: MultiplierState):
    if len(state) != problem.n_constraints:
        raise DimensionMismatch(
            f"multiplier state holds {len(state)} entries, "
            f"problem {problem.name!r} has {problem.n_constraints} constraints"
        )


def eval_global_al(
    problem: DecomposedProblem, x: np.ndarray, state: MultiplierState, strict: bool = True
) -> float:
    """
    Evaluate the global augmented Lagrangian at the full vector x.  With
    `strict` unset an overflow yields inf or nan instead of NonFiniteValue.

    Raises
    ------
    DimensionMismatch
        x or the multiplier state does not match the problem.
    """
    problem.check_vector(x)
    _check_state(problem, state)
    return problem.global_assembly.al_value(np.asarray(x, dtype=float), state.mu, state.rho, strict)


def grad_global_al(problem: DecomposedProblem, x: np.ndarray, state: MultiplierState) -> np.ndarray:
    problem.check_vector(x)
    _check_state(problem, state)
    return problem.global_assembly.al_grad(np.asarray(x, dtype=float), state.mu, state.rho)


def eval_local_al(
    problem: DecomposedProblem,
    i: int,
    x_i: np.ndarray,
    w_minus_i: CouplingValues,
    state: MultiplierState,
) -> float:
    """
    Evaluate the local augmented Lagrangian of block i at (x_i, w_{-i}).

    Parameters
    ----------
    w_minus_i:
        The coupled values, either the canonical x_{-i} vector or a mapping
        from element reference to value.

    Raises
    ------
    MissingCouplingValue
        A coupled element needed by block i was not supplied.
    """
    _check_state(problem, state)
    asm = problem.local_assembly(i)
    z = asm.working_vector(np.asarray(x_i, dtype=float), problem.coupling_vector(i, w_minus_i))
    return asm.al_value(z, state.mu, state.rho)


def grad_local_al(
    problem: DecomposedProblem,
    i: int,
    x_i: np.ndarray,
    w_minus_i: CouplingValues,
    state: MultiplierState,
) -> np.ndarray:
    """
    The gradient of the local augmented Lagrangian with respect to x_i:

        grad f_i + J_i' (mu_i + 2 rho_i^2 phi_i)
    """
    _check_state(problem, state)
    asm = problem.local_assembly(i)
    z = asm.working_vector(np.asarray(x_i, dtype=float), problem.coupling_vector(i, w_minus_i))
    return asm.al_grad(z, state.mu, state.rho)[: asm.n_own]
