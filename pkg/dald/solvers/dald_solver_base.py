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
# This file contains the solver-layer interface.  `solve_block` is a generic
# function dispatched on the solver specification type; each solver module
# wires its implementation into it using the register mechanism, the same way
# for every solver kind:
#
#     @solve_block.register
#     def _(spec: LbfgsbSpec, problem, i, w_minus_i, state, warm_start): ...
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from enum import Enum
from dataclasses import dataclass
from functools import singledispatch
from typing import Callable

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import NonFiniteValue, NotApplicable, DimensionMismatch
from dald.model import DecomposedProblem
from dald.lagrangian import MultiplierState, CouplingValues

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "BlockStatus",
    "BlockSolution",
    "LocalObjective",
    "solve_block",
    "finite_difference_gradient",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


class BlockStatus(str, Enum):
    converged = "Converged"
    stalled = "Stalled"  # no further decrease representable
    max_iters = "MaxIters"


@dataclass(frozen=True, eq=False)
class BlockSolution:
    """
    The result of one block solve.

    Attributes
    ----------
    x_i: np.ndarray
        The new block value; always within the block box.

    iters_used: int
        Solver iterations spent.

    stationarity: float
        The inf-norm of the projected gradient step at exit.

    value: float
        The local AL value at `x_i`.
    """

    x_i: np.ndarray
    iters_used: int
    stationarity: float
    status: BlockStatus
    value: float


class LocalObjective:
    """
    The local augmented Lagrangian of block i as a function of x_i alone, with
    the coupled values and multipliers frozen.
    """

    def __init__(
        self,
        problem: DecomposedProblem,
        i: int,
        w_minus_i: CouplingValues,
        state: MultiplierState,
    ):
        if len(state) != problem.n_constraints:
            raise DimensionMismatch(
                f"multiplier state holds {len(state)} entries, "
                f"problem has {problem.n_constraints} constraints"
            )

        self.block_id = i
        self.block = problem.block(i)
        self.assembly = problem.local_assembly(i)
        self.w = problem.coupling_vector(i, w_minus_i)
        self.mu = state.mu
        self.rho = state.rho
        self._z = np.concatenate((np.zeros(self.block.dim), self.w))

    def _at(self, x: np.ndarray) -> np.ndarray:
        z = self._z.copy()
        z[: self.block.dim] = x
        return z

    def value(self, x: np.ndarray, strict: bool = True) -> float:
        return self.assembly.al_value(self._at(x), self.mu, self.rho, strict)

    def grad(self, x: np.ndarray) -> np.ndarray:
        return self.assembly.al_grad(self._at(x), self.mu, self.rho)[: self.block.dim]

    def project(self, x: np.ndarray) -> np.ndarray:
        return self.block.project(x)

    def stationarity(self, x: np.ndarray, step: float = 1.0) -> float:
        """||x - P(x - step * grad(x))||_inf"""
        return float(np.max(np.abs(x - self.project(x - step * self.grad(x)))))


@singledispatch
def solve_block(
    spec,
    problem: DecomposedProblem,
    i: int,
    w_minus_i: CouplingValues,
    state: MultiplierState,
    warm_start: np.ndarray,
) -> BlockSolution:
    """
    Minimize the local augmented Lagrangian of block i over its box.  This
    function is only called when no solver is registered for the type of
    `spec`; the supported solvers are wired in by their modules.
    """
    raise NotApplicable(f"no block solver registered for {type(spec).__name__}")


def finite_difference_gradient(
    fn: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6
) -> np.ndarray:
    """
    Central difference gradient  (fn(x + h e_j) - fn(x - h e_j)) / 2h.

    Raises
    ------
    NonFiniteValue
        `fn` returned NaN or inf at one of the sample points.
    """
    if not h > 0.0:
        raise ValueError(f"step must be positive, received {h}")

    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)

    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        f_plus, f_minus = float(fn(x + e)), float(fn(x - e))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NonFiniteValue(f"function is not finite near coordinate {j}")
        grad[j] = (f_plus - f_minus) / (2.0 * h)

    return grad
