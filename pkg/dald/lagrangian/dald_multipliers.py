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

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import DimensionMismatch, NonpositivePenalty, ModelError

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["MultiplierState", "update_multipliers", "update_penalty"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MultiplierState:
    """
    One multiplier and one penalty per constraint of the problem.  A
    constraint that belongs to several subproblems is still stored exactly once
    here, so every subproblem reads the same value.

    Attributes
    ----------
    mu: np.ndarray
        The multipliers, length m.

    rho: np.ndarray
        The penalties, length m, strictly positive.

    penalty_growth: float
        The factor beta >= 1 applied by `update_penalty`.

    rho_cap: float
        The upper limit of every penalty; may be +inf.
    """

    mu: np.ndarray
    rho: np.ndarray
    penalty_growth: float = 1.0
    rho_cap: float = math.inf

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        rho = np.array(self.rho, dtype=float).reshape(-1)

        if mu.shape != rho.shape:
            raise DimensionMismatch(
                f"{mu.size} multipliers but {rho.size} penalties"
            )
        if np.any(~(rho > 0.0)):
            raise NonpositivePenalty(f"penalties must be positive: {rho.tolist()}")
        if self.penalty_growth < 1.0:
            raise ModelError(f"penalty growth must be >= 1, received {self.penalty_growth}")

        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def initial(
        cls,
        n_constraints: int,
        mu: Union[float, Sequence[float]] = 0.0,
        rho: Union[float, Sequence[float]] = 1.0,
        penalty_growth: float = 1.0,
        rho_cap: float = math.inf,
    ) -> "MultiplierState":
        return cls(
            mu=np.broadcast_to(np.asarray(mu, dtype=float), (n_constraints,)),
            rho=np.broadcast_to(np.asarray(rho, dtype=float), (n_constraints,)),
            penalty_growth=penalty_growth,
            rho_cap=rho_cap,
        )

    def __len__(self) -> int:
        return self.mu.size


def update_multipliers(state: MultiplierState, primal: np.ndarray) -> MultiplierState:
    """
    mu <- mu + 2 rho^2 C, once per constraint.

    Parameters
    ----------
    state:
        The multipliers in effect during the inner loop that just ended.

    primal:
        The primal residual C at the inner-loop exit point, one entry per
        constraint; a `Residuals` instance is accepted as well.
    """
    primal = np.asarray(getattr(primal, "primal", primal), dtype=float)
    if primal.shape != state.mu.shape:
        raise DimensionMismatch(
            f"primal residual has {primal.size} entries for {state.mu.size} constraints"
        )

    return replace(state, mu=state.mu + 2.0 * state.rho**2 * primal)


def update_penalty(state: MultiplierState) -> MultiplierState:
    """rho <- min(beta * rho, rho_cap) for every constraint"""
    if state.penalty_growth == 1.0:
        return state

    return replace(state, rho=np.minimum(state.penalty_growth * state.rho, state.rho_cap))
