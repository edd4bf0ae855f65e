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

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple, Union

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import DimensionMismatch
from dald.model import DecomposedProblem
from .dald_multipliers import MultiplierState

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "Residuals",
    "primal_residual",
    "dual_residual",
    "compute_residuals",
    "inf_norm",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

Snapshot = Union[np.ndarray, Mapping[int, np.ndarray]]


def inf_norm(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.max(np.abs(values))) if values.size else 0.0


@dataclass(frozen=True, eq=False)
class Residuals:
    """
    Attributes
    ----------
    primal: np.ndarray
        C, one entry per constraint in problem order.  Group by subproblem
        with `problem.constraint_assignment`.

    dual: dict[int, np.ndarray]
        D_i = x_i^{k,v} - x_i^{k,v-1} per block.
    """

    primal: np.ndarray
    dual: Dict[int, np.ndarray]
    primal_inf_norm: float
    dual_inf_norm: float

    def primal_of(self, problem: DecomposedProblem, i: int) -> np.ndarray:
        """C_i: the entries of the constraints assigned to block i"""
        idx = [problem.constraint_index[_c] for _c in problem.constraint_assignment[i]]
        return self.primal[idx]


def primal_residual(
    problem: DecomposedProblem, x: np.ndarray, state: MultiplierState
) -> np.ndarray:
    """
    The constraint values at x, inequalities after slack elimination at the
    current (mu, rho).  An inactive inequality reads as zero.
    """
    problem.check_vector(x)
    asm = problem.global_assembly
    if not asm.n_rows:
        return np.zeros(0)

    # adding 0.0 turns the -0.0 of an inactive inequality at mu = 0 into 0.0
    return asm.effective_values(np.asarray(x, dtype=float), state.mu, state.rho) + 0.0


def dual_residual(
    x_prev: Snapshot,
    x_curr: Snapshot,
    problem: Optional[DecomposedProblem] = None,
) -> Tuple[Dict[int, np.ndarray], float]:
    """
    The per-block displacement between two snapshots and its inf-norm
    max_i ||D_i||_inf.

    Parameters
    ----------
    x_prev, x_curr:
        Either mappings block_id -> block vector, or full vectors.  Full
        vectors are split per block when `problem` is given; otherwise they
        are treated as a single block 1.

    Raises
    ------
    DimensionMismatch
        The snapshots do not cover the same blocks with the same shapes.
    """
    prev = _as_blocks(x_prev, problem)
    curr = _as_blocks(x_curr, problem)

    if prev.keys() != curr.keys():
        raise DimensionMismatch(
            f"snapshots cover different blocks: {sorted(prev)} vs {sorted(curr)}"
        )

    dual = dict()
    for block_id in sorted(curr):
        if prev[block_id].shape != curr[block_id].shape:
            raise DimensionMismatch(
                f"block {block_id}: snapshot shapes {prev[block_id].shape} "
                f"and {curr[block_id].shape} differ"
            )
        dual[block_id] = curr[block_id] - prev[block_id]

    norm = max((inf_norm(_d) for _d in dual.values()), default=0.0)
    return dual, norm


def compute_residuals(
    problem: DecomposedProblem,
    x_prev: np.ndarray,
    x_curr: np.ndarray,
    state: MultiplierState,
) -> Residuals:
    primal = primal_residual(problem, x_curr, state)
    dual, dual_norm = dual_residual(x_prev, x_curr, problem)
    return Residuals(
        primal=primal,
        dual=dual,
        primal_inf_norm=inf_norm(primal),
        dual_inf_norm=dual_norm,
    )


# -----------------------------------------------------------------------------
#
#                            PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


def _as_blocks(
    snapshot: Snapshot, problem: Optional[DecomposedProblem]
) -> Dict[int, np.ndarray]:
    if isinstance(snapshot, Mapping):
        return {_k: np.asarray(_v, dtype=float).reshape(-1) for _k, _v in snapshot.items()}

    snapshot = np.asarray(snapshot, dtype=float)
    if problem is None:
        return {1: snapshot.reshape(-1)}

    return problem.split(snapshot)
