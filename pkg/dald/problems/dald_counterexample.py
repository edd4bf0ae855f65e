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
# This file contains the three-block problem on which the direct multi-block
# extension of ADMM fails to converge:
#
#   min 0  s.t.  A1 x1 + A2 x2 + A3 x3 = 0,   A = [A1 A2 A3]
#
# A is nonsingular, so the origin is the only feasible point.  The origin is
# also where every run would start by default, so the problem carries the
# default start (1, 1, 1).
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from dataclasses import dataclass, field

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.model import DecomposedProblem, VariableBlock, affine_constraint, build_problem

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["COUNTEREXAMPLE_MATRIX", "CounterexampleInstance", "admm_counterexample"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

COUNTEREXAMPLE_MATRIX = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, 1.0, 2.0],
        [1.0, 2.0, 2.0],
    ]
)


@dataclass(frozen=True, eq=False)
class CounterexampleInstance:
    A: np.ndarray = field(default_factory=COUNTEREXAMPLE_MATRIX.copy)
    start: np.ndarray = field(default_factory=lambda: np.ones(3))

    def column(self, i: int) -> np.ndarray:
        """A_i, for the 1-based block i"""
        return self.A[:, i - 1]

    def to_problem(self) -> DecomposedProblem:
        n_rows, n_blocks = self.A.shape
        blocks = [VariableBlock.unbounded(_i, 1, labels=[f"x{_i}"]) for _i in range(1, n_blocks + 1)]

        constraints = [
            affine_constraint(
                f"row{_r + 1}",
                [(_i, 0) for _i in range(1, n_blocks + 1)],
                self.A[_r],
            )
            for _r in range(n_rows)
        ]

        return build_problem(
            blocks, [], constraints, default_start=self.start, name="counterexample"
        )


def admm_counterexample() -> DecomposedProblem:
    return CounterexampleInstance().to_problem()
