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
# This file contains the four-subproblem notation example:
#
#   min  5 v1 + 2 v2 + v3 + 3 v4 + v5 v7 + v6 v8
#   s.t. v1 + v5 v6 - 7 = 0
#        v2 + v5 + v7 - 10 = 0
#        v5 v6 + exp(v7) - 12 = 0
#        1 <= v <= 7
#
# with x1 = (v1, v5), x2 = (v2, v7), x3 = (v3, v6), x4 = (v4, v8).  The problem
# is nonconvex; it exercises the coupling bookkeeping rather than the
# convergence theory.
# =============================================================================

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.model import DecomposedProblem
from dald.model.dald_problem_file import (
    ProblemFile,
    BlockSpec,
    LinearTermSpec,
    BilinearTermSpec,
    ConstraintSpec,
)

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["TOY_VARIABLES", "toy_problem_file", "toy_example"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

# v_k -> (block_id, element-index)
TOY_VARIABLES = {
    "v1": (1, 0),
    "v5": (1, 1),
    "v2": (2, 0),
    "v7": (2, 1),
    "v3": (3, 0),
    "v6": (3, 1),
    "v4": (4, 0),
    "v8": (4, 1),
}


def toy_problem_file() -> ProblemFile:
    v = TOY_VARIABLES
    labels = {_ref: _name for _name, _ref in v.items()}

    return ProblemFile(
        name="toy",
        blocks=[
            BlockSpec(
                id=_b, dim=2, lower=1.0, upper=7.0, labels=[labels[(_b, 0)], labels[(_b, 1)]]
            )
            for _b in range(1, 5)
        ],
        linear_terms=[
            LinearTermSpec(id=f"f{_b}", vars=[v[f"v{_b}"]], coeffs=[_c])
            for _b, _c in zip(range(1, 5), (5.0, 2.0, 1.0, 3.0))
        ],
        bilinear_terms=[
            BilinearTermSpec(id="v5v7", a=v["v5"], b=v["v7"]),
            BilinearTermSpec(id="v6v8", a=v["v6"], b=v["v8"]),
        ],
        constraints=[
            ConstraintSpec(
                id="c1",
                linear=[(v["v1"], 1.0)],
                bilinear=[(v["v5"], v["v6"], 1.0)],
                constant=-7.0,
            ),
            ConstraintSpec(
                id="c2",
                linear=[(v["v2"], 1.0), (v["v5"], 1.0), (v["v7"], 1.0)],
                constant=-10.0,
            ),
            ConstraintSpec(
                id="c3",
                bilinear=[(v["v5"], v["v6"], 1.0)],
                exp=[(v["v7"], 1.0)],
                constant=-12.0,
            ),
        ],
    )


def toy_example() -> DecomposedProblem:
    return toy_problem_file().to_problem()
