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

from pathlib import Path

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import pytest

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.model import (
    DecomposedProblem,
    VariableBlock,
    affine_constraint,
    build_problem,
    quadratic_term,
)
from dald.problems import admm_counterexample, toy_example

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

SAMPLES_DIR = Path(__file__).parent / "samples"


@pytest.fixture
def samples_dir() -> Path:
    return SAMPLES_DIR


@pytest.fixture
def toy() -> DecomposedProblem:
    return toy_example()


@pytest.fixture
def counterexample() -> DecomposedProblem:
    return admm_counterexample()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20_240_611)


def random_convex_problem(
    rng: np.random.Generator,
    n_blocks: int = 3,
    dim: int = 2,
    n_constraints: int = 2,
    n_inequalities: int = 0,
    bounded: bool = False,
    coupled_objective: bool = True,
) -> DecomposedProblem:
    """
    A strongly convex quadratic over `n_blocks` blocks with random affine
    constraints that each read every block.  The constraint system is
    consistent: it is built to pass through a random point.
    """
    blocks = [
        VariableBlock(_i, dim, -5.0, 5.0) if bounded else VariableBlock.unbounded(_i, dim)
        for _i in range(1, n_blocks + 1)
    ]

    terms = list()
    for i in range(1, n_blocks + 1):
        m = rng.normal(size=(dim, dim))
        terms.append(
            quadratic_term(
                f"f{i}",
                [(i, _j) for _j in range(dim)],
                hessian=m @ m.T + np.eye(dim),
                linear=rng.normal(size=dim),
            )
        )

    if coupled_objective and n_blocks > 1:
        # a PSD coupling term 0.5 * (x1_0 - x2_0)^2
        terms.append(quadratic_term("f12", [(1, 0), (2, 0)], hessian=[[1.0, -1.0], [-1.0, 1.0]]))

    refs = [(_i, _j) for _i in range(1, n_blocks + 1) for _j in range(dim)]
    anchor = rng.uniform(-1.0, 1.0, size=len(refs))

    constraints = list()
    for c in range(n_constraints + n_inequalities):
        a = rng.normal(size=len(refs))
        inequality = c >= n_constraints
        # inequalities hold with a margin at the anchor
        constant = -float(a @ anchor) - (1.0 if inequality else 0.0)
        constraints.append(
            affine_constraint(
                f"c{c + 1}", refs, a, constant, kind="inequality" if inequality else "equality"
            )
        )

    return build_problem(blocks, terms, constraints, name="random-qp")


def separable_problem(n_blocks: int = 3) -> DecomposedProblem:
    """f = sum (x_i - i)^2 over scalar blocks; no constraints"""
    blocks = [VariableBlock.unbounded(_i) for _i in range(1, n_blocks + 1)]
    terms = [
        quadratic_term(f"f{_i}", [(_i, 0)], hessian=[[2.0]], linear=[-2.0 * _i], constant=float(_i * _i))
        for _i in range(1, n_blocks + 1)
    ]
    return build_problem(blocks, terms, [], name="separable")


def random_dag_edges(rng: np.random.Generator, n: int):
    """
    Random single-rooted DAG on 1..n with edges child -> parent; node n is the
    root and every other node feeds at least one later node.
    """
    edges = set()
    for child in range(1, n):
        parents = rng.choice(np.arange(child + 1, n + 1), size=rng.integers(1, n - child + 1), replace=False)
        edges.update((child, int(_p)) for _p in parents)
    return sorted(edges)
