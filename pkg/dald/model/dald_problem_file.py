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
# This file contains the problem-definition file schema.  A problem file is a
# JSON document:
#
#   {
#     "name": "...",
#     "blocks": [{"id": 1, "dim": 2, "lower": 1, "upper": 7}, ...],
#     "linear_terms": [{"id": "t1", "vars": [[1, 0]], "coeffs": [5.0]}, ...],
#     "quadratic_terms": [{"id": "q1", "vars": [...], "hessian": [[...]]}, ...],
#     "bilinear_terms": [{"id": "b1", "a": [1, 1], "b": [2, 1], "coeff": 1.0}],
#     "constraints": [
#        {"id": "c1", "kind": "equality",
#         "linear": [[[1, 1], 1.0], ...], "bilinear": [[[1, 1], [3, 1], 1.0]],
#         "exp": [[[2, 1], 1.0]], "constant": -12.0}
#     ],
#     "default_start": [...]
#   }
#
# Variable references are [block_id, element-index] pairs.  A null bound is
# infinite.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import json
import math
from pathlib import Path
from typing import List, Optional, Tuple, Union

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

from pydantic import BaseModel, Extra, Field, PositiveInt, ValidationError

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import ConfigError, ModelError
from .dald_terms import (
    VariableBlock,
    ConstraintKind,
    linear_term,
    quadratic_term,
    bilinear_term,
    expression_constraint,
)
from .dald_problem import DecomposedProblem, build_problem

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "ProblemFile",
    "load_problem_file",
    "save_problem_file",
    "problem_file_from_problem",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

Ref = Tuple[int, int]
Bound = Union[Optional[float], List[Optional[float]]]


class BlockSpec(BaseModel, extra=Extra.forbid):
    id: PositiveInt
    dim: PositiveInt
    lower: Bound = None
    upper: Bound = None
    labels: List[str] = Field(default_factory=list)


class LinearTermSpec(BaseModel, extra=Extra.forbid):
    id: str
    vars: List[Ref]
    coeffs: List[float]
    constant: float = 0.0


class QuadraticTermSpec(BaseModel, extra=Extra.forbid):
    id: str
    vars: List[Ref]
    hessian: List[List[float]]
    linear: Optional[List[float]] = None
    constant: float = 0.0


class BilinearTermSpec(BaseModel, extra=Extra.forbid):
    id: str
    a: Ref
    b: Ref
    coeff: float = 1.0


class ConstraintSpec(BaseModel, extra=Extra.forbid):
    id: str
    kind: ConstraintKind = ConstraintKind.equality
    linear: List[Tuple[Ref, float]] = Field(default_factory=list)
    bilinear: List[Tuple[Ref, Ref, float]] = Field(default_factory=list)
    exp: List[Tuple[Ref, float]] = Field(default_factory=list)
    constant: float = 0.0


class ProblemFile(BaseModel, extra=Extra.forbid):
    name: str = ""
    blocks: List[BlockSpec]
    linear_terms: List[LinearTermSpec] = Field(default_factory=list)
    quadratic_terms: List[QuadraticTermSpec] = Field(default_factory=list)
    bilinear_terms: List[BilinearTermSpec] = Field(default_factory=list)
    constraints: List[ConstraintSpec] = Field(default_factory=list)
    default_start: Optional[List[float]] = None

    def to_problem(self) -> DecomposedProblem:
        blocks = [
            VariableBlock(
                block_id=_b.id,
                dim=_b.dim,
                lower=_bound_array(_b.lower, _b.dim, -math.inf),
                upper=_bound_array(_b.upper, _b.dim, math.inf),
                labels=tuple(_b.labels),
            )
            for _b in self.blocks
        ]

        terms = [linear_term(_t.id, _t.vars, _t.coeffs, _t.constant) for _t in self.linear_terms]
        terms += [
            quadratic_term(_t.id, _t.vars, _t.hessian, _t.linear, _t.constant)
            for _t in self.quadratic_terms
        ]
        terms += [bilinear_term(_t.id, _t.a, _t.b, _t.coeff) for _t in self.bilinear_terms]

        constraints = [
            expression_constraint(
                _c.id,
                kind=_c.kind,
                linear=_c.linear,
                bilinear=_c.bilinear,
                exp=_c.exp,
                constant=_c.constant,
            )
            for _c in self.constraints
        ]

        return build_problem(
            blocks, terms, constraints, default_start=self.default_start, name=self.name
        )


def load_problem_file(path: Path) -> DecomposedProblem:
    """
    Load and build the problem stored at `path`.

    Raises
    ------
    ConfigError
        The file is not a valid problem definition.
    """
    try:
        spec = ProblemFile.parse_obj(json.loads(Path(path).read_text()))
    except (ValidationError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Failed to load problem file {path}: {str(exc)}")

    return spec.to_problem()


def save_problem_file(spec: ProblemFile, path: Path):
    Path(path).write_text(spec.json(indent=2, exclude_defaults=True))


def problem_file_from_problem(problem: DecomposedProblem) -> ProblemFile:
    """
    Express a problem made only of structured terms and affine constraints as
    a problem file.

    Raises
    ------
    ModelError
        The problem holds a callback term or a nonlinear constraint.
    """
    linear_terms = list()
    quadratic_terms = list()

    for term in problem.terms:
        if term.form is None:
            raise ModelError(f"term {term.term_id}: callback terms cannot be saved")

        vars_ = [list(_r) for _r in term.variables]
        if term.form.hessian is None:
            linear_terms.append(
                LinearTermSpec(
                    id=term.term_id,
                    vars=vars_,
                    coeffs=term.form.linear.tolist(),
                    constant=term.form.constant,
                )
            )
        else:
            quadratic_terms.append(
                QuadraticTermSpec(
                    id=term.term_id,
                    vars=vars_,
                    hessian=term.form.hessian.tolist(),
                    linear=term.form.linear.tolist(),
                    constant=term.form.constant,
                )
            )

    constraints = list()
    for cons in problem.constraints:
        if not cons.is_affine:
            raise ModelError(f"constraint {cons.constraint_id}: only affine constraints can be saved")

        constraints.append(
            ConstraintSpec(
                id=cons.constraint_id,
                kind=cons.kind,
                linear=[(_r, float(_c)) for _r, _c in zip(cons.variables, cons.form.linear)],
                constant=cons.form.constant,
            )
        )

    return ProblemFile(
        name=problem.name,
        blocks=[
            BlockSpec(
                id=_b.block_id,
                dim=_b.dim,
                lower=_bound_list(_b.lower),
                upper=_bound_list(_b.upper),
                labels=list(_b.labels),
            )
            for _b in problem.blocks
        ],
        linear_terms=linear_terms,
        quadratic_terms=quadratic_terms,
        constraints=constraints,
        default_start=(
            None if problem.default_start is None else problem.default_start.tolist()
        ),
    )


# -----------------------------------------------------------------------------
#
#                            PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


def _bound_array(value: Bound, dim: int, missing: float) -> List[float]:
    if not isinstance(value, list):
        value = [value] * dim

    if len(value) != dim:
        raise ModelError(f"bound list has {len(value)} entries for {dim} elements")

    return [missing if _v is None else _v for _v in value]


def _bound_list(values) -> List[Optional[float]]:
    return [None if math.isinf(_v) else float(_v) for _v in values]
