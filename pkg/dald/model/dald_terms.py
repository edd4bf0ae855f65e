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
# This file contains the building blocks of a decomposed problem: the variable
# blocks (local variables with box-shaped local sets), the objective terms and
# the constraints.  Terms and constraints read an explicit list of variable
# elements, each addressed as (block_id, element-index).  The functions they
# carry are evaluated on the sub-vector of those elements, in that order.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import math
from enum import Enum
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple, FrozenSet

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import EmptyScope, DimensionMismatch, ModelError

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "VarRef",
    "VariableBlock",
    "QuadraticForm",
    "ObjectiveTerm",
    "ConstraintKind",
    "Constraint",
    "linear_term",
    "quadratic_term",
    "bilinear_term",
    "callback_term",
    "affine_constraint",
    "expression_constraint",
    "callback_constraint",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

VarRef = Tuple[int, int]
ScalarFn = Callable[[np.ndarray], float]
VectorFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class VariableBlock:
    """
    The local variable x_i of subproblem i together with its local set X_i,
    which is restricted to a box.  Infinite bounds are allowed.

    Attributes
    ----------
    block_id: int
        The 1-based subproblem number.

    dim: int
        The number of elements N_i.

    lower, upper: np.ndarray
        The box bounds, each of length N_i.

    labels: tuple[str]
        Human readable element names, used in reports and problem files.
    """

    block_id: int
    dim: int
    lower: np.ndarray
    upper: np.ndarray
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ModelError(f"block {self.block_id}: dim must be positive")

        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.dim,))
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.dim,))

        if np.any(lower > upper):
            raise ModelError(f"block {self.block_id}: lower bound exceeds upper bound")

        object.__setattr__(self, "lower", lower.copy())
        object.__setattr__(self, "upper", upper.copy())

        labels = tuple(self.labels) or tuple(
            f"x{self.block_id}_{_j}" for _j in range(self.dim)
        )
        if len(labels) != self.dim:
            raise DimensionMismatch(
                f"block {self.block_id}: {len(labels)} labels for {self.dim} elements"
            )
        object.__setattr__(self, "labels", labels)

    @classmethod
    def unbounded(cls, block_id: int, dim: int = 1, labels: Sequence[str] = ()):
        return cls(block_id, dim, np.full(dim, -math.inf), np.full(dim, math.inf), tuple(labels))

    @property
    def is_unbounded(self) -> bool:
        return bool(np.all(np.isneginf(self.lower)) and np.all(np.isposinf(self.upper)))

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)


@dataclass(frozen=True, eq=False)
class QuadraticForm:
    """
    The structured form  1/2 z'Hz + g'z + c  over a term's variable vector z.
    A form without a Hessian is affine.
    """

    linear: np.ndarray
    constant: float = 0.0
    hessian: Optional[np.ndarray] = None

    @property
    def is_affine(self) -> bool:
        return self.hessian is None

    def value(self, z: np.ndarray) -> float:
        val = float(self.linear @ z) + self.constant
        if self.hessian is not None:
            val += 0.5 * float(z @ (self.hessian @ z))
        return val

    def gradient(self, z: np.ndarray) -> np.ndarray:
        if self.hessian is None:
            return self.linear.copy()
        return self.linear + self.hessian @ z


def _check_variables(owner: str, variables: Sequence[VarRef]) -> Tuple[VarRef, ...]:
    variables = tuple((int(_b), int(_j)) for _b, _j in variables)
    if not variables:
        raise EmptyScope(f"{owner}: must read at least one variable")
    return variables


@dataclass(frozen=True, eq=False)
class ObjectiveTerm:
    """
    One additive piece of the objective.  A term whose variables come from a
    single block is part of that block's local objective f_i; a term that reads
    two or more blocks is part of the coupling objective f_0.
    """

    term_id: str
    variables: Tuple[VarRef, ...]
    eval: ScalarFn
    grad: VectorFn
    form: Optional[QuadraticForm] = None
    scope: FrozenSet[int] = field(init=False)

    def __post_init__(self):
        variables = _check_variables(f"term {self.term_id}", self.variables)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "scope", frozenset(_b for _b, _ in variables))


class ConstraintKind(str, Enum):
    equality = "equality"
    inequality = "inequality"  # psi(x) <= 0


@dataclass(frozen=True, eq=False)
class Constraint:
    """
    A constraint psi(z) = 0 or psi(z) <= 0 over the listed variables.  Every
    constraint owns exactly one multiplier and one penalty, no matter how many
    subproblems it couples.
    """

    constraint_id: str
    kind: ConstraintKind
    variables: Tuple[VarRef, ...]
    eval: ScalarFn
    grad: VectorFn
    form: Optional[QuadraticForm] = None
    scope: FrozenSet[int] = field(init=False)

    def __post_init__(self):
        variables = _check_variables(f"constraint {self.constraint_id}", self.variables)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "kind", ConstraintKind(self.kind))
        object.__setattr__(self, "scope", frozenset(_b for _b, _ in variables))

    @property
    def is_inequality(self) -> bool:
        return self.kind is ConstraintKind.inequality

    @property
    def is_affine(self) -> bool:
        return self.form is not None and self.form.is_affine


# -----------------------------------------------------------------------------
#
#                           Term and constraint factories
#
# -----------------------------------------------------------------------------


def _from_form(form: QuadraticForm) -> Tuple[ScalarFn, VectorFn]:
    return form.value, form.gradient


def quadratic_term(
    term_id: str,
    variables: Sequence[VarRef],
    hessian: Optional[Sequence[Sequence[float]]] = None,
    linear: Optional[Sequence[float]] = None,
    constant: float = 0.0,
) -> ObjectiveTerm:
    """
    Create the term 1/2 z'Hz + g'z + c over `variables`.  The Hessian is
    symmetrized.
    """
    size = len(variables)
    g = np.zeros(size) if linear is None else np.asarray(linear, dtype=float)

    if g.shape != (size,):
        raise DimensionMismatch(f"term {term_id}: linear part must have length {size}")

    h = None
    if hessian is not None:
        h = np.asarray(hessian, dtype=float)
        if h.shape != (size, size):
            raise DimensionMismatch(f"term {term_id}: hessian must be {size}x{size}")
        h = 0.5 * (h + h.T)

    form = QuadraticForm(linear=g, constant=float(constant), hessian=h)
    return ObjectiveTerm(term_id, tuple(variables), *_from_form(form), form=form)


def linear_term(
    term_id: str,
    variables: Sequence[VarRef],
    coeffs: Sequence[float],
    constant: float = 0.0,
) -> ObjectiveTerm:
    return quadratic_term(term_id, variables, linear=coeffs, constant=constant)


def bilinear_term(term_id: str, a: VarRef, b: VarRef, coeff: float = 1.0) -> ObjectiveTerm:
    """the product coeff * a * b of two distinct elements"""
    return quadratic_term(term_id, [a, b], hessian=[[0.0, coeff], [coeff, 0.0]])


def callback_term(
    term_id: str, variables: Sequence[VarRef], eval: ScalarFn, grad: VectorFn
) -> ObjectiveTerm:
    return ObjectiveTerm(term_id, tuple(variables), eval, grad)


def affine_constraint(
    constraint_id: str,
    variables: Sequence[VarRef],
    coeffs: Sequence[float],
    constant: float = 0.0,
    kind: ConstraintKind | str = ConstraintKind.equality,
) -> Constraint:
    """the constraint  a'z + c  (= 0, or <= 0 for an inequality)"""
    a = np.asarray(coeffs, dtype=float)
    if a.shape != (len(variables),):
        raise DimensionMismatch(
            f"constraint {constraint_id}: {a.size} coefficients for {len(variables)} variables"
        )

    form = QuadraticForm(linear=a, constant=float(constant))
    return Constraint(
        constraint_id, ConstraintKind(kind), tuple(variables), *_from_form(form), form=form
    )


def expression_constraint(
    constraint_id: str,
    kind: ConstraintKind | str = ConstraintKind.equality,
    linear: Sequence[Tuple[VarRef, float]] = (),
    bilinear: Sequence[Tuple[VarRef, VarRef, float]] = (),
    exp: Sequence[Tuple[VarRef, float]] = (),
    constant: float = 0.0,
) -> Constraint:
    """
    Build a constraint from the small builtin vocabulary used by problem
    files:  constant + sum(c * v) + sum(c * v_a * v_b) + sum(c * exp(v)).
    Without bilinear or exp parts the result is an affine constraint.
    """
    if not bilinear and not exp:
        variables = [_ref for _ref, _ in linear]
        return affine_constraint(
            constraint_id, variables, [_c for _, _c in linear], constant, kind
        )

    variables: list = []

    def index_of(ref: VarRef) -> int:
        ref = (int(ref[0]), int(ref[1]))
        if ref not in variables:
            variables.append(ref)
        return variables.index(ref)

    lin = [(index_of(_r), float(_c)) for _r, _c in linear]
    bil = [(index_of(_a), index_of(_b), float(_c)) for _a, _b, _c in bilinear]
    exps = [(index_of(_r), float(_c)) for _r, _c in exp]

    # exp overflows to inf, which the AL evaluation reports as NonFiniteValue

    def eval_fn(z: np.ndarray) -> float:
        val = constant
        val += sum(_c * z[_j] for _j, _c in lin)
        val += sum(_c * z[_a] * z[_b] for _a, _b, _c in bil)
        with np.errstate(over="ignore"):
            val += sum(_c * np.exp(z[_j]) for _j, _c in exps)
        return float(val)

    def grad_fn(z: np.ndarray) -> np.ndarray:
        g = np.zeros(len(variables))
        for _j, _c in lin:
            g[_j] += _c
        for _a, _b, _c in bil:
            g[_a] += _c * z[_b]
            g[_b] += _c * z[_a]
        with np.errstate(over="ignore"):
            for _j, _c in exps:
                g[_j] += _c * np.exp(z[_j])
        return g

    return callback_constraint(constraint_id, variables, eval_fn, grad_fn, kind)


def callback_constraint(
    constraint_id: str,
    variables: Sequence[VarRef],
    eval: ScalarFn,
    grad: VectorFn,
    kind: ConstraintKind | str = ConstraintKind.equality,
) -> Constraint:
    """
    A constraint given by its value and gradient functions over `variables`.
    It carries no structured form, so only the iterative solvers handle it.
    """
    return Constraint(constraint_id, ConstraintKind(kind), tuple(variables), eval, grad)
