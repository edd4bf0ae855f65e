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
# This file contains the Assembly class.  An assembly gathers the terms and
# constraints that read a given set of "own" blocks onto one working vector
#
#       z = (own elements, in block order) ++ (coupled elements, canonical order)
#
# Structured terms are summed into one dense quadratic model and affine
# constraints into one dense matrix, so that evaluating a local augmented
# Lagrangian is a handful of numpy operations.  Callback terms and constraints
# are evaluated one at a time on their gathered positions.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from typing import Dict, List, Sequence, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import DimensionMismatch, NonFiniteValue
from .dald_terms import VarRef, ObjectiveTerm, Constraint

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["Assembly"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


class Assembly:
    """
    Dense working model of a set of objective terms and constraints.

    Attributes
    ----------
    refs: tuple[VarRef]
        The element references in working-vector order.

    n_own: int
        The number of leading elements of z that belong to the own blocks.

    constraint_rows: np.ndarray
        For each constraint held by the assembly, its index in the problem's
        constraint list.  Multipliers and penalties are looked up by it.

    inequality: np.ndarray[bool]
        The inequality mask, aligned with `constraint_rows`.
    """

    def __init__(
        self,
        own_refs: Sequence[VarRef],
        other_refs: Sequence[VarRef],
        terms: Sequence[ObjectiveTerm],
        constraints: Sequence[Tuple[int, Constraint]],
    ):
        self.refs: Tuple[VarRef, ...] = tuple(own_refs) + tuple(other_refs)
        self.n_own = len(own_refs)
        self.size = len(self.refs)
        self._pos: Dict[VarRef, int] = {_ref: _p for _p, _ref in enumerate(self.refs)}

        self.hessian = np.zeros((self.size, self.size))
        self.linear = np.zeros(self.size)
        self.constant = 0.0
        self.has_quadratic = False
        self.generic_terms: List[Tuple[ObjectiveTerm, np.ndarray]] = list()

        for term in terms:
            pos = self.positions(term.variables)
            if term.form is None:
                self.generic_terms.append((term, pos))
                continue

            np.add.at(self.linear, pos, term.form.linear)
            self.constant += term.form.constant
            if term.form.hessian is not None:
                np.add.at(self.hessian, (pos[:, None], pos[None, :]), term.form.hessian)
                self.has_quadratic = True

        # the constraint rows keep the order in which they were given; affine
        # rows are stored densely, the rest are evaluated through callbacks.

        self.constraint_rows = np.array([_idx for _idx, _ in constraints], dtype=int)
        self.inequality = np.array(
            [_c.is_inequality for _, _c in constraints], dtype=bool
        )

        n_rows = len(constraints)
        self.affine_mask = np.array([_c.is_affine for _, _c in constraints], dtype=bool)
        self.A = np.zeros((n_rows, self.size))
        self.b = np.zeros(n_rows)
        self.generic_constraints: List[Tuple[int, Constraint, np.ndarray]] = list()

        for row, (_, cons) in enumerate(constraints):
            pos = self.positions(cons.variables)
            if cons.is_affine:
                np.add.at(self.A[row], pos, cons.form.linear)
                self.b[row] = cons.form.constant
            else:
                self.generic_constraints.append((row, cons, pos))

        self.is_structured = not self.generic_terms and not self.generic_constraints

    # -------------------------------------------------------------------------
    # Properties
    # -------------------------------------------------------------------------

    @property
    def n_rows(self) -> int:
        return len(self.constraint_rows)

    def positions(self, refs: Sequence[VarRef]) -> np.ndarray:
        return np.fromiter((self._pos[_ref] for _ref in refs), dtype=int, count=len(refs))

    def working_vector(self, x: np.ndarray, w: np.ndarray) -> np.ndarray:
        if x.shape != (self.n_own,):
            raise DimensionMismatch(
                f"expected {self.n_own} own elements, received shape {x.shape}"
            )
        return np.concatenate((x, w))

    # -------------------------------------------------------------------------
    # Objective
    # -------------------------------------------------------------------------

    def objective(self, z: np.ndarray) -> float:
        val = float(self.linear @ z) + self.constant
        if self.has_quadratic:
            val += 0.5 * float(z @ (self.hessian @ z))

        for term, pos in self.generic_terms:
            val += float(term.eval(z[pos]))

        return val

    def objective_grad(self, z: np.ndarray) -> np.ndarray:
        grad = self.linear.copy()
        if self.has_quadratic:
            grad += self.hessian @ z

        for term, pos in self.generic_terms:
            tg = np.asarray(term.grad(z[pos]), dtype=float)
            if tg.shape != pos.shape:
                raise DimensionMismatch(
                    f"term {term.term_id}: gradient has shape {tg.shape}, "
                    f"expected {pos.shape}"
                )
            np.add.at(grad, pos, tg)

        return grad

    # -------------------------------------------------------------------------
    # Constraints
    # -------------------------------------------------------------------------

    def constraint_values(self, z: np.ndarray) -> np.ndarray:
        """the raw constraint values psi(z), aligned with `constraint_rows`"""
        values = self.A @ z + self.b
        for row, cons, pos in self.generic_constraints:
            values[row] = float(cons.eval(z[pos]))
        return values

    def constraint_grad_t(self, z: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """the product J(z)' weights, where J is the constraint Jacobian"""
        grad = self.A.T @ weights
        for row, cons, pos in self.generic_constraints:
            if weights[row] == 0.0:
                continue
            cg = np.asarray(cons.grad(z[pos]), dtype=float)
            if cg.shape != pos.shape:
                raise DimensionMismatch(
                    f"constraint {cons.constraint_id}: gradient has shape {cg.shape}, "
                    f"expected {pos.shape}"
                )
            np.add.at(grad, pos, weights[row] * cg)
        return grad

    # -------------------------------------------------------------------------
    # Augmented Lagrangian
    # -------------------------------------------------------------------------

    def effective_values(self, z: np.ndarray, mu: np.ndarray, rho: np.ndarray) -> np.ndarray:
        """
        The constraint values phi after eliminating the optimal slack of every
        inequality:  phi = max(psi, -mu / (2 rho^2)).  `mu` and `rho` are the
        full multiplier and penalty vectors of the problem.
        """
        psi = self.constraint_values(z)
        if not self.inequality.any():
            return psi

        mu_r = mu[self.constraint_rows]
        rho_r = rho[self.constraint_rows]
        floor = -mu_r / (2.0 * rho_r**2)
        return np.where(self.inequality, np.maximum(psi, floor), psi)

    def al_value(self, z: np.ndarray, mu: np.ndarray, rho: np.ndarray, strict: bool = True) -> float:
        """
        The augmented Lagrangian f + mu'phi + ||rho * phi||^2.  With `strict`
        unset an overflowing value is returned as inf or nan rather than
        raising NonFiniteValue.
        """
        with np.errstate(over="ignore", invalid="ignore"):
            val = self.objective(z)
            if self.n_rows:
                phi = self.effective_values(z, mu, rho)
                mu_r = mu[self.constraint_rows]
                rho_r = rho[self.constraint_rows]
                val += float(mu_r @ phi) + float(np.sum((rho_r * phi) ** 2))

        if strict and not np.isfinite(val):
            raise NonFiniteValue(f"augmented Lagrangian evaluated to {val}")

        return val

    def al_grad(self, z: np.ndarray, mu: np.ndarray, rho: np.ndarray) -> np.ndarray:
        """
        The gradient over the whole working vector.  An inequality whose slack
        is strictly positive has weight mu + 2 rho^2 phi = 0 and drops out.
        """
        grad = self.objective_grad(z)
        if self.n_rows:
            phi = self.effective_values(z, mu, rho)
            mu_r = mu[self.constraint_rows]
            rho_r = rho[self.constraint_rows]
            weights = mu_r + 2.0 * rho_r**2 * phi
            grad += self.constraint_grad_t(z, weights)

        if not np.all(np.isfinite(grad)):
            raise NonFiniteValue("augmented Lagrangian gradient is not finite")

        return grad
