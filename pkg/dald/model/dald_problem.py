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
# This file contains the DecomposedProblem definition and the functions that
# derive its coupling structure:
#
#   * the coupling map R_i: the blocks that share a term or a constraint with
#     block i,
#   * the constraint assignment phi_i: the constraints that read block i,
#   * the coupling variables x_{-i}: the elements of other blocks that block i's
#     shared terms and constraints read, in (block_id, element-index) order.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Optional, Sequence, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import (
    ModelError,
    DuplicateBlockId,
    EmptyScope,
    DanglingBlockRef,
    UnknownBlock,
    DimensionMismatch,
    MissingCouplingValue,
    NonpositivePenalty,
)

from .dald_terms import VarRef, VariableBlock, ObjectiveTerm, Constraint
from .dald_assembly import Assembly

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "DecomposedProblem",
    "build_problem",
    "coupling_variables",
    "optimal_slack",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DecomposedProblem:
    """
    A constrained problem already split into n subproblems.  Instances are
    immutable once built, and are safe to share between concurrent block
    solves.  Use `build_problem` to create one.

    The full variable vector x is the concatenation of the block vectors in
    ascending block_id order.
    """

    blocks: Tuple[VariableBlock, ...]
    terms: Tuple[ObjectiveTerm, ...]
    constraints: Tuple[Constraint, ...]
    default_start: Optional[np.ndarray] = None
    name: str = ""

    coupling_map: Dict[int, FrozenSet[int]] = field(init=False)
    constraint_assignment: Dict[int, Tuple[str, ...]] = field(init=False)

    def _set(self, name: str, value):
        object.__setattr__(self, name, value)

    def __post_init__(self):
        offsets = dict()
        offset = 0
        for block in self.blocks:
            offsets[block.block_id] = offset
            offset += block.dim

        self._set("_offsets", offsets)
        self._set("n_vars", offset)
        self._set("_by_id", {_b.block_id: _b for _b in self.blocks})
        self._set(
            "constraint_index",
            {_c.constraint_id: _idx for _idx, _c in enumerate(self.constraints)},
        )

        coupling = {_b.block_id: set() for _b in self.blocks}
        assignment = {_b.block_id: list() for _b in self.blocks}
        term_assignment = {_b.block_id: list() for _b in self.blocks}
        foreign = {_b.block_id: set() for _b in self.blocks}

        def couple(scope: FrozenSet[int], refs: Sequence[VarRef]):
            for i in scope:
                coupling[i].update(scope - {i})
                foreign[i].update(_ref for _ref in refs if _ref[0] != i)

        for term in self.terms:
            couple(term.scope, term.variables)
            for i in term.scope:
                term_assignment[i].append(term)

        for idx, cons in enumerate(self.constraints):
            couple(cons.scope, cons.variables)
            for i in sorted(cons.scope):
                assignment[i].append((idx, cons))

        self._set("coupling_map", {_i: frozenset(_s) for _i, _s in coupling.items()})
        self._set(
            "constraint_assignment",
            {_i: tuple(_c.constraint_id for _, _c in _l) for _i, _l in assignment.items()},
        )
        self._set("_coupling_refs", {_i: tuple(sorted(_r)) for _i, _r in foreign.items()})
        self._set(
            "_coupling_index",
            {
                _i: np.array([self.flat_index(_ref) for _ref in _refs], dtype=int)
                for _i, _refs in self._coupling_refs.items()
            },
        )

        self._set(
            "_local",
            {
                _b.block_id: Assembly(
                    own_refs=[(_b.block_id, _j) for _j in range(_b.dim)],
                    other_refs=self._coupling_refs[_b.block_id],
                    terms=term_assignment[_b.block_id],
                    constraints=assignment[_b.block_id],
                )
                for _b in self.blocks
            },
        )
        self._set(
            "global_assembly",
            Assembly(
                own_refs=[(_b.block_id, _j) for _b in self.blocks for _j in range(_b.dim)],
                other_refs=(),
                terms=self.terms,
                constraints=list(enumerate(self.constraints)),
            ),
        )

        self._set("lower", np.concatenate([_b.lower for _b in self.blocks]))
        self._set("upper", np.concatenate([_b.upper for _b in self.blocks]))

        if self.default_start is not None:
            start = np.asarray(self.default_start, dtype=float)
            if start.shape != (self.n_vars,):
                raise DimensionMismatch(
                    f"default start has shape {start.shape}, expected ({self.n_vars},)"
                )
            self._set("default_start", start)

    # -------------------------------------------------------------------------
    # Shape helpers
    # -------------------------------------------------------------------------

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    @property
    def block_ids(self) -> Tuple[int, ...]:
        return tuple(_b.block_id for _b in self.blocks)

    def block(self, block_id: int) -> VariableBlock:
        try:
            return self._by_id[block_id]
        except KeyError:
            raise UnknownBlock(f"no block with id {block_id} in problem {self.name!r}")

    def block_slice(self, block_id: int) -> slice:
        start = self._offsets[self.block(block_id).block_id]
        return slice(start, start + self._by_id[block_id].dim)

    def flat_index(self, ref: VarRef) -> int:
        return self._offsets[ref[0]] + ref[1]

    def split(self, x: np.ndarray) -> Dict[int, np.ndarray]:
        self.check_vector(x)
        return {_b.block_id: x[self.block_slice(_b.block_id)].copy() for _b in self.blocks}

    def join(self, parts: Mapping[int, np.ndarray]) -> np.ndarray:
        return np.concatenate(
            [np.asarray(parts[_b.block_id], dtype=float) for _b in self.blocks]
        )

    def check_vector(self, x: np.ndarray):
        if np.shape(x) != (self.n_vars,):
            raise DimensionMismatch(
                f"x has shape {np.shape(x)}, problem {self.name!r} has {self.n_vars} variables"
            )

    def project(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def start_point(self) -> np.ndarray:
        """the problem's default start, else the origin, projected onto the boxes"""
        x0 = self.default_start if self.default_start is not None else np.zeros(self.n_vars)
        return self.project(np.asarray(x0, dtype=float))

    # -------------------------------------------------------------------------
    # Coupling structure
    # -------------------------------------------------------------------------

    @property
    def is_constrained(self) -> bool:
        return bool(self.constraints)

    def coupling_refs(self, block_id: int) -> Tuple[VarRef, ...]:
        self.block(block_id)
        return self._coupling_refs[block_id]

    def coupling_index(self, block_id: int) -> np.ndarray:
        """the flat indices of x_{-i} in the full variable vector"""
        self.block(block_id)
        return self._coupling_index[block_id]

    def local_assembly(self, block_id: int) -> Assembly:
        self.block(block_id)
        return self._local[block_id]

    def coupling_vector(self, block_id: int, w) -> np.ndarray:
        """
        Normalize the coupled values supplied for block i into the canonical
        x_{-i} vector.  `w` may be that vector already, or a mapping from
        element reference to value.

        Raises
        ------
        MissingCouplingValue
            When a required element is absent.
        """
        refs = self.coupling_refs(block_id)

        if isinstance(w, Mapping):
            missing = [_ref for _ref in refs if _ref not in w]
            if missing:
                raise MissingCouplingValue(
                    f"block {block_id}: no value for coupled elements {missing}"
                )
            return np.array([w[_ref] for _ref in refs], dtype=float)

        w = np.asarray(w, dtype=float).reshape(-1)
        if w.size != len(refs):
            raise MissingCouplingValue(
                f"block {block_id}: expected {len(refs)} coupled values, received {w.size}"
            )
        return w

    # -------------------------------------------------------------------------
    # Evaluation
    # -------------------------------------------------------------------------

    def objective(self, x: np.ndarray) -> float:
        """f(x), the sum of every objective term"""
        self.check_vector(x)
        return self.global_assembly.objective(x)

    def constraint_values(self, x: np.ndarray) -> np.ndarray:
        """the raw psi(x) for every constraint, in problem order"""
        self.check_vector(x)
        return self.global_assembly.constraint_values(x)

    # -------------------------------------------------------------------------
    # Merging
    # -------------------------------------------------------------------------

    def merged(self) -> "DecomposedProblem":
        """
        Fuse every block into a single block 1.  The merged problem has the
        same x, f and constraints, so minimizing its single local AL is the
        joint minimization of the method of multipliers.
        """
        remap = lambda _refs: tuple((1, self.flat_index(_r)) for _r in _refs)  # noqa

        block = VariableBlock(
            block_id=1,
            dim=self.n_vars,
            lower=self.lower,
            upper=self.upper,
            labels=tuple(_l for _b in self.blocks for _l in _b.labels),
        )
        terms = [
            ObjectiveTerm(_t.term_id, remap(_t.variables), _t.eval, _t.grad, form=_t.form)
            for _t in self.terms
        ]
        constraints = [
            Constraint(
                _c.constraint_id, _c.kind, remap(_c.variables), _c.eval, _c.grad, form=_c.form
            )
            for _c in self.constraints
        ]
        return build_problem(
            [block],
            terms,
            constraints,
            default_start=self.default_start,
            name=f"{self.name}-merged" if self.name else "merged",
        )


# -----------------------------------------------------------------------------
#
#                                 Operations
#
# -----------------------------------------------------------------------------


def build_problem(
    blocks: Sequence[VariableBlock],
    terms: Sequence[ObjectiveTerm],
    constraints: Sequence[Constraint],
    default_start: Optional[Sequence[float]] = None,
    name: str = "",
) -> DecomposedProblem:
    """
    Validate the problem parts and derive the coupling structure.

    Parameters
    ----------
    blocks:
        The variable blocks; their ids must be exactly 1..n.

    terms, constraints:
        The objective terms and constraints; every element they read must
        exist.

    default_start:
        Optional preferred initial point x^{1,0}, as a full vector.

    Raises
    ------
    DuplicateBlockId, EmptyScope, DanglingBlockRef, DimensionMismatch, ModelError
    """
    dups = [_id for _id, _n in Counter(_b.block_id for _b in blocks).items() if _n > 1]
    if dups:
        raise DuplicateBlockId(f"duplicate block ids: {sorted(dups)}")

    blocks = tuple(sorted(blocks, key=lambda _b: _b.block_id))
    ids = [_b.block_id for _b in blocks]
    if ids != list(range(1, len(blocks) + 1)):
        raise ModelError(f"block ids must be 1..{len(blocks)} without gaps, found {ids}")

    dims = {_b.block_id: _b.dim for _b in blocks}

    def check_refs(owner: str, refs: Sequence[VarRef]):
        if not refs:
            raise EmptyScope(f"{owner}: must read at least one variable")

        for block_id, idx in refs:
            if block_id not in dims:
                raise DanglingBlockRef(f"{owner}: references unknown block {block_id}")
            if not 0 <= idx < dims[block_id]:
                raise DimensionMismatch(
                    f"{owner}: element {idx} out of range for block {block_id} "
                    f"with {dims[block_id]} elements"
                )

    for kind, items, id_attr in (
        ("term", terms, "term_id"),
        ("constraint", constraints, "constraint_id"),
    ):
        dup_ids = [_k for _k, _n in Counter(getattr(_i, id_attr) for _i in items).items() if _n > 1]
        if dup_ids:
            raise ModelError(f"duplicate {kind} ids: {dup_ids}")

        for item in items:
            owner = f"{kind} {getattr(item, id_attr)}"
            check_refs(owner, item.variables)
            if not (callable(item.eval) and callable(item.grad)):
                raise ModelError(f"{owner}: eval and grad callbacks are required")

    return DecomposedProblem(
        blocks=blocks,
        terms=tuple(terms),
        constraints=tuple(constraints),
        default_start=None if default_start is None else np.asarray(default_start, dtype=float),
        name=name,
    )


def coupling_variables(problem: DecomposedProblem, i: int, x: np.ndarray) -> np.ndarray:
    """
    Return x_{-i}: the elements of the blocks coupled to block i that appear in
    a term or constraint shared with block i, ordered by (block_id, element).

    Raises
    ------
    UnknownBlock
    """
    index = problem.coupling_index(i)
    problem.check_vector(x)
    return np.asarray(x, dtype=float)[index]


def optimal_slack(psi_value: float, mu: float, rho: float) -> Tuple[float, float]:
    """
    Minimize  mu*(psi + s) + rho^2 * (psi + s)^2  over s >= 0, where s is the
    squared slack of the inequality psi <= 0.

    Returns
    -------
    (s*, phi) with s* = max(0, -(psi + mu/(2 rho^2))) and phi = psi + s*.

    Raises
    ------
    NonpositivePenalty
    """
    if not rho > 0.0:
        raise NonpositivePenalty(f"penalty must be positive, received {rho}")

    floor = -mu / (2.0 * rho * rho)
    slack = max(0.0, floor - psi_value)

    # psi + s* equals the floor exactly when the slack is active
    phi = max(psi_value, floor) + 0.0
    return slack, phi
