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
# This file contains the linear network flow (LNF) generator.  An instance is a
# rows x cols grid with a directed arc each way between 4-neighbors:
#
#   min  sum c_ij t_ij
#   s.t. sum_j t_ij - sum_j t_ji = s_i     for every node i
#        0 <= t_ij <= 50
#
# Sources sit in the first grid column and sinks in the last; supplies are
# Poisson(50).  The grid is cut into equal contiguous tiles, one subproblem per
# tile, and each arc variable belongs to the tile of its tail node.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import json
import math
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import networkx as nx
from pydantic import BaseModel, Extra, Field, ValidationError, root_validator

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import (
    BadPartition,
    ConfigError,
    Infeasible,
    InfeasibleBalance,
    ProblemGenerationError,
)
from dald.dald_logger import get_logger
from dald.model import DecomposedProblem, VariableBlock, affine_constraint, build_problem, linear_term

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "SUPPLY_MEAN",
    "ARC_UPPER",
    "COST_RANGE",
    "LnfNode",
    "LnfArc",
    "LnfInstance",
    "lnf_generate",
    "lnf_instance",
    "lnf_problem",
    "arc_refs",
    "arc_flows",
    "grid_tiles",
    "load_lnf_instance",
    "save_lnf_instance",
    "lnf_to_dot",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

SUPPLY_MEAN = 50
ARC_UPPER = 50.0
COST_RANGE = (1, 5)
MAX_ATTEMPTS = 50

_BALANCE_TOL = 1e-9


class LnfNode(BaseModel, extra=Extra.forbid):
    id: int
    role: Literal["source", "sink", "transshipment"] = "transshipment"
    supply: float = 0.0
    partition: int = 1
    row: int = 0
    col: int = 0


class LnfArc(BaseModel, extra=Extra.forbid):
    tail: int
    head: int
    lower: float = 0.0
    upper: float = ARC_UPPER
    cost: int


class LnfInstance(BaseModel, extra=Extra.forbid):
    """
    A linear network flow instance.  Nodes are numbered from 1; on a grid
    the numbering is row-major.
    """

    rows: int = 0
    cols: int = 0
    seed: Optional[int] = None
    nodes: List[LnfNode]
    arcs: List[LnfArc] = Field(default_factory=list)

    @root_validator(skip_on_failure=True)
    def _check_instance(cls, values):
        nodes = values["nodes"]
        ids = {_n.id for _n in nodes}

        if abs(sum(_n.supply for _n in nodes)) > _BALANCE_TOL:
            raise ValueError("supplies must sum to zero")

        for node in nodes:
            if node.role == "source" and not node.supply > 0:
                raise ValueError(f"source node {node.id} must have positive supply")
            if node.role == "sink" and not node.supply < 0:
                raise ValueError(f"sink node {node.id} must have negative supply")
            if node.role == "transshipment" and node.supply != 0:
                raise ValueError(f"transshipment node {node.id} must have zero supply")

        for arc in values["arcs"]:
            if arc.tail not in ids or arc.head not in ids:
                raise ValueError(f"arc ({arc.tail}, {arc.head}) references an unknown node")
            if arc.lower > arc.upper:
                raise ValueError(f"arc ({arc.tail}, {arc.head}) has lower > upper")

        return values

    @property
    def partition(self) -> Dict[int, int]:
        return {_n.id: _n.partition for _n in self.nodes}

    @property
    def n_partitions(self) -> int:
        return len({_n.partition for _n in self.nodes})

    def flow_cost(self, flow: np.ndarray) -> float:
        return float(np.dot([_a.cost for _a in self.arcs], flow))


# -----------------------------------------------------------------------------
# Generation
# -----------------------------------------------------------------------------


def grid_tiles(rows: int, cols: int, n_partitions: int) -> Tuple[int, int]:
    """
    Choose a tiling of the grid into `n_partitions` equal contiguous
    rectangles, as (tiles down, tiles across), the most square one first.

    Raises
    ------
    BadPartition
    """
    if rows * cols % n_partitions:
        raise BadPartition(
            f"{rows}x{cols} grid has {rows * cols} nodes, not divisible by {n_partitions}"
        )

    options = [
        (_pr, n_partitions // _pr)
        for _pr in range(1, n_partitions + 1)
        if n_partitions % _pr == 0
        and rows % _pr == 0
        and cols % (n_partitions // _pr) == 0
    ]
    if not options:
        raise BadPartition(
            f"{rows}x{cols} grid cannot be cut into {n_partitions} equal rectangles"
        )

    return min(options, key=lambda _o: (abs(math.log(_o[0] / _o[1])), _o[0]))


def lnf_instance(
    rows: int,
    cols: int,
    seed: int,
    n_partitions: int,
    n_sources: Optional[int] = None,
    n_sinks: Optional[int] = None,
) -> LnfInstance:
    """
    Generate a balanced, feasible LNF instance; deterministic in its
    arguments.

    Raises
    ------
    BadPartition
        The grid cannot be tiled into `n_partitions` equal rectangles.

    InfeasibleBalance
        No balanced feasible supply vector was found.
    """
    # lazy import; the oracle module imports this one
    from .dald_lnf_oracle import lnf_oracle

    log = get_logger()

    if cols < 2:
        raise ProblemGenerationError("the grid needs at least two columns")

    n_sources = n_sources or max(1, rows // 3)
    n_sinks = n_sinks or max(1, rows // 3)
    if n_sources > rows or n_sinks > rows:
        raise ProblemGenerationError(
            f"{n_sources} sources / {n_sinks} sinks do not fit in a column of {rows} nodes"
        )

    tiles_down, tiles_across = grid_tiles(rows, cols, n_partitions)
    tile_rows, tile_cols = rows // tiles_down, cols // tiles_across

    def node_id(r: int, c: int) -> int:
        return r * cols + c + 1

    def partition_of(r: int, c: int) -> int:
        return (r // tile_rows) * tiles_across + (c // tile_cols) + 1

    rng = np.random.default_rng(seed)

    for attempt in range(1, MAX_ATTEMPTS + 1):
        source_rows = np.sort(rng.choice(rows, size=n_sources, replace=False))
        sink_rows = np.sort(rng.choice(rows, size=n_sinks, replace=False))

        supply = np.maximum(rng.poisson(SUPPLY_MEAN, n_sources), 1).astype(float)
        demand = -np.maximum(rng.poisson(SUPPLY_MEAN, n_sinks), 1).astype(float)

        # absorb the imbalance in the sink with the largest demand
        imbalance = supply.sum() + demand.sum()
        largest = int(np.argmin(demand))
        demand[largest] -= imbalance

        arcs = list()
        for r in range(rows):
            for c in range(cols):
                for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                    if 0 <= r + dr < rows and 0 <= c + dc < cols:
                        arcs.append(
                            LnfArc(
                                tail=node_id(r, c),
                                head=node_id(r + dr, c + dc),
                                cost=int(rng.integers(COST_RANGE[0], COST_RANGE[1] + 1)),
                            )
                        )

        if not demand[largest] < 0:
            log.debug(f"lnf seed {seed}: attempt {attempt}: balancing flipped a sink, resampling")
            continue

        roles = dict()
        for r, s in zip(source_rows, supply):
            roles[node_id(int(r), 0)] = ("source", float(s))
        for r, s in zip(sink_rows, demand):
            roles[node_id(int(r), cols - 1)] = ("sink", float(s))

        nodes = [
            LnfNode(
                id=node_id(_r, _c),
                role=roles.get(node_id(_r, _c), ("transshipment", 0.0))[0],
                supply=roles.get(node_id(_r, _c), ("transshipment", 0.0))[1],
                partition=partition_of(_r, _c),
                row=_r,
                col=_c,
            )
            for _r in range(rows)
            for _c in range(cols)
        ]
        instance = LnfInstance(rows=rows, cols=cols, seed=seed, nodes=nodes, arcs=arcs)

        try:
            lnf_oracle(instance)
        except Infeasible:
            log.debug(f"lnf seed {seed}: attempt {attempt}: infeasible, resampling")
            continue

        return instance

    raise InfeasibleBalance(
        f"no balanced feasible supply found for a {rows}x{cols} grid, seed {seed}, "
        f"after {MAX_ATTEMPTS} attempts"
    )


def lnf_problem(instance: LnfInstance) -> DecomposedProblem:
    """
    Decompose the instance: one subproblem per partition, holding the arcs
    whose tail lies in it.  A node-balance constraint couples subproblems when
    an arc owned elsewhere enters the node.
    """
    owned = _arc_ownership(instance)
    ref_of = arc_refs(instance)
    blocks, terms = list(), list()

    for block_id, arc_ids in owned.items():
        arcs = [instance.arcs[_a] for _a in arc_ids]
        blocks.append(
            VariableBlock(
                block_id=block_id,
                dim=len(arcs),
                lower=np.array([_a.lower for _a in arcs]),
                upper=np.array([_a.upper for _a in arcs]),
                labels=tuple(f"t{_a.tail}_{_a.head}" for _a in arcs),
            )
        )
        terms.append(
            linear_term(
                f"cost{block_id}",
                [(block_id, _j) for _j in range(len(arcs))],
                [float(_a.cost) for _a in arcs],
            )
        )

    incidence: Dict[int, List[Tuple[Tuple[int, int], float]]] = {_n.id: list() for _n in instance.nodes}
    for idx, arc in enumerate(instance.arcs):
        incidence[arc.tail].append((ref_of[idx], 1.0))
        incidence[arc.head].append((ref_of[idx], -1.0))

    constraints = [
        affine_constraint(
            f"node{_n.id}",
            [_ref for _ref, _ in incidence[_n.id]],
            [_c for _, _c in incidence[_n.id]],
            constant=-_n.supply,
        )
        for _n in instance.nodes
        if incidence[_n.id]
    ]

    name = f"lnf-{instance.rows}x{instance.cols}" if instance.rows else "lnf"
    if instance.seed is not None:
        name += f"-s{instance.seed}"

    return build_problem(blocks, terms, constraints, name=name)


def lnf_generate(
    rows: int,
    cols: int,
    seed: int,
    n_partitions: int,
    n_sources: Optional[int] = None,
    n_sinks: Optional[int] = None,
) -> Tuple[DecomposedProblem, LnfInstance]:
    instance = lnf_instance(rows, cols, seed, n_partitions, n_sources, n_sinks)
    return lnf_problem(instance), instance


def arc_refs(instance: LnfInstance) -> Dict[int, Tuple[int, int]]:
    """arc index -> (block_id, element-index) of its flow variable"""
    return {
        _a: (_block_id, _j)
        for _block_id, _arc_ids in _arc_ownership(instance).items()
        for _j, _a in enumerate(_arc_ids)
    }


def arc_flows(instance: LnfInstance, problem: DecomposedProblem, x: np.ndarray) -> np.ndarray:
    """the arc flows of an LNF variable vector, in instance arc order"""
    refs = arc_refs(instance)
    return np.array([x[problem.flat_index(refs[_a])] for _a in range(len(instance.arcs))])


# -----------------------------------------------------------------------------
# Files
# -----------------------------------------------------------------------------


def save_lnf_instance(instance: LnfInstance, path: Path):
    Path(path).write_text(instance.json(indent=2))


def load_lnf_instance(path: Path) -> LnfInstance:
    try:
        return LnfInstance.parse_obj(json.loads(Path(path).read_text()))
    except (ValidationError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Failed to load LNF instance {path}: {str(exc)}")


_PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]
_ROLE_SHAPE = {"source": "box", "sink": "diamond", "transshipment": "circle"}


def lnf_to_dot(instance: LnfInstance, path: Path):
    """Write the instance as a DOT graph; nodes are colored by partition."""
    graph = nx.DiGraph()

    for node in instance.nodes:
        graph.add_node(
            node.id,
            label=f"{node.id}\\n{node.supply:g}" if node.supply else str(node.id),
            shape=_ROLE_SHAPE[node.role],
            style="filled",
            fillcolor=_PALETTE[(node.partition - 1) % len(_PALETTE)],
            pos=f"{node.col},{-node.row}!",
        )

    for arc in instance.arcs:
        graph.add_edge(arc.tail, arc.head, label=str(arc.cost))

    nx.nx_pydot.write_dot(graph, str(path))


# -----------------------------------------------------------------------------
#
#                                 PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


def _arc_ownership(instance: LnfInstance) -> Dict[int, List[int]]:
    partition = instance.partition
    owned: Dict[int, List[int]] = {_p: list() for _p in sorted(set(partition.values()))}
    for idx, arc in enumerate(instance.arcs):
        owned[partition[arc.tail]].append(idx)

    if empty := [_p for _p, _arcs in owned.items() if not _arcs]:
        raise BadPartition(f"partitions {empty} own no arcs")

    return owned

