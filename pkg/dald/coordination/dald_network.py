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
# This file contains the hierarchical coordination network and its matrix
# encoding.  An edge c -> p means the result of subproblem c is passed on to
# subproblem p; lower levels are solved before higher levels and the single
# root is solved last.
#
# In the hierarchical matrix a[i][j] = 1 (i != j) when node i is a direct
# descendant of node j, i.e. there is an edge i -> j; the diagonal a[i][i]
# holds the out-degree of node i.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import json
from pathlib import Path
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import networkx as nx

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import (
    ConfigError,
    InvalidNetwork,
    DiagonalMismatch,
    CyclicPattern,
    MultipleRoots,
)

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "HierarchicalNetwork",
    "HierarchicalMatrix",
    "matrix_from_network",
    "network_from_matrix",
    "sequential_chain",
    "load_matrix",
    "save_matrix",
    "load_network",
    "save_network",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HierarchicalNetwork:
    """
    The subproblem solving sequence as a DAG over the nodes 1..n.

    Attributes
    ----------
    graph: nx.DiGraph
        The directed graph; edges point from child to parent.

    level_of: dict[int, int]
        The level of every node: 0 for nodes without descendants, otherwise
        one more than the highest level among its direct descendants.
    """

    graph: nx.DiGraph
    level_of: Dict[int, int] = field(init=False)

    def __post_init__(self):
        n = self.graph.number_of_nodes()
        nodes = sorted(self.graph.nodes)

        if nodes != list(range(1, n + 1)):
            raise InvalidNetwork(f"network nodes must be 1..{n}, found {nodes}")

        if loops := list(nx.selfloop_edges(self.graph)):
            raise InvalidNetwork(f"network has self loops: {loops}")

        if not nx.is_directed_acyclic_graph(self.graph):
            cycle = nx.find_cycle(self.graph)
            raise CyclicPattern(f"network has a cycle: {cycle}")

        roots = sorted(_n for _n, _deg in self.graph.out_degree() if _deg == 0)
        if len(roots) != 1:
            raise MultipleRoots(f"network must have exactly one root, found {roots}")

        levels = dict()
        for generation, gen_nodes in enumerate(nx.topological_generations(self.graph)):
            for node in gen_nodes:
                levels[node] = generation

        object.__setattr__(self, "level_of", levels)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Tuple[int, int]]) -> "HierarchicalNetwork":
        graph = nx.DiGraph()
        graph.add_nodes_from(range(1, n + 1))
        for child, parent in edges:
            if not (1 <= child <= n and 1 <= parent <= n):
                raise InvalidNetwork(f"edge ({child}, {parent}) references a node outside 1..{n}")
            graph.add_edge(int(child), int(parent))
        return cls(graph)

    @property
    def n(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def node_ids(self) -> Tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    @property
    def edges(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset(self.graph.edges)

    @property
    def root(self) -> int:
        return next(_n for _n, _deg in self.graph.out_degree() if _deg == 0)

    def children(self, node: int) -> FrozenSet[int]:
        """the direct descendants of `node`, whose results `node` receives"""
        return frozenset(self.graph.predecessors(node))


@dataclass(frozen=True, eq=False)
class HierarchicalMatrix:
    """the n x n integer encoding of a hierarchical network"""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=int))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def off_diagonal(self) -> np.ndarray:
        return self.entries - np.diag(np.diag(self.entries))

    def validate(self):
        """
        Check every hierarchical matrix invariant.

        Raises
        ------
        InvalidNetwork
            Not square, empty, or an off-diagonal entry outside {0, 1}.

        DiagonalMismatch
            A diagonal entry differs from its row's off-diagonal sum.

        CyclicPattern, MultipleRoots
            The off-diagonal pattern is not a single-rooted DAG.
        """
        a = self.entries
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise InvalidNetwork(f"hierarchical matrix must be square and non-empty, found {a.shape}")

        off = self.off_diagonal()
        if not np.isin(off, (0, 1)).all():
            raise InvalidNetwork("off-diagonal entries must be 0 or 1")

        out_degree = off.sum(axis=1)
        if bad := [
            int(_i + 1) for _i in np.flatnonzero(np.diag(a) != out_degree)
        ]:
            raise DiagonalMismatch(
                f"diagonal differs from the out-degree for nodes {bad}: "
                f"diagonal {np.diag(a)[np.array(bad) - 1].tolist()}, "
                f"out-degree {out_degree[np.array(bad) - 1].tolist()}"
            )

        # the graph checks raise CyclicPattern / MultipleRoots
        HierarchicalNetwork.from_edges(self.n, self._edges())

    def _edges(self):
        rows, cols = np.nonzero(self.off_diagonal())
        return [(int(_r) + 1, int(_c) + 1) for _r, _c in zip(rows, cols)]

    def tolist(self):
        return self.entries.tolist()


def matrix_from_network(net: HierarchicalNetwork) -> HierarchicalMatrix:
    a = np.zeros((net.n, net.n), dtype=int)
    for child, parent in net.graph.edges:
        a[child - 1, parent - 1] = 1

    np.fill_diagonal(a, a.sum(axis=1))
    return HierarchicalMatrix(a)


def network_from_matrix(matrix: HierarchicalMatrix) -> HierarchicalNetwork:
    """
    Raises
    ------
    DiagonalMismatch, CyclicPattern, MultipleRoots, InvalidNetwork
    """
    if not isinstance(matrix, HierarchicalMatrix):
        matrix = HierarchicalMatrix(matrix)

    matrix.validate()
    return HierarchicalNetwork.from_edges(matrix.n, matrix._edges())


def sequential_chain(n: int) -> HierarchicalNetwork:
    """
    The full-information chain 1 -> 2 -> ... -> n: every earlier node feeds
    every later node, and node n is the root.
    """
    if n < 1:
        raise InvalidNetwork(f"a chain needs at least one node, received {n}")

    return HierarchicalNetwork.from_edges(
        n, [(_i, _j) for _i in range(1, n + 1) for _j in range(_i + 1, n + 1)]
    )


# -----------------------------------------------------------------------------
# File formats: matrices are 2-D JSON integer arrays, networks are edge lists
# {"n": 4, "edges": [[1, 2], ...]}.
# -----------------------------------------------------------------------------


def _read_json(path: Path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Failed to parse JSON file {path}: {str(exc)}")


def load_matrix(path: Path) -> HierarchicalMatrix:
    """load a matrix file; the invariants are checked by `network_from_matrix`"""
    data = _read_json(path)
    if not (isinstance(data, list) and all(isinstance(_r, list) for _r in data)):
        raise ConfigError(f"{path}: a hierarchical matrix must be a 2-D array")

    try:
        return HierarchicalMatrix(np.array(data, dtype=int))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not an integer matrix: {str(exc)}")


def save_matrix(matrix: HierarchicalMatrix, path: Path):
    Path(path).write_text(json.dumps(matrix.tolist()))


def load_network(path: Path) -> HierarchicalNetwork:
    data = _read_json(path)
    try:
        n = int(data["n"])
        edges = [(int(_c), int(_p)) for _c, _p in data["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a network edge list: {str(exc)}")

    return HierarchicalNetwork.from_edges(n, edges)


def save_network(net: HierarchicalNetwork, path: Path):
    Path(path).write_text(json.dumps({"n": net.n, "edges": sorted(map(list, net.edges))}))
