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
# This file contains the reference min-cost-flow solver used to score DALD
# runs on LNF instances.  It is an exact successive-shortest-path solver: a
# super source feeds every supply node, every demand node drains into a super
# sink, and flow is pushed along cheapest residual paths.  Paths are found with
# Dijkstra on reduced costs; the node potentials start from one Bellman-Ford
# pass so negative arc costs are allowed.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import heapq
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, TYPE_CHECKING

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import Infeasible

if TYPE_CHECKING:
    from .dald_lnf import LnfInstance

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["lnf_oracle", "oracle_gap"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

_FLOW_TOL = 1e-9


def lnf_oracle(instance: "LnfInstance") -> Tuple[float, np.ndarray]:
    """
    Solve the instance exactly.

    Returns
    -------
    tuple
        The optimal cost and the optimal flow on each arc, in instance arc
        order.

    Raises
    ------
    Infeasible
        The supplies cannot be routed within the arc bounds.
    """
    index = {_n.id: _pos for _pos, _n in enumerate(instance.nodes)}
    n_nodes = len(index)
    source, sink = n_nodes, n_nodes + 1

    graph = _ResidualGraph(n_nodes + 2)
    supply = np.array([_n.supply for _n in instance.nodes], dtype=float)

    # shift the lower bounds out of the arcs
    arc_edges = list()
    for arc in instance.arcs:
        tail, head = index[arc.tail], index[arc.head]
        supply[tail] -= arc.lower
        supply[head] += arc.lower
        arc_edges.append(graph.add_edge(tail, head, cap=arc.upper - arc.lower, cost=arc.cost))

    required = 0.0
    for node, s in enumerate(supply):
        if s > _FLOW_TOL:
            graph.add_edge(source, node, cap=s, cost=0.0)
            required += s
        elif s < -_FLOW_TOL:
            graph.add_edge(node, sink, cap=-s, cost=0.0)

    pushed = graph.min_cost_flow(source, sink, required)
    if pushed < required - 1e-6 * max(1.0, required):
        raise Infeasible(
            f"only {pushed:g} of {required:g} units of supply can be routed"
        )

    flow = np.array(
        [graph.edges[_e].flow + _arc.lower for _e, _arc in zip(arc_edges, instance.arcs)]
    )
    return instance.flow_cost(flow), flow


def oracle_gap(objective: float, oracle_cost: float) -> float:
    """relative gap of a run's objective to the optimal cost"""
    return abs(objective - oracle_cost) / max(1.0, abs(oracle_cost))


# -----------------------------------------------------------------------------
#
#                                 PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


@dataclass
class _Edge:
    src: int
    dst: int
    cap: float
    cost: float
    flow: float = 0.0

    @property
    def residual(self) -> float:
        return self.cap - self.flow


@dataclass
class _ResidualGraph:
    """
    Edges are stored in pairs: edge e and its reverse e ^ 1.  Parallel arcs
    are distinct edges.
    """

    n: int
    edges: List[_Edge] = field(default_factory=list)
    adj: List[List[int]] = field(init=False)

    def __post_init__(self):
        self.adj = [list() for _ in range(self.n)]

    def add_edge(self, src: int, dst: int, cap: float, cost: float) -> int:
        idx = len(self.edges)
        self.edges.append(_Edge(src, dst, cap, cost))
        self.edges.append(_Edge(dst, src, 0.0, -cost))
        self.adj[src].append(idx)
        self.adj[dst].append(idx + 1)
        return idx

    def push(self, e: int, amount: float):
        self.edges[e].flow += amount
        self.edges[e ^ 1].flow -= amount

    def bellman_ford(self, src: int) -> np.ndarray:
        dist = np.full(self.n, np.inf)
        dist[src] = 0.0
        for _ in range(self.n - 1):
            changed = False
            for edge in self.edges:
                if edge.residual > _FLOW_TOL and dist[edge.src] + edge.cost < dist[edge.dst]:
                    dist[edge.dst] = dist[edge.src] + edge.cost
                    changed = True
            if not changed:
                break
        return dist

    def dijkstra(self, src: int, potential: np.ndarray) -> Tuple[np.ndarray, List[Optional[int]]]:
        dist = np.full(self.n, np.inf)
        parent: List[Optional[int]] = [None] * self.n
        dist[src] = 0.0
        heap = [(0.0, src)]

        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for e in self.adj[u]:
                edge = self.edges[e]
                if edge.residual <= _FLOW_TOL:
                    continue
                reduced = edge.cost + potential[u] - potential[edge.dst]
                if (nd := d + max(reduced, 0.0)) < dist[edge.dst]:
                    dist[edge.dst] = nd
                    parent[edge.dst] = e
                    heapq.heappush(heap, (nd, edge.dst))

        return dist, parent

    def min_cost_flow(self, src: int, dst: int, required: float) -> float:
        potential = self.bellman_ford(src)
        potential[~np.isfinite(potential)] = 0.0
        pushed = 0.0

        while pushed < required - _FLOW_TOL:
            dist, parent = self.dijkstra(src, potential)
            if not np.isfinite(dist[dst]):
                break

            reachable = np.isfinite(dist)
            potential[reachable] += dist[reachable]

            path = list()
            v = dst
            while (e := parent[v]) is not None:
                path.append(e)
                v = self.edges[e].src

            amount = min(required - pushed, min(self.edges[_e].residual for _e in path))
            for e in path:
                self.push(e, amount)
            pushed += amount

        return pushed
