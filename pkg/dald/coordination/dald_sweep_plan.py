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
# This file contains the sweep planning functions.  A sweep plan arranges the
# subproblems into stages by the Earliest-Start rule (with unit costs this is
# the topological leveling of the hierarchical network), and the coordination
# mode decides which of the planned solves one sweep actually performs.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Mapping, Optional, Sequence, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import networkx as nx

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_config import CoordinationMode, SelectionPolicy
from dald.dald_errors import InvalidNetwork
from dald.dald_logger import get_logger
from dald.model import DecomposedProblem
from .dald_network import HierarchicalNetwork

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "Stage",
    "SweepPlan",
    "es_sweep_plan",
    "select_blocks",
    "validate_stage_coupling",
    "coupled_pairs",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

Stage = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class SweepPlan:
    """
    Attributes
    ----------
    stages: tuple[Stage]
        The planned stages; each node appears in exactly one stage, and the
        nodes within a stage are listed in ascending order.

    predecessors: dict[int, frozenset[int]]
        For each node, the nodes whose results from the current sweep it
        receives.  With a network these are its direct descendants; a plan
        built from bare stages passes everything solved in earlier stages.

    quota: int
        The number of blocks selected per partial-cycle sweep, or the number
        of extra solves drawn per selective-repetitive sweep.

    repeats: dict[int, int]
        Selective-repetitive mode: the total number of solves per sweep of the
        listed nodes.  When empty, the extra solves are drawn at random.
    """

    stages: Tuple[Stage, ...]
    mode: CoordinationMode = "full-cycle"
    selection_policy: SelectionPolicy = "random"
    seed: int = 0
    quota: Optional[int] = None
    repeats: Mapping[int, int] = field(default_factory=dict)
    predecessors: Dict[int, FrozenSet[int]] = field(default_factory=dict)

    def __post_init__(self):
        stages = tuple(tuple(sorted(int(_n) for _n in _s)) for _s in self.stages if _s)
        nodes = [_n for _s in stages for _n in _s]

        if sorted(nodes) != list(range(1, len(nodes) + 1)):
            raise InvalidNetwork(
                f"plan stages must hold each node 1..n exactly once, found {nodes}"
            )

        object.__setattr__(self, "stages", stages)

        if not self.predecessors:
            preds, seen = dict(), frozenset()
            for stage in stages:
                for node in stage:
                    preds[node] = seen
                seen = seen | frozenset(stage)
            object.__setattr__(self, "predecessors", preds)

        stage_of = self.stage_of
        for node, preds in self.predecessors.items():
            if late := [_p for _p in preds if stage_of[_p] >= stage_of[node]]:
                raise InvalidNetwork(
                    f"node {node} is planned no later than its predecessors {sorted(late)}"
                )

        if bad := [_n for _n, _c in self.repeats.items() if _n not in stage_of or _c < 1]:
            raise InvalidNetwork(f"invalid repeat entries for nodes {bad}")

    @property
    def n(self) -> int:
        return sum(len(_s) for _s in self.stages)

    @property
    def node_ids(self) -> Tuple[int, ...]:
        return tuple(range(1, self.n + 1))

    @property
    def stage_of(self) -> Dict[int, int]:
        return {_n: _idx for _idx, _s in enumerate(self.stages) for _n in _s}

    @property
    def effective_quota(self) -> int:
        if self.quota is not None:
            return min(self.quota, self.n) if self.mode == "partial-cycle" else self.quota
        return max(1, self.n // 2) if self.mode == "partial-cycle" else 1


def es_sweep_plan(
    net: HierarchicalNetwork,
    mode: CoordinationMode = "full-cycle",
    selection_policy: SelectionPolicy = "random",
    seed: int = 0,
    quota: Optional[int] = None,
    repeats: Optional[Mapping[int, int]] = None,
) -> SweepPlan:
    """
    Level the network by the Earliest-Start rule with unit costs: a node's
    stage is one more than the latest stage among its direct descendants.
    """
    stages = [tuple(sorted(_gen)) for _gen in nx.topological_generations(net.graph)]

    return SweepPlan(
        stages=tuple(stages),
        mode=mode,
        selection_policy=selection_policy,
        seed=seed,
        quota=quota,
        repeats=dict(repeats or {}),
        predecessors={_n: net.children(_n) for _n in net.node_ids},
    )


def select_blocks(
    plan: SweepPlan,
    sweep_index: int,
    rng: np.random.Generator,
    last_dual: Optional[Mapping[int, float]] = None,
) -> List[Stage]:
    """
    Return the ordered stage list that sweep `sweep_index` executes.

    * full-cycle: the planned stages unchanged.
    * partial-cycle: the planned stages restricted to `quota` blocks, chosen
      uniformly at random or greedily by the largest last dual residual
      (ties by ascending id).
    * selective-repetitive: the planned stages, followed by singleton stages
      for the additional solves; these come from `repeats`, otherwise `quota`
      blocks are drawn uniformly with replacement.
    """
    log = get_logger()

    if plan.mode == "full-cycle":
        return list(plan.stages)

    nodes = np.array(plan.node_ids)
    quota = plan.effective_quota

    if plan.mode == "partial-cycle":
        if plan.selection_policy == "greedy":
            last_dual = last_dual or {}
            ranked = sorted(nodes.tolist(), key=lambda _n: (-last_dual.get(_n, np.inf), _n))
            chosen = set(ranked[:quota])
        else:
            chosen = set(rng.choice(nodes, size=quota, replace=False).tolist())

        log.debug(f"sweep {sweep_index}: partial-cycle selects {sorted(chosen)}")
        stages = [tuple(_n for _n in _s if _n in chosen) for _s in plan.stages]
        return [_s for _s in stages if _s]

    # selective-repetitive

    if plan.repeats:
        extra = [_n for _n in sorted(plan.repeats) for _ in range(plan.repeats[_n] - 1)]
    else:
        extra = sorted(rng.choice(nodes, size=quota, replace=True).tolist())

    log.debug(f"sweep {sweep_index}: selective-repetitive repeats {extra}")
    return list(plan.stages) + [(_n,) for _n in extra]


def coupled_pairs(problem: DecomposedProblem, stage: Sequence[int]) -> List[Tuple[int, int]]:
    return [
        (_i, _j)
        for _k, _i in enumerate(stage)
        for _j in stage[_k + 1 :]
        if _j in problem.coupling_map.get(_i, ())
    ]


def validate_stage_coupling(problem: DecomposedProblem, plan: SweepPlan) -> List[str]:
    """
    Report every pair of coupled subproblems placed in the same stage.  Such
    a stage is not run concurrently; the driver solves its blocks one after
    the other in ascending id order, each seeing the results before it.
    """
    log = get_logger()
    warnings = list()

    for idx, stage in enumerate(plan.stages, start=1):
        for i, j in coupled_pairs(problem, stage):
            msg = (
                f"stage {idx}: subproblems {i} and {j} are coupled; "
                f"the stage is solved serially in ascending order"
            )
            log.warning(f"{problem.name or 'problem'}: {msg}")
            warnings.append(msg)

    return warnings
