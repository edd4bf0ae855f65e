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
# This file contains the run trace: one record per (outer k, sweep v), one
# record per outer iteration, and the final outcome of the run.  A trace is
# written as `trace.csv` and `summary.json`.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import json
import math
from enum import Enum
from pathlib import Path
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import numpy as np
import pandas as pd

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "RunStatus",
    "IterationRecord",
    "OuterRecord",
    "DescentRecord",
    "RunTrace",
    "TRACE_COLUMNS",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

TRACE_COLUMNS = ["k", "v", "cum_inner", "objective", "al_value", "primal_inf", "dual_inf"]


class RunStatus(str, Enum):
    running = "Running"
    converged = "Converged"
    diverged = "Diverged"
    max_outer = "MaxOuterReached"
    max_inner = "MaxInnerReached"


@dataclass(frozen=True)
class IterationRecord:
    k: int
    v: int
    cum_inner: int
    objective: float
    al_value: float
    primal_inf: float
    dual_inf: float
    x: Optional[np.ndarray] = field(default=None, compare=False)


@dataclass(frozen=True)
class OuterRecord:
    """
    The exit of one inner loop.  `on_tolerance` is True when the inner loop
    met its dual tolerance, as standard DALD does, rather than running into
    its sweep cap.
    """

    k: int
    v_exit: int
    on_tolerance: bool
    primal_inf: float
    dual_inf: float


@dataclass(frozen=True)
class DescentRecord:
    """the global AL right after one block solve"""

    k: int
    v: int
    block_id: int
    al_value: float


@dataclass
class RunTrace:
    method: str = "dald"
    problem_name: str = ""
    records: List[IterationRecord] = field(default_factory=list)
    outer: List[OuterRecord] = field(default_factory=list)
    descent: List[DescentRecord] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    status: RunStatus = RunStatus.running
    x: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    rho: Optional[np.ndarray] = None
    k_final: int = 0
    cumulative_inner: int = 0
    wall_time: float = 0.0
    block_statuses: Counter = field(default_factory=Counter)
    extras: Dict[str, Any] = field(default_factory=dict)

    # -------------------------------------------------------------------------
    # Accessors
    # -------------------------------------------------------------------------

    @property
    def converged(self) -> bool:
        return self.status is RunStatus.converged

    @property
    def last(self) -> Optional[IterationRecord]:
        return self.records[-1] if self.records else None

    @property
    def standard_exits(self) -> int:
        return sum(_o.on_tolerance for _o in self.outer)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [[getattr(_r, _c) for _c in TRACE_COLUMNS] for _r in self.records],
            columns=TRACE_COLUMNS,
        )

    def summary(self) -> Dict[str, Any]:
        last = self.last
        return dict(
            method=self.method,
            problem=self.problem_name,
            status=self.status.value,
            x=[] if self.x is None else self.x.tolist(),
            mu=[] if self.mu is None else self.mu.tolist(),
            k_final=self.k_final,
            outer_iterations=len(self.outer),
            cumulative_inner=self.cumulative_inner,
            standard_exits=self.standard_exits,
            capped_exits=len(self.outer) - self.standard_exits,
            objective=None if last is None else last.objective,
            al_value=None if last is None else last.al_value,
            primal_inf=None if last is None else last.primal_inf,
            dual_inf=None if last is None else last.dual_inf,
            wall_time=self.wall_time,
            warnings=list(self.warnings),
            block_statuses=dict(self.block_statuses),
            **self.extras,
        )

    # -------------------------------------------------------------------------
    # Output files
    # -------------------------------------------------------------------------

    def write_csv(self, path: Path):
        self.to_frame().to_csv(path, index=False)

    def write_summary(self, path: Path, config: Optional[dict] = None):
        """
        Write the summary as strict JSON.  A non-finite number, such as the
        objective of a diverged run or an unbounded rho_cap, is written as the
        string "inf", "-inf" or "nan", which the config loader reads back.
        """
        summary = self.summary()
        if config is not None:
            summary["config"] = config
        Path(path).write_text(json.dumps(_strict_json(summary), indent=2, allow_nan=False))

    def write(self, output_dir: Path, config: Optional[dict] = None):
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        self.write_csv(output_dir / "trace.csv")
        self.write_summary(output_dir / "summary.json", config)


# -----------------------------------------------------------------------------
#
#                            PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


def _strict_json(value: Any) -> Any:
    if isinstance(value, dict):
        return {_k: _strict_json(_v) for _k, _v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_strict_json(_v) for _v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value
