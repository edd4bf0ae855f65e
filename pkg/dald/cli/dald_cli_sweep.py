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
# This file contains the v_max sweep: one B4 run per (v_max, seed) cell.  The
# cells are independent and run concurrently on worker threads; each writes
# its own trace and summary, and the sweep table collects the outcomes.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import asyncio
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import click
import pandas as pd

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_config import ExperimentConfig, ProblemSource
from dald.dald_errors import ConfigError
from dald.dald_logger import get_logger
from dald.model import DecomposedProblem
from dald.problems import LnfInstance
from .dald_cli_main import cli, EXIT_OK, EXIT_NOT_CONVERGED
from .dald_cli_common import (
    build_config,
    cli_errors,
    config_record,
    console,
    default_output_dir,
    experiment_options,
    get_problem,
    run_experiment,
)

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["SWEEP_COLUMNS", "parse_vmax_list", "sweep_vmax"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

SWEEP_COLUMNS = ["vmax", "seed", "status", "cumulative_inner", "outer_iters", "objective"]


def parse_vmax_list(text: str) -> List[int]:
    """
    Raises
    ------
    ConfigError
        The list is empty or holds a value that is not a positive integer.
    """
    try:
        values = [int(_v) for _v in text.replace(" ", "").split(",") if _v]
    except ValueError:
        raise ConfigError(f"v_max list must be comma separated integers: {text!r}")

    if not values:
        raise ConfigError("v_max list must not be empty")

    if bad := [_v for _v in values if _v < 1]:
        raise ConfigError(f"v_max values must be positive, found {bad}")

    return values


def sweep_vmax(
    config: ExperimentConfig, vmax_list: Sequence[int], output_dir: Path, jobs: int = 4
) -> pd.DataFrame:
    """
    Run every (v_max, seed) cell with criterion B4 and return the sweep
    table, one row per cell in (v_max, seed) order.
    """
    return asyncio.run(_sweep(config, vmax_list, output_dir, jobs))


@cli.command(name="sweep-vmax")
@experiment_options
@click.option("--vmax-list", required=True, help="comma separated v_max values, e.g. 1,2,4,8")
@click.option("--jobs", type=click.IntRange(min=1), default=4, show_default=True,
              help="cells run at the same time")
@cli_errors
def cmd_sweep_vmax(
    config_file: Optional[Path], seeds: Tuple[int, ...], vmax_list: str, jobs: int, **flags
):
    """
    Run one B4 experiment per (v_max, seed) and write sweep.csv.

    Exits 0 when every cell converged and 2 otherwise.
    """
    values = parse_vmax_list(vmax_list)
    config = build_config(config_file, seeds, **flags)

    output_dir = default_output_dir(config, f"{config.problem.name}-sweep")
    table = sweep_vmax(config, values, output_dir, jobs)

    output_dir.mkdir(parents=True, exist_ok=True)
    table.to_csv(output_dir / "sweep.csv", index=False)

    console.print(table.to_string(index=False), highlight=False)
    console.print(f"results written to {output_dir}", highlight=False)

    all_converged = bool((table["status"] == "Converged").all())
    raise click.exceptions.Exit(EXIT_OK if all_converged else EXIT_NOT_CONVERGED)


# -----------------------------------------------------------------------------
#
#                                 PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


class _ProblemCache:
    """
    Problems are built once per seed and shared by that seed's cells; the
    runs never modify them.
    """

    def __init__(self, source: ProblemSource):
        self.source = source
        self._lock = asyncio.Lock()
        self._cache: Dict[int, Tuple[DecomposedProblem, Optional[LnfInstance]]] = dict()

    async def get(self, seed: int) -> Tuple[DecomposedProblem, Optional[LnfInstance]]:
        async with self._lock:
            if not (has_data := self._cache.get(seed)):
                has_data = await asyncio.to_thread(get_problem, self.source, seed)
                self._cache[seed] = has_data

            return has_data


async def _sweep(
    config: ExperimentConfig, vmax_list: Sequence[int], output_dir: Path, jobs: int
) -> pd.DataFrame:
    log = get_logger()
    semaphore = asyncio.Semaphore(jobs)
    problems = _ProblemCache(config.problem)

    async def run_cell(vmax: int, seed: int) -> dict:
        async with semaphore:
            problem, instance = await problems.get(seed)
            cell_config = config.copy(
                update=dict(dald=config.dald.copy(update=dict(criterion="B4", v_max=vmax)))
            )

            trace = await asyncio.to_thread(run_experiment, cell_config, seed, problem, instance)
            trace.write(output_dir / f"vmax{vmax}-seed{seed}", config=config_record(cell_config, seed))

            log.info(f"{problem.name}: v_max {vmax}, seed {seed}: {trace.status.value}")
            return dict(
                vmax=vmax,
                seed=seed,
                status=trace.status.value,
                cumulative_inner=trace.cumulative_inner,
                outer_iters=len(trace.outer),
                objective=trace.last.objective if trace.last else None,
            )

    rows = await asyncio.gather(*(run_cell(_v, _s) for _v in vmax_list for _s in config.seeds))
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
