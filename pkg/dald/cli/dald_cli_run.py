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

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

from pathlib import Path
from typing import Optional, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import click

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .dald_cli_main import cli, EXIT_OK, EXIT_NOT_CONVERGED
from .dald_cli_common import (
    build_config,
    cli_errors,
    config_record,
    console,
    default_output_dir,
    experiment_options,
    run_experiment,
)

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@cli.command(name="run")
@experiment_options
@cli_errors
def cmd_run(config_file: Optional[Path], seeds: Tuple[int, ...], **flags):
    """
    Run one experiment and write trace.csv and summary.json.

    Exits 0 when the run converged and 2 when it diverged or hit a limit.
    """
    config = build_config(config_file, seeds, **flags)
    seed = config.seeds[0]

    trace = run_experiment(config, seed)

    output_dir = default_output_dir(config, f"{trace.problem_name}-{config.method}")
    trace.write(output_dir, config=config_record(config, seed))

    summary = trace.summary()
    console.print(
        f"{trace.problem_name}: {trace.method} {trace.status.value} after "
        f"{summary['outer_iterations']} outer / {trace.cumulative_inner} inner iterations; "
        f"objective {summary['objective']}, "
        f"||C|| {summary['primal_inf']}, ||D|| {summary['dual_inf']}",
        highlight=False,
    )
    if (gap := summary.get("oracle_gap")) is not None:
        console.print(f"oracle cost {summary['oracle_cost']:g}, relative gap {gap:.3e}", highlight=False)

    console.print(f"results written to {output_dir}", highlight=False)

    raise click.exceptions.Exit(EXIT_OK if trace.converged else EXIT_NOT_CONVERGED)
