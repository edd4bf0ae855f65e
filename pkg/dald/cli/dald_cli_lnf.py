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
from typing import Optional

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import click

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.problems import lnf_instance, lnf_oracle, lnf_to_dot, save_lnf_instance
from .dald_cli_main import cli
from .dald_cli_common import cli_errors, console

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@cli.command(name="gen-lnf")
@click.option("--rows", type=click.IntRange(min=1), default=12, show_default=True)
@click.option("--cols", type=click.IntRange(min=2), default=12, show_default=True)
@click.option("--parts", type=click.IntRange(min=1), default=4, show_default=True)
@click.option("--seed", type=int, default=50, show_default=True)
@click.option("--sources", type=click.IntRange(min=1))
@click.option("--sinks", type=click.IntRange(min=1))
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="LNF instance JSON file")
@click.option("--dot", type=click.Path(dir_okay=False, path_type=Path),
              help="also write the grid as a DOT graph colored by partition")
@cli_errors
def cmd_gen_lnf(
    rows: int,
    cols: int,
    parts: int,
    seed: int,
    sources: Optional[int],
    sinks: Optional[int],
    output: Path,
    dot: Optional[Path],
):
    """Generate a linear network flow instance."""
    instance = lnf_instance(rows, cols, seed, parts, sources, sinks)
    cost, _ = lnf_oracle(instance)

    output.parent.mkdir(parents=True, exist_ok=True)
    save_lnf_instance(instance, output)

    if dot:
        lnf_to_dot(instance, dot)

    supply = sum(_n.supply for _n in instance.nodes if _n.supply > 0)
    console.print(
        f"{rows}x{cols} grid, {len(instance.arcs)} arcs, {parts} partitions, "
        f"total supply {supply:g}, optimal cost {cost:g} -> {output}",
        highlight=False,
    )
