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

import json
from pathlib import Path
from typing import Optional

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import click

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_errors import ConfigError, InvalidNetwork
from dald.dald_config import ProblemSource
from dald.model import DecomposedProblem
from dald.coordination import (
    es_sweep_plan,
    load_matrix,
    network_from_matrix,
    validate_stage_coupling,
)
from .dald_cli_main import cli, EXIT_OK
from .dald_cli_common import cli_errors, console, get_problem

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


@cli.command(name="validate")
@click.option("--plan", "plan_path", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              required=True, help="hierarchical matrix JSON file")
@click.option("--problem", "problem_ref",
              help="builtin problem name (toy, counterexample) or a problem / LNF instance JSON file")
@cli_errors
def cmd_validate(plan_path: Path, problem_ref: Optional[str]):
    """
    Check a hierarchical matrix and, given a problem, report the subproblems
    that are coupled but planned in the same stage.

    Exits 0 when there are no hard violations; coupling findings are warnings.
    """
    matrix = load_matrix(plan_path)
    net = network_from_matrix(matrix)
    plan = es_sweep_plan(net)
    console.print(
        f"{plan_path}: valid hierarchical matrix, {net.n} nodes, root {net.root}, "
        f"stages {[list(_s) for _s in plan.stages]}",
        highlight=False,
    )

    if problem_ref is None:
        raise click.exceptions.Exit(EXIT_OK)

    problem = _load_problem(problem_ref)
    if problem.n_blocks != net.n:
        raise InvalidNetwork(
            f"{problem.name or problem_ref} has {problem.n_blocks} subproblems, "
            f"the plan has {net.n} nodes"
        )

    warnings = validate_stage_coupling(problem, plan)
    for msg in warnings:
        console.print(f"warning: {msg}", highlight=False)

    console.print(f"{problem.name or problem_ref}: {len(warnings)} stage coupling warnings", highlight=False)
    raise click.exceptions.Exit(EXIT_OK)


# -----------------------------------------------------------------------------
#
#                                 PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


def _load_problem(ref: str) -> DecomposedProblem:
    if ref in ("toy", "counterexample"):
        return get_problem(ProblemSource(name=ref), seed=0)[0]

    path = Path(ref)
    if not path.is_file():
        raise ConfigError(f"problem file does not exist: {ref}")

    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Failed to parse problem file {path}: {str(exc)}")

    # LNF instance files carry nodes and arcs; problem files carry blocks
    kind = "lnf-file" if isinstance(data, dict) and "nodes" in data else "file"
    return get_problem(ProblemSource(name=kind, path=path), seed=0)[0]
