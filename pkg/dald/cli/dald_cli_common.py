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
# This file contains the pieces shared by the CLI commands: the experiment
# options, the flag-over-file configuration merge, the problem and plan
# factories, and the single-run executor.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import json
import functools
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

import click
from rich.console import Console

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_config import ExperimentConfig, PlanSource, ProblemSource, load_experiment_config
from dald.dald_errors import ConfigError, DaldError
from dald.dald_globals import g_dald
from dald.dald_logger import get_logger
from dald.model import DecomposedProblem, load_problem_file
from dald.coordination import (
    SweepPlan,
    es_sweep_plan,
    load_matrix,
    network_from_matrix,
    sequential_chain,
)
from dald.driver import RunTrace, run_alm, run_bcd, run_dald
from dald.problems import (
    LnfInstance,
    admm_counterexample,
    lnf_generate,
    lnf_oracle,
    lnf_problem,
    load_lnf_instance,
    oracle_gap,
    toy_example,
)
from .dald_cli_main import EXIT_USAGE

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "console",
    "err_console",
    "experiment_options",
    "cli_errors",
    "build_config",
    "get_problem",
    "get_plan",
    "run_experiment",
    "config_record",
    "default_output_dir",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

console = Console(soft_wrap=True)
err_console = Console(stderr=True, soft_wrap=True)

LNF_PROBLEMS = ("lnf", "lnf-file")

# option name -> dotted path into the experiment configuration
_OVERRIDES = {
    "method": "method",
    "problem": "problem.name",
    "problem_path": "problem.path",
    "rows": "problem.lnf.rows",
    "cols": "problem.lnf.cols",
    "parts": "problem.lnf.n_partitions",
    "sources": "problem.lnf.n_sources",
    "sinks": "problem.lnf.n_sinks",
    "plan": "plan.kind",
    "plan_path": "plan.path",
    "mode": "plan.mode",
    "selection": "plan.selection_policy",
    "quota": "plan.quota",
    "solver": "solver.kind",
    "tol_solver": "solver.tol_solver",
    "criterion": "dald.criterion",
    "vmax": "dald.v_max",
    "eps_pri": "dald.eps_pri",
    "eps_dual": "dald.eps_dual",
    "max_outer": "dald.max_outer",
    "max_inner": "dald.max_cumulative_inner",
    "rho": "dald.rho_initial",
    "penalty_growth": "dald.penalty_growth",
    "rng_seed": "dald.seed",
    "parallel": "dald.parallel_stages",
    "output_dir": "output_dir",
}


def experiment_options(fn):
    """the options shared by `run` and `sweep-vmax`; every one defaults to the config file"""
    options = [
        click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False, path_type=Path),
                     help="JSON experiment configuration; flags override it"),
        click.option("--method", type=click.Choice(["dald", "alm", "bcd"])),
        click.option("--problem", type=click.Choice(["toy", "counterexample", "lnf", "file", "lnf-file"])),
        click.option("--problem-path", type=click.Path(path_type=Path)),
        click.option("--rows", type=click.IntRange(min=1)),
        click.option("--cols", type=click.IntRange(min=1)),
        click.option("--parts", type=click.IntRange(min=1), help="number of LNF partitions"),
        click.option("--sources", type=click.IntRange(min=1)),
        click.option("--sinks", type=click.IntRange(min=1)),
        click.option("--seed", "seeds", type=int, multiple=True, help="LNF generator seed(s)"),
        click.option("--plan", type=click.Choice(["chain", "matrix"])),
        click.option("--plan-path", type=click.Path(path_type=Path)),
        click.option("--mode", type=click.Choice(["full-cycle", "partial-cycle", "selective-repetitive"])),
        click.option("--selection", type=click.Choice(["random", "greedy"])),
        click.option("--quota", type=click.IntRange(min=1)),
        click.option("--solver", type=click.Choice(["projected-gradient", "analytic-linear", "lbfgsb"])),
        click.option("--tol-solver", type=float),
        click.option("--criterion", type=click.Choice(["B1", "B2", "B3", "B4"])),
        click.option("--vmax", type=click.IntRange(min=1)),
        click.option("--eps-pri", type=float),
        click.option("--eps-dual", type=float),
        click.option("--max-outer", type=click.IntRange(min=1)),
        click.option("--max-inner", type=click.IntRange(min=1), help="cumulative inner iteration cap"),
        click.option("--rho", type=float, help="initial penalty"),
        click.option("--penalty-growth", type=float),
        click.option("--rng-seed", type=int, help="seed of the block selection draws"),
        click.option("--parallel/--serial", default=None, help="solve stage blocks on a thread pool"),
        click.option("--output-dir", type=click.Path(file_okay=False, path_type=Path)),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def cli_errors(fn):
    """report package errors as a diagnostic and exit 1"""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DaldError as exc:
            get_logger().debug(f"{fn.__name__}: {type(exc).__name__}", exc_info=exc)
            err_console.print(f"[red]error[/red] ({type(exc).__name__}): {exc}", markup=True, highlight=False)
            raise click.exceptions.Exit(EXIT_USAGE)

    return wrapper


def build_config(config_file: Optional[Path], seeds: Tuple[int, ...], **flags) -> ExperimentConfig:
    """
    Load the configuration file, if any, then apply the flags that were given.

    Raises
    ------
    ConfigError
    """
    data: Dict[str, Any] = dict()
    if config_file:
        try:
            data = json.loads(Path(config_file).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Failed to parse configuration file {config_file}: {str(exc)}")

        # a run summary carries its configuration
        if "config" in data and "status" in data:
            data = data["config"]

    solver_kind = flags.get("solver")
    if solver_kind and data.get("solver", {}).get("kind", solver_kind) != solver_kind:
        # a different solver kind does not share the other solver's settings
        data["solver"] = dict()

    for name, value in flags.items():
        if value is not None:
            _set_path(data, _OVERRIDES[name], value)

    if seeds:
        data["seeds"] = list(seeds)

    problem_name = data.get("problem", {}).get("name")
    if problem_name in LNF_PROBLEMS and "kind" not in data.get("solver", {}):
        _set_path(data, "solver.kind", "lbfgsb")

    return load_experiment_config(data)


def get_problem(source: ProblemSource, seed: int) -> Tuple[DecomposedProblem, Optional[LnfInstance]]:
    """
    Build the problem a configuration names.  LNF sources also return the
    instance so the run can be scored against the oracle.
    """
    match source.name:
        case "toy":
            return toy_example(), None
        case "counterexample":
            return admm_counterexample(), None
        case "file":
            return load_problem_file(source.path), None
        case "lnf-file":
            instance = load_lnf_instance(source.path)
            return lnf_problem(instance), instance
        case "lnf":
            lnf = source.lnf
            return lnf_generate(
                lnf.rows, lnf.cols, seed, lnf.n_partitions, lnf.n_sources, lnf.n_sinks
            )

    raise ConfigError(f"unknown problem source {source.name}")


def get_plan(source: PlanSource, problem: DecomposedProblem, seed: int) -> SweepPlan:
    if source.kind == "matrix":
        net = network_from_matrix(load_matrix(source.path))
    else:
        net = sequential_chain(problem.n_blocks)

    return es_sweep_plan(
        net,
        mode=source.mode,
        selection_policy=source.selection_policy,
        seed=seed,
        quota=source.quota,
        repeats=source.repeats,
    )


def run_experiment(
    config: ExperimentConfig,
    seed: int,
    problem: Optional[DecomposedProblem] = None,
    instance: Optional[LnfInstance] = None,
) -> RunTrace:
    """
    Run the configured method once.  For LNF problems the summary extras
    carry the oracle cost and the relative gap of the final objective.
    """
    log = get_logger()

    if problem is None:
        problem, instance = get_problem(config.problem, seed)

    plan = get_plan(config.plan, problem, config.dald.seed)
    log.info(f"{problem.name}: {config.method} with {config.solver.kind}, seed {seed}")

    match config.method:
        case "alm":
            trace = run_alm(problem, config.solver, config.dald, config.x0)
        case "bcd":
            trace = run_bcd(problem, plan, config.solver, config.dald, config.x0)
        case _:
            trace = run_dald(problem, plan, config.solver, config.dald, config.x0)

    trace.extras["seed"] = seed

    if instance is not None:
        cost, _ = lnf_oracle(instance)
        trace.extras["oracle_cost"] = cost
        trace.extras["oracle_gap"] = (
            oracle_gap(trace.last.objective, cost) if trace.last else None
        )

    return trace


def config_record(config: ExperimentConfig, seed: int) -> dict:
    """the JSON form stored in summary.json; replaying it reruns this seed"""
    return json.loads(config.copy(update=dict(seeds=[seed])).json())


def default_output_dir(config: ExperimentConfig, name: str) -> Path:
    return config.output_dir or (g_dald.settings.output_root / name)


# -----------------------------------------------------------------------------
#
#                                 PRIVATE CODE BEGINS
#
# -----------------------------------------------------------------------------


def _set_path(data: dict, dotted: str, value):
    *parents, leaf = dotted.split(".")
    node = data
    for key in parents:
        node = node.setdefault(key, dict())
    node[leaf] = str(value) if isinstance(value, Path) else value
