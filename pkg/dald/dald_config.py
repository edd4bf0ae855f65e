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

import math
from pathlib import Path
from typing import Optional, Literal, Union, Dict, List

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

from pydantic import (
    BaseModel,
    BaseSettings,
    Extra,
    Field,
    PositiveFloat,
    PositiveInt,
    ValidationError,
    root_validator,
    validator,
)

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .dald_errors import ConfigError

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "ProjectedGradientSpec",
    "AnalyticLinearSpec",
    "LbfgsbSpec",
    "SolverSpec",
    "Criterion",
    "CoordinationMode",
    "SelectionPolicy",
    "DaldConfig",
    "LnfParams",
    "ProblemSource",
    "PlanSource",
    "ExperimentConfig",
    "DaldEnvSettings",
    "load_experiment_config",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

# -----------------------------------------------------------------------------
# Use pydantic models to validate the User configuration.  Configure pydantic to
# prevent the User from providing (accidentally) any fields that are not
# specifically supported; via the Extra.forbid config.
# -----------------------------------------------------------------------------

Criterion = Literal["B1", "B2", "B3", "B4"]
CoordinationMode = Literal["full-cycle", "partial-cycle", "selective-repetitive"]
SelectionPolicy = Literal["random", "greedy"]


# -----------------------------------------------------------------------------
# Solver layer specifications
# -----------------------------------------------------------------------------


class ProjectedGradientSpec(BaseModel, extra=Extra.forbid):
    """
    Projected gradient descent with Armijo backtracking.  The defaults realize
    an "exact" block solve.

    Attributes
    ----------
    tol_solver:
        Exit when the projected step at `initial_step` has an inf-norm at or
        below tol_solver * (1 + ||x||_inf).

    armijo_c, shrink, initial_step:
        The sufficient-decrease constant, the backtracking factor, and the
        trial step used at every iteration.
    """

    kind: Literal["projected-gradient"] = "projected-gradient"
    tol_solver: PositiveFloat = 1e-10
    max_iters: PositiveInt = 100_000
    armijo_c: float = Field(1e-4, gt=0.0, lt=1.0)
    shrink: float = Field(0.5, gt=0.0, lt=1.0)
    initial_step: PositiveFloat = 1.0


class AnalyticLinearSpec(BaseModel, extra=Extra.forbid):
    """closed-form block minimizer for quadratic local AL functions"""

    kind: Literal["analytic-linear"] = "analytic-linear"
    tol_solver: PositiveFloat = 1e-10
    max_iters: PositiveInt = 1


class LbfgsbSpec(BaseModel, extra=Extra.forbid):
    """bounded quasi-Newton block minimizer (scipy L-BFGS-B)"""

    kind: Literal["lbfgsb"] = "lbfgsb"
    tol_solver: PositiveFloat = 1e-10
    max_iters: PositiveInt = 15_000
    ftol: PositiveFloat = 1e-15
    memory: PositiveInt = 20


SolverSpec = Union[ProjectedGradientSpec, AnalyticLinearSpec, LbfgsbSpec]


# -----------------------------------------------------------------------------
# Driver configuration
# -----------------------------------------------------------------------------


class DaldConfig(BaseModel, extra=Extra.forbid):
    """
    The three-loop driver configuration.  The defaults mirror the reference
    experiments: mu=0, rho=1 (fixed), eps_pri = eps_dual = 1e-3.
    """

    eps_pri: PositiveFloat = 1e-3
    eps_dual: PositiveFloat = 1e-3
    criterion: Criterion = "B1"

    # B2: eps_dual^k = max(eps_dual, eps_dual_initial * eps_dual_decay^(k-1))
    eps_dual_initial: PositiveFloat = 1e-1
    eps_dual_decay: float = Field(0.5, gt=0.0, le=1.0)

    # B3: v_max^k = ceil(vmax_initial * vmax_growth^(k-1))
    vmax_initial: PositiveInt = 1
    vmax_growth: float = Field(2.0, gt=1.0)

    # B4
    v_max: PositiveInt = 1

    max_outer: PositiveInt = 1000
    max_cumulative_inner: PositiveInt = 10_000
    divergence_norm: PositiveFloat = 1e8

    mu_initial: float = 0.0
    rho_initial: PositiveFloat = 1.0
    penalty_growth: float = Field(1.0, ge=1.0)
    rho_cap: PositiveFloat = math.inf

    record_snapshots: bool = False
    record_descent: bool = False
    parallel_stages: bool = False
    seed: int = 0

    @root_validator(skip_on_failure=True)
    def _check_b2_schedule(cls, values):
        if values["criterion"] != "B2":
            return values

        # the decaying tolerance must start at or above the floor, and it must
        # reach the floor; a decay of 1 only does so when it starts there.

        if values["eps_dual_initial"] < values["eps_dual"]:
            raise ValueError("eps_dual_initial must be >= eps_dual for criterion B2")

        if values["eps_dual_decay"] >= 1.0 and (
            values["eps_dual_initial"] != values["eps_dual"]
        ):
            raise ValueError("eps_dual_decay must be < 1 for criterion B2")

        return values


class LnfParams(BaseModel, extra=Extra.forbid):
    rows: PositiveInt = 12
    cols: PositiveInt = 12
    n_partitions: PositiveInt = 4
    n_sources: Optional[PositiveInt] = None
    n_sinks: Optional[PositiveInt] = None


class ProblemSource(BaseModel, extra=Extra.forbid):
    """
    Where the problem comes from: a builtin name, a problem-definition JSON file,
    an LNF instance JSON file, or the LNF generator.
    """

    name: Literal["toy", "counterexample", "lnf", "file", "lnf-file"] = (
        "counterexample"
    )
    path: Optional[Path] = None
    lnf: LnfParams = LnfParams()

    @root_validator(skip_on_failure=True)
    def _check_path(cls, values):
        if values["name"] in ("file", "lnf-file"):
            path = values.get("path")
            if path is None or not Path(path).exists():
                raise ValueError(f"problem file does not exist: {path}")
        return values


class PlanSource(BaseModel, extra=Extra.forbid):
    """
    The subproblem solving sequence.  "chain" is the full-information sequential
    chain 1 -> 2 -> ... -> n; "matrix" loads a hierarchical matrix JSON file.
    """

    kind: Literal["chain", "matrix"] = "chain"
    path: Optional[Path] = None
    mode: CoordinationMode = "full-cycle"
    selection_policy: SelectionPolicy = "random"
    quota: Optional[PositiveInt] = None
    repeats: Dict[int, int] = Field(default_factory=dict)

    @root_validator(skip_on_failure=True)
    def _check_path(cls, values):
        if values["kind"] == "matrix":
            path = values.get("path")
            if path is None or not Path(path).exists():
                raise ValueError(f"hierarchical matrix file does not exist: {path}")
        return values


class ExperimentConfig(BaseModel, extra=Extra.forbid):
    """the complete description of one CLI run; stored in summary.json"""

    method: Literal["dald", "alm", "bcd"] = "dald"
    problem: ProblemSource = ProblemSource()
    plan: PlanSource = PlanSource()
    solver: SolverSpec = Field(ProjectedGradientSpec(), discriminator="kind")
    dald: DaldConfig = DaldConfig()
    x0: Optional[List[float]] = None
    seeds: List[int] = Field(default_factory=lambda: [50])
    output_dir: Optional[Path] = None

    @validator("seeds")
    def _check_seeds(cls, value):
        if not value:
            raise ValueError("seed list must not be empty")
        return value


class DaldEnvSettings(BaseSettings):
    """environment overrides; DALD_OUTPUT_ROOT sets the default output root"""

    output_root: Path = Path(".")

    class Config:
        env_prefix = "DALD_"


# -----------------------------------------------------------------------------


def load_experiment_config(config: dict) -> ExperimentConfig:
    """
    Validate the User provided configuration dictionary and make it the active
    configuration.

    Parameters
    ----------
    config: dict
        Either a bare experiment config, or a run summary that carries one
        under the "config" key (which allows a run to be replayed from its own
        summary.json).

    Raises
    ------
    ConfigError
        When the configuration does not validate.
    """
    from .dald_globals import g_dald

    if "config" in config and "status" in config:
        config = config["config"]

    try:
        g_dald.config = ExperimentConfig.parse_obj(config)
    except ValidationError as exc:
        raise ConfigError(f"Failed to load experiment configuration: {str(exc)}")

    return g_dald.config
