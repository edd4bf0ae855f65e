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

import logging

import pytest
from rich.logging import RichHandler

from dald.dald_config import (
    AnalyticLinearSpec,
    DaldEnvSettings,
    ExperimentConfig,
    LbfgsbSpec,
    load_experiment_config,
)
from dald.dald_errors import ConfigError
from dald.dald_globals import g_dald
from dald.dald_logger import get_logger, setup_logging
from dald.cli.dald_cli_common import build_config


def test_defaults():
    config = load_experiment_config(dict())
    assert config.method == "dald"
    assert config.problem.name == "counterexample"
    assert config.solver.kind == "projected-gradient"
    assert config.dald.eps_pri == config.dald.eps_dual == 1e-3
    assert config.dald.mu_initial == 0.0 and config.dald.rho_initial == 1.0
    assert config.seeds == [50]
    assert g_dald.config is config


def test_solver_discriminator():
    config = load_experiment_config(dict(solver=dict(kind="lbfgsb", memory=5)))
    assert isinstance(config.solver, LbfgsbSpec)
    assert config.solver.memory == 5


@pytest.mark.parametrize(
    "data",
    [
        dict(dald=dict(criterion="B9")),
        dict(dald=dict(rho_initial=0.0)),
        dict(dald=dict(unknown=1)),
        dict(solver=dict(kind="newton")),
        dict(seeds=[]),
        dict(problem=dict(name="file")),
        dict(plan=dict(kind="matrix", path="/no/such/matrix.json")),
        dict(dald=dict(criterion="B2", eps_dual_initial=1e-4, eps_dual=1e-3)),
    ],
)
def test_invalid_config(data):
    with pytest.raises(ConfigError):
        load_experiment_config(data)


def test_summary_is_accepted_as_config():
    config = ExperimentConfig(method="alm")
    summary = dict(status="Converged", config=config.dict())
    assert load_experiment_config(summary).method == "alm"


def test_build_config_flags(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"solver": {"kind": "lbfgsb", "memory": 7}, "dald": {"v_max": 2}}')

    config = build_config(path, (3, 4), vmax=5, criterion="B4", solver=None)
    assert config.dald.v_max == 5
    assert config.dald.criterion == "B4"
    assert config.solver.memory == 7
    assert config.seeds == [3, 4]

    # switching the solver kind drops the other solver's settings
    config = build_config(path, (), solver="analytic-linear")
    assert isinstance(config.solver, AnalyticLinearSpec)


def test_build_config_lnf_defaults_to_lbfgsb():
    assert build_config(None, (), problem="lnf").solver.kind == "lbfgsb"
    assert build_config(None, (), problem="lnf", solver="projected-gradient").solver.kind == "projected-gradient"


def test_build_config_malformed_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{")
    with pytest.raises(ConfigError):
        build_config(path, ())


def test_env_settings(monkeypatch, tmp_path):
    monkeypatch.setenv("DALD_OUTPUT_ROOT", str(tmp_path))
    assert DaldEnvSettings().output_root == tmp_path


def test_setup_logging_is_idempotent():
    setup_logging("debug")
    setup_logging("info")

    log = get_logger()
    assert log.level == logging.INFO
    assert sum(isinstance(_h, RichHandler) for _h in log.handlers) == 1

    setup_logging(logging.WARNING)
