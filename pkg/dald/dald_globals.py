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

from typing import Optional
from dataclasses import dataclass, field

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from .dald_config import ExperimentConfig, DaldEnvSettings


@dataclass
class DaldGlobals:
    """
    Define a class to encapsulate the global variables used by the CLI.

    Attributes
    ----------
    config: ExperimentConfig
        The experiment configuration most recently loaded through
        `load_experiment_config`.

    settings: DaldEnvSettings
        The environment settings, read once at import time.
    """

    config: Optional[ExperimentConfig] = None
    settings: DaldEnvSettings = field(default_factory=DaldEnvSettings)


# -----------------------------------------------------------------------------
# Globals
# -----------------------------------------------------------------------------

# the global variables used by this package
g_dald = DaldGlobals()
