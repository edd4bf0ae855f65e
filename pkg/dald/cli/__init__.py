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

# the command modules register themselves with the `cli` group on import.

from .dald_cli_main import cli  # noqa
from . import dald_cli_run  # noqa
from . import dald_cli_sweep  # noqa
from . import dald_cli_lnf  # noqa
from . import dald_cli_validate  # noqa
