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

import logging

# -----------------------------------------------------------------------------
# Public Imports
# -----------------------------------------------------------------------------

from rich.logging import RichHandler

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = ["get_logger", "setup_logging"]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------

_LOGGER_NAME = "dald"


def get_logger() -> logging.Logger:
    """Returns the package logger; handlers are attached by `setup_logging`"""
    return logging.getLogger(_LOGGER_NAME)


def setup_logging(level: str | int = logging.WARNING) -> logging.Logger:
    """
    Attach a rich console handler to the package logger.  Calling this function
    more than once only changes the level.

    Parameters
    ----------
    level:
        The logging level name ("debug", "info", ...) or numeric value.
    """
    log = get_logger()

    if isinstance(level, str):
        level = logging.getLevelName(level.upper())

    log.setLevel(level)

    if not any(isinstance(_h, RichHandler) for _h in log.handlers):
        handler = RichHandler(show_path=False, markup=False)
        handler.setFormatter(logging.Formatter("%(message)s"))
        log.addHandler(handler)
        log.propagate = False

    return log
