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
# This file contains the exception hierarchy used throughout the package.  Run
# outcomes such as divergence are *not* exceptions; they are recorded as the
# status of a run trace.  Exceptions are reserved for invalid inputs and for
# solver-layer failures that make a trace meaningless.
# =============================================================================

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "DaldError",
    "ConfigError",
    "ModelError",
    "DuplicateBlockId",
    "EmptyScope",
    "DanglingBlockRef",
    "UnknownBlock",
    "DimensionMismatch",
    "MissingCouplingValue",
    "NonpositivePenalty",
    "ConstraintsPresent",
    "CoordinationError",
    "InvalidNetwork",
    "DiagonalMismatch",
    "CyclicPattern",
    "MultipleRoots",
    "SolverFailure",
    "NonFiniteValue",
    "NotApplicable",
    "SingularNormal",
    "ProblemGenerationError",
    "InfeasibleBalance",
    "BadPartition",
    "Infeasible",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


class DaldError(RuntimeError):
    """base class for all errors raised by this package"""


class ConfigError(DaldError):
    """The User provided configuration failed validation."""


# -----------------------------------------------------------------------------
# Problem model errors
# -----------------------------------------------------------------------------


class ModelError(DaldError, ValueError):
    pass


class DuplicateBlockId(ModelError):
    pass


class EmptyScope(ModelError):
    pass


class DanglingBlockRef(ModelError):
    pass


class UnknownBlock(ModelError):
    pass


class DimensionMismatch(ModelError):
    pass


class MissingCouplingValue(ModelError):
    pass


class NonpositivePenalty(ModelError):
    pass


class ConstraintsPresent(ModelError):
    """Raised when a constraint-free method is given a constrained problem."""


# -----------------------------------------------------------------------------
# Coordination (hierarchical network / matrix) errors
# -----------------------------------------------------------------------------


class CoordinationError(DaldError, ValueError):
    pass


class InvalidNetwork(CoordinationError):
    pass


class DiagonalMismatch(CoordinationError):
    pass


class CyclicPattern(CoordinationError):
    pass


class MultipleRoots(CoordinationError):
    pass


# -----------------------------------------------------------------------------
# Solver layer errors
# -----------------------------------------------------------------------------


class SolverFailure(DaldError):
    """
    A block solve could not produce a usable point.  The driver does not catch
    this error; it propagates to the Caller with the block context in the
    message.
    """


class NonFiniteValue(SolverFailure):
    pass


class NotApplicable(SolverFailure):
    pass


class SingularNormal(SolverFailure):
    pass


# -----------------------------------------------------------------------------
# Problem generator errors
# -----------------------------------------------------------------------------


class ProblemGenerationError(DaldError):
    pass


class InfeasibleBalance(ProblemGenerationError):
    pass


class BadPartition(ProblemGenerationError, ValueError):
    pass


class Infeasible(ProblemGenerationError):
    pass
