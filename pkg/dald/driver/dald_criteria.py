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
# This file contains the inner-loop termination criteria and the outer-loop
# stopping rule.
#
#   B1: ||D||_inf <= eps_dual
#   B2: ||D||_inf <= eps_dual^k, a tolerance that decays to eps_dual
#   B3: v = v_max^k, a sweep cap that grows without bound, or B1
#   B4: v = v_max, a fixed sweep cap, or B1
#
# All tolerance comparisons are inclusive.
# =============================================================================

# -----------------------------------------------------------------------------
# System Imports
# -----------------------------------------------------------------------------

import math

# -----------------------------------------------------------------------------
# Private Imports
# -----------------------------------------------------------------------------

from dald.dald_config import DaldConfig, Criterion

# -----------------------------------------------------------------------------
# Exports
# -----------------------------------------------------------------------------

__all__ = [
    "eps_dual_at",
    "vmax_at",
    "dual_tolerance_met",
    "inner_should_stop",
    "outer_should_stop",
]

# -----------------------------------------------------------------------------
#
#                                 CODE BEGINS
#
# -----------------------------------------------------------------------------


def eps_dual_at(k: int, config: DaldConfig) -> float:
    """B2 tolerance: max(eps_dual, eps0 * decay^(k-1))"""
    return max(config.eps_dual, config.eps_dual_initial * config.eps_dual_decay ** (k - 1))


def vmax_at(k: int, config: DaldConfig) -> int:
    """B3 sweep cap: ceil(v0 * growth^(k-1)), at least 1"""
    return max(1, math.ceil(config.vmax_initial * config.vmax_growth ** (k - 1)))


def dual_tolerance_met(criterion: Criterion, k: int, dual_inf_norm: float, config: DaldConfig) -> bool:
    eps = eps_dual_at(k, config) if criterion == "B2" else config.eps_dual
    return dual_inf_norm <= eps


def inner_should_stop(
    criterion: Criterion, k: int, v: int, dual_inf_norm: float, config: DaldConfig
) -> bool:
    """
    Parameters
    ----------
    criterion:
        One of "B1" .. "B4".

    k, v:
        The 1-based outer iteration and the number of sweeps completed in it.

    dual_inf_norm:
        ||D||_inf of the sweep just completed.
    """
    if dual_tolerance_met(criterion, k, dual_inf_norm, config):
        return True

    match criterion:
        case "B3":
            return v >= vmax_at(k, config)
        case "B4":
            return v >= config.v_max

    return False


def outer_should_stop(primal_inf_norm: float, dual_inf_norm: float, config: DaldConfig) -> bool:
    """both residuals within tolerance; the dual test keeps a capped inner loop from stopping early"""
    return primal_inf_norm <= config.eps_pri and dual_inf_norm <= config.eps_dual
