"""Attractive/repulsive potentials, their gradients, and the combined controller.

The attractive potential is the quadratic bowl  U_att = (k_att/2)|x - goal|^2
with gradient  F_att = k_att (x - goal).  Each obstacle contributes

    U_rep = (k_rep/2) (1/rho - 1/rho0)^2   for 0 < rho < rho0,   0 otherwise,

where rho is the clearance to the obstacle surface, with gradient

    F_rep = -(k_rep/rho^2) (1/rho - 1/rho0) (x - c)/|x - c|.

The combined controller commands  u = -F_att - sum_i F_rep_i  (gradient
descent on the total potential).  ``alpha_bar`` is the explicit class-K
function whose reciprocal is the repulsive potential on the influence shell:
U_rep(h) * alpha_bar(h) = 1 for 0 < h < rho0, which is what qualifies U_rep
as a reciprocal barrier there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .errors import InsideObstacleError
from .scenario import Obstacle, Scenario, rho

INSIDE_OBSTACLE_MSG = "inside obstacle: repulsive potential undefined"

# placeholder interpolation table for selector slots that are not in use
_NO_TABLE = np.zeros(1)
_NO_TABLE.setflags(write=False)

# kernel packing for the combined potential-field controller: filtered kind
# with squared-gradient-norm tightening and scaled-special margin at unit
# scale, whose correction collapses to exactly -F_rep per obstacle
APF_PACKING = (2, 0, 1.0, _NO_TABLE, _NO_TABLE, 1, 1.0, _NO_TABLE, _NO_TABLE)


@dataclass(frozen=True)
class FieldEval:
    """A potential value and its gradient at one point."""

    value: float
    gradient: np.ndarray


def _as_point(x):
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {arr.shape}")
    return float(arr[0]), float(arr[1])


def run_control_kernel(x, scenario: Scenario, packing, phis=None,
                       require_clearance=True):
    """Evaluate a packed controller at one state.

    Returns ``(u, hmin, min_gamma)``.  With ``require_clearance`` (the
    default, for controllers whose repulsive terms are undefined on or inside
    an obstacle) a nonpositive clearance raises; the unfiltered stabilizer
    passes ``False`` since it is defined everywhere.
    """
    px, py = _as_point(x)
    centers, radii, rho0s = scenario.packed()
    if phis is None:
        phis = np.empty(len(scenario.obstacles), dtype=np.float64)
    ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty = packing
    ux, uy, hmin, ming = _k._control_point(
        px, py, float(scenario.goal[0]), float(scenario.goal[1]),
        centers, radii, rho0s,
        scenario.k_att, scenario.k_rep, scenario.alpha_gain,
        ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty, phis)
    if require_clearance and hmin <= 0.0:
        raise InsideObstacleError(INSIDE_OBSTACLE_MSG)
    return np.array([ux, uy]), hmin, ming


def u_att(x, scenario: Scenario) -> float:
    px, py = _as_point(x)
    return _k._att_value(px, py, float(scenario.goal[0]), float(scenario.goal[1]),
                         scenario.k_att)


def f_att(x, scenario: Scenario) -> np.ndarray:
    px, py = _as_point(x)
    gx, gy = _k._att_grad(px, py, float(scenario.goal[0]), float(scenario.goal[1]),
                          scenario.k_att)
    return np.array([gx, gy])


def u_rep(x, obs: Obstacle, scenario: Scenario) -> float:
    if rho(x, obs) <= 0.0:
        raise InsideObstacleError(INSIDE_OBSTACLE_MSG)
    px, py = _as_point(x)
    return _k._rep_value(px, py, float(obs.center[0]), float(obs.center[1]),
                         obs.radius, obs.influence_margin, scenario.k_rep)


def f_rep(x, obs: Obstacle, scenario: Scenario) -> np.ndarray:
    if rho(x, obs) <= 0.0:
        raise InsideObstacleError(INSIDE_OBSTACLE_MSG)
    px, py = _as_point(x)
    gx, gy = _k._rep_grad(px, py, float(obs.center[0]), float(obs.center[1]),
                          obs.radius, obs.influence_margin, scenario.k_rep)
    return np.array([gx, gy])


def attractive_field(x, scenario: Scenario) -> FieldEval:
    return FieldEval(u_att(x, scenario), f_att(x, scenario))


def repulsive_field(x, obs: Obstacle, scenario: Scenario) -> FieldEval:
    return FieldEval(u_rep(x, obs, scenario), f_rep(x, obs, scenario))


def apf_control(x, scenario: Scenario) -> np.ndarray:
    """Combined potential-field control  u = -F_att - sum_i F_rep_i."""
    u, _, _ = run_control_kernel(x, scenario, APF_PACKING)
    return u


def alpha_bar(h: float, scenario: Scenario, rho0: float | None = None) -> float:
    """Class-K reciprocal of the repulsive potential on the influence shell.

        alpha_bar(h) = (2/k_rep) (rho0 h / (rho0 - h))^2,   0 <= h < rho0

    When the scenario's obstacles share a common influence margin it is used
    automatically; otherwise (or for an obstacle-free scenario) pass ``rho0``.
    """
    if rho0 is None:
        margins = {obs.influence_margin for obs in scenario.obstacles}
        if not margins:
            raise ValueError("scenario has no obstacles; pass rho0 explicitly")
        if len(margins) > 1:
            raise ValueError(
                "obstacles have different influence margins; pass rho0 explicitly")
        (rho0,) = margins
    h = float(h)
    if not 0.0 <= h < rho0:
        raise ValueError(f"h must lie in [0, rho0): got h={h}, rho0={rho0}")
    return _k._alpha_bar(h, float(rho0), scenario.k_rep)
