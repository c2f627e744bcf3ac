"""Workspace description: goal, circular obstacles, gains, and validation.

A scenario is a goal position plus a list of circular obstacles, each with a
radius and an influence margin (the shell around the obstacle inside which
the repulsive field is nonzero), together with the attractive/repulsive gains
and the linear class-K gain used by the barrier condition.

Constructors only coerce types and reject non-finite numbers; the semantic
invariants (positive gains and radii, goal outside every influence region)
are checked by :func:`validate_scenario`, which reports *all* violations at
once.  This split lets property tests build deliberately broken scenarios and
assert on the report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ScenarioValidationError

BOUNDARY_TOL = 1e-9

_SCENARIO_KEYS = {"goal", "obstacles", "k_att", "k_rep", "alpha_gain"}
_OBSTACLE_KEYS = {"center", "radius", "rho0"}


def _vec2(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (2,):
        raise ValueError(f"{name} must be a 2-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr.tolist()}")
    arr.setflags(write=False)
    return arr


def _finite(value, name: str) -> float:
    out = float(value)
    if not math.isfinite(out):
        raise ValueError(f"{name} must be finite, got {out}")
    return out


@dataclass(frozen=True)
class Obstacle:
    """Circular obstacle with an influence shell of width ``influence_margin``."""

    center: np.ndarray
    radius: float
    influence_margin: float

    def __post_init__(self):
        object.__setattr__(self, "center", _vec2(self.center, "obstacle center"))
        object.__setattr__(self, "radius", _finite(self.radius, "radius"))
        object.__setattr__(
            self, "influence_margin", _finite(self.influence_margin, "influence_margin"))

    @property
    def rho0(self) -> float:
        return self.influence_margin


@dataclass(frozen=True)
class Scenario:
    goal: np.ndarray
    obstacles: tuple = ()
    k_att: float = 1.0
    k_rep: float = 1.0
    alpha_gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "goal", _vec2(self.goal, "goal"))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "k_att", _finite(self.k_att, "k_att"))
        object.__setattr__(self, "k_rep", _finite(self.k_rep, "k_rep"))
        object.__setattr__(self, "alpha_gain", _finite(self.alpha_gain, "alpha_gain"))
        m = len(self.obstacles)
        centers = np.empty((m, 2), dtype=np.float64)
        radii = np.empty(m, dtype=np.float64)
        rho0s = np.empty(m, dtype=np.float64)
        for i, obs in enumerate(self.obstacles):
            centers[i] = obs.center
            radii[i] = obs.radius
            rho0s[i] = obs.influence_margin
        for arr in (centers, radii, rho0s):
            arr.setflags(write=False)
        object.__setattr__(self, "_centers", centers)
        object.__setattr__(self, "_radii", radii)
        object.__setattr__(self, "_rho0s", rho0s)

    def packed(self):
        """Obstacle arrays in the layout the numeric kernels expect."""
        return self._centers, self._radii, self._rho0s


@dataclass(frozen=True)
class SafeSetSample:
    """Signed clearance at a point, with interior/boundary classification."""

    h: float
    in_interior: bool = field(init=False)
    on_boundary: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "in_interior", self.h > 0.0)
        object.__setattr__(self, "on_boundary", abs(self.h) <= BOUNDARY_TOL)


def rho(x, obs: Obstacle) -> float:
    """Signed distance from ``x`` to the obstacle surface (negative inside)."""
    x = np.asarray(x, dtype=np.float64)
    ox = float(x[0]) - float(obs.center[0])
    oy = float(x[1]) - float(obs.center[1])
    return math.sqrt(ox * ox + oy * oy) - obs.radius


def classify_safety(x, scenario: Scenario) -> SafeSetSample:
    """Minimum clearance over all obstacles (+inf when there are none)."""
    h = math.inf
    for obs in scenario.obstacles:
        h = min(h, rho(x, obs))
    return SafeSetSample(h)


def scenario_violations(scenario: Scenario) -> list:
    violations = []
    if scenario.k_att <= 0.0:
        violations.append("k_att must be positive")
    if scenario.k_rep <= 0.0:
        violations.append("k_rep must be positive")
    if scenario.alpha_gain <= 0.0:
        violations.append("alpha_gain must be positive")
    for i, obs in enumerate(scenario.obstacles):
        if obs.radius <= 0.0:
            violations.append(f"obstacle {i}: radius must be positive")
        if obs.influence_margin <= 0.0:
            violations.append(f"obstacle {i}: influence_margin must be positive")
    for i, obs in enumerate(scenario.obstacles):
        if obs.radius > 0.0 and obs.influence_margin > 0.0:
            if rho(scenario.goal, obs) < obs.influence_margin:
                violations.append(f"goal inside influence region (obstacle {i})")
    return violations


def validate_scenario(scenario: Scenario) -> Scenario:
    """Return the scenario unchanged, or raise listing every violated invariant."""
    violations = scenario_violations(scenario)
    if violations:
        raise ScenarioValidationError(violations)
    return scenario


def scenario_from_dict(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise ValueError("scenario document must be a JSON object")
    unknown = set(data) - _SCENARIO_KEYS
    if unknown:
        raise ValueError(f"unknown scenario key(s): {sorted(unknown)}")
    missing = _SCENARIO_KEYS - set(data)
    if missing:
        raise ValueError(f"missing scenario key(s): {sorted(missing)}")
    obstacles = []
    for i, entry in enumerate(data["obstacles"]):
        if not isinstance(entry, dict):
            raise ValueError(f"obstacle {i} must be an object")
        unknown = set(entry) - _OBSTACLE_KEYS
        if unknown:
            raise ValueError(f"obstacle {i}: unknown key(s): {sorted(unknown)}")
        missing = _OBSTACLE_KEYS - set(entry)
        if missing:
            raise ValueError(f"obstacle {i}: missing key(s): {sorted(missing)}")
        obstacles.append(Obstacle(entry["center"], entry["radius"], entry["rho0"]))
    scenario = Scenario(
        goal=data["goal"],
        obstacles=tuple(obstacles),
        k_att=data["k_att"],
        k_rep=data["k_rep"],
        alpha_gain=data["alpha_gain"],
    )
    return validate_scenario(scenario)


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "goal": scenario.goal.tolist(),
        "obstacles": [
            {"center": obs.center.tolist(), "radius": obs.radius, "rho0": obs.influence_margin}
            for obs in scenario.obstacles
        ],
        "k_att": scenario.k_att,
        "k_rep": scenario.k_rep,
        "alpha_gain": scenario.alpha_gain,
    }


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(scenario), fh, indent=2)
        fh.write("\n")
