"""Closed-loop rollout of the single integrator and trajectory bookkeeping.

The plant is  xdot = u  with u produced by one of four controller kinds:

* ``apf``            — gradient descent on the combined potential
* ``nominal_only``   — the min-norm stabilizer, obstacles ignored
* ``special_filter`` — the stabilizer filtered with the unit scaled-special
  tightening (pointwise equal to ``apf``)
* ``generalized``    — the stabilizer filtered with selectable tightenings

Samples are recorded before each step: time, state, the control applied at
that state, the minimum clearance, the attractive potential value, and one
constraint margin per obstacle.  A run ends by reaching the goal ball, by
exhausting the horizon, or with ``domain_error`` the moment the state (or an
RK4 stage state) touches an obstacle, where the repulsive terms stop being
defined; samples up to the last valid state are kept.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .clf import SigmaSelector
from .errors import ScenarioValidationError  # noqa: F401  (re-raised through validate)
from .fields import _NO_TABLE
from .rcbf import GammaSelector
from .scenario import Scenario, classify_safety, validate_scenario

logger = logging.getLogger(__name__)

CONTROLLER_KINDS = ("apf", "nominal_only", "special_filter", "generalized")
INTEGRATORS = {"euler": 0, "rk4": 1}
TERMINAL_NAMES = {_k.REACHED_GOAL: "reached_goal",
                  _k.TIMEOUT: "timeout",
                  _k.DOMAIN_ERROR: "domain_error"}

CSV_BASE_COLUMNS = ("t", "x", "y", "ux", "uy", "h_min", "V")


@dataclass(frozen=True)
class ControllerSpec:
    """Which controller to run, with its tightening selectors where required."""

    kind: str
    sigma_sel: SigmaSelector | None = None
    gamma_sel: GammaSelector | None = None

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind: {self.kind!r}")
        if self.kind in ("nominal_only", "generalized") and self.sigma_sel is None:
            raise ValueError(f"{self.kind} controller requires sigma_sel")
        if self.kind == "generalized" and self.gamma_sel is None:
            raise ValueError("generalized controller requires gamma_sel")
        if self.kind in ("apf", "special_filter"):
            if self.sigma_sel is not None or self.gamma_sel is not None:
                raise ValueError(f"{self.kind} controller takes no selectors")

    def packing(self):
        """Kernel packing tuple for this controller."""
        if self.kind in ("apf", "special_filter"):
            return (2, 0, 1.0, _NO_TABLE, _NO_TABLE, 1, 1.0, _NO_TABLE, _NO_TABLE)
        skind, scoef, stx, sty = self.sigma_sel.packed()
        if self.kind == "nominal_only":
            return (1, skind, scoef, stx, sty, 0, 0.0, _NO_TABLE, _NO_TABLE)
        gkind, glam, gtx, gty = self.gamma_sel.packed()
        return (2, skind, scoef, stx, sty, gkind, glam, gtx, gty)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.01
    t_max: float = 40.0
    goal_tolerance: float = 0.05
    integrator: str = "rk4"

    def __post_init__(self):
        if not 0.0 < self.dt <= 0.05:
            raise ValueError(f"dt must lie in (0, 0.05], got {self.dt}")
        if not self.t_max > 0.0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if not self.goal_tolerance > 0.0:
            raise ValueError(f"goal_tolerance must be positive, got {self.goal_tolerance}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {sorted(INTEGRATORS)}, "
                             f"got {self.integrator!r}")


@dataclass(frozen=True)
class Trajectory:
    """Column-wise sample record of one run plus its terminal status."""

    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    h_min: np.ndarray
    V: np.ndarray
    phi: np.ndarray
    terminal: str

    def __post_init__(self):
        if self.terminal not in TERMINAL_NAMES.values():
            raise ValueError(f"unknown terminal status: {self.terminal!r}")

    @property
    def n_samples(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class TrajectoryMetrics:
    path_length: float
    min_clearance: float
    time_to_goal: float | None
    oscillation: float


def _freeze(arr):
    arr.setflags(write=False)
    return arr


def simulate(scenario: Scenario, ctrl: ControllerSpec, cfg: SimConfig, x0) -> Trajectory:
    """Roll out the closed loop from ``x0`` until goal, timeout, or crash."""
    validate_scenario(scenario)
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (2,) or not np.all(np.isfinite(x0)):
        raise ValueError(f"x0 must be a finite 2-vector, got {x0!r}")
    h0 = classify_safety(x0, scenario).h
    if h0 <= 0.0:
        raise ValueError(
            f"x0 must lie strictly outside every obstacle (clearance {h0:.6g})")
    if scenario.obstacles:
        r_min = min(obs.radius for obs in scenario.obstacles)
        if not cfg.goal_tolerance < r_min:
            raise ValueError(
                f"goal_tolerance ({cfg.goal_tolerance}) must be smaller than the "
                f"smallest obstacle radius ({r_min})")

    m = len(scenario.obstacles)
    n_max = int(round(cfg.t_max / cfg.dt))
    ts = np.empty(n_max + 1)
    xs = np.empty(n_max + 1)
    ys = np.empty(n_max + 1)
    uxs = np.empty(n_max + 1)
    uys = np.empty(n_max + 1)
    hs = np.empty(n_max + 1)
    vs = np.empty(n_max + 1)
    phis = np.empty((n_max + 1, m))

    centers, radii, rho0s = scenario.packed()
    ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty = ctrl.packing()
    n, status, ming, negcount = _k._integrate(
        float(x0[0]), float(x0[1]),
        float(scenario.goal[0]), float(scenario.goal[1]),
        centers, radii, rho0s,
        scenario.k_att, scenario.k_rep, scenario.alpha_gain,
        ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty,
        cfg.dt, n_max, cfg.goal_tolerance, INTEGRATORS[cfg.integrator],
        ts, xs, ys, uxs, uys, hs, vs, phis)
    if negcount and ctrl.kind in ("special_filter", "generalized"):
        # The pure potential-field packing shares the kernel but advertises no
        # tightening, so the certificate diagnostic would only confuse there.
        logger.warning(
            "tightening term evaluated negative at %d control evaluations "
            "(min %.3e) during the %s run; the filter corrections are unaffected",
            negcount, ming, ctrl.kind)

    return Trajectory(
        t=_freeze(ts[:n].copy()),
        x=_freeze(np.column_stack([xs[:n], ys[:n]])),
        u=_freeze(np.column_stack([uxs[:n], uys[:n]])),
        h_min=_freeze(hs[:n].copy()),
        V=_freeze(vs[:n].copy()),
        phi=_freeze(phis[:n].copy()),
        terminal=TERMINAL_NAMES[status],
    )


def metrics(tr: Trajectory) -> TrajectoryMetrics:
    """Path length, worst clearance, arrival time, and total heading change.

    Oscillation sums absolute heading changes between consecutive displacement
    segments longer than 1e-12 (so a stationary tail contributes nothing);
    each change is wrapped to (-pi, pi].
    """
    dx = np.diff(tr.x, axis=0)
    seg_len = np.sqrt(dx[:, 0] ** 2 + dx[:, 1] ** 2)
    path_length = float(np.sum(seg_len))
    min_clearance = float(np.min(tr.h_min)) if tr.n_samples else math.inf
    time_to_goal = float(tr.t[-1]) if (tr.terminal == "reached_goal" and tr.n_samples) else None

    moving = seg_len > 1e-12
    headings = np.arctan2(dx[moving, 1], dx[moving, 0])
    if headings.size >= 2:
        dtheta = np.diff(headings)
        dtheta = np.mod(dtheta + np.pi, 2.0 * np.pi) - np.pi
        oscillation = float(np.sum(np.abs(dtheta)))
    else:
        oscillation = 0.0
    return TrajectoryMetrics(path_length=path_length, min_clearance=min_clearance,
                             time_to_goal=time_to_goal, oscillation=oscillation)


def csv_header(n_obstacles: int) -> str:
    return ",".join(CSV_BASE_COLUMNS + tuple(f"phi_{i + 1}" for i in range(n_obstacles)))


def write_trajectory_csv(tr: Trajectory, path) -> None:
    """Plain CSV, one row per sample, '.' decimal separator, %.17g floats."""
    m = tr.phi.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_header(m) + "\n")
        for k in range(tr.n_samples):
            row = [tr.t[k], tr.x[k, 0], tr.x[k, 1], tr.u[k, 0], tr.u[k, 1],
                   tr.h_min[k], tr.V[k]]
            row.extend(tr.phi[k])
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_trajectory_csv(path, terminal: str) -> Trajectory:
    """Load a trajectory CSV written by :func:`write_trajectory_csv`.

    The CSV stores samples only, so the terminal status must be supplied.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        cols = header.split(",")
        if tuple(cols[:7]) != CSV_BASE_COLUMNS:
            raise ValueError(f"unexpected trajectory CSV header: {header!r}")
        m = len(cols) - 7
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = data.reshape(0, 7 + m)
    return Trajectory(
        t=_freeze(data[:, 0].copy()),
        x=_freeze(data[:, 1:3].copy()),
        u=_freeze(data[:, 3:5].copy()),
        h_min=_freeze(data[:, 5].copy()),
        V=_freeze(data[:, 6].copy()),
        phi=_freeze(data[:, 7:7 + m].copy()),
        terminal=terminal,
    )
