"""Stabilizing (Lyapunov) side: tightened decrease condition and min-norm control.

The attractive potential doubles as a Lyapunov function V for the single
integrator, giving drift term a = 0 and input term b = F_att.  Requiring

    a + sigma(x) + b(x) . u <= 0

with a tightening sigma that is positive away from the goal turns the
non-strict QP constraint into a strict decrease condition.  The min-norm
control subject to it has the closed form

    u = -(sigma / |b|^2) b        (u = 0 at the goal),

which reduces to exactly -F_att for the sigma = |b|^2 selector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .fields import _NO_TABLE, _as_point, f_att, run_control_kernel
from .scenario import Scenario

_SIGMA_KINDS = {"grad_norm_squared": 0, "scaled_value": 1, "scaled_norm": 2, "custom": 3}


def _freeze_table(xs, ys, name):
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError(f"{name} table needs matching 1-d knot/value arrays (>= 2 points)")
    if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
        raise ValueError(f"{name} table must be finite")
    if not np.all(np.diff(xs) > 0):
        raise ValueError(f"{name} table knots must be strictly increasing")
    xs.setflags(write=False)
    ys.setflags(write=False)
    return xs, ys


@dataclass(frozen=True)
class SigmaSelector:
    """Choice of tightening term sigma(x) for the decrease condition.

    Kinds: ``grad_norm_squared`` (sigma = |b|^2), ``scaled_value``
    (sigma = coefficient * V), ``scaled_norm`` (sigma = coefficient *
    |x - goal|), and ``custom`` (linear interpolation over distance to goal;
    clamped at the table ends).
    """

    kind: str
    coefficient: float | None = None
    table: tuple | None = None

    def __post_init__(self):
        if self.kind not in _SIGMA_KINDS:
            raise ValueError(f"unknown sigma selector kind: {self.kind!r}")
        if self.kind in ("scaled_value", "scaled_norm"):
            if self.coefficient is None or not float(self.coefficient) > 0.0:
                raise ValueError(f"{self.kind} selector requires a positive coefficient")
            object.__setattr__(self, "coefficient", float(self.coefficient))
        if self.kind == "custom":
            if self.table is None:
                raise ValueError("custom sigma selector requires a table")
            xs, ys = _freeze_table(self.table[0], self.table[1], "sigma")
            # positive definiteness in distance-to-goal: zero exactly at 0,
            # positive at every other knot (interpolation preserves this)
            if xs[0] != 0.0 or ys[0] != 0.0:
                raise ValueError("sigma table must start at (0, 0)")
            if not np.all(ys[1:] > 0.0):
                raise ValueError("sigma table values must be positive away from the goal")
            object.__setattr__(self, "table", (xs, ys))

    @classmethod
    def grad_norm_squared(cls):
        return cls("grad_norm_squared")

    @classmethod
    def scaled_value(cls, coefficient: float):
        return cls("scaled_value", coefficient=coefficient)

    @classmethod
    def scaled_norm(cls, coefficient: float):
        return cls("scaled_norm", coefficient=coefficient)

    @classmethod
    def custom(cls, distances, values):
        return cls("custom", table=(distances, values))

    def packed(self):
        skind = _SIGMA_KINDS[self.kind]
        scoef = self.coefficient if self.coefficient is not None else 1.0
        if self.kind == "custom":
            stx, sty = self.table
        else:
            stx = sty = _NO_TABLE
        return skind, scoef, stx, sty


@dataclass(frozen=True)
class ClfTerms:
    a: float
    b: np.ndarray
    sigma: float
    a_tilde: float


def sigma_value(x, scenario: Scenario, sel: SigmaSelector) -> float:
    px, py = _as_point(x)
    skind, scoef, stx, sty = sel.packed()
    return float(_k._sigma_value(px, py, float(scenario.goal[0]), float(scenario.goal[1]),
                                 scenario.k_att, skind, scoef, stx, sty))


def clf_terms(x, scenario: Scenario, sel: SigmaSelector) -> ClfTerms:
    """Decrease-condition terms at ``x``: a = 0, b = F_att, tightened a + sigma."""
    b = f_att(x, scenario)
    sigma = sigma_value(x, scenario, sel)
    a = 0.0
    return ClfTerms(a=a, b=b, sigma=sigma, a_tilde=a + sigma)


def _nominal_packing(sel: SigmaSelector):
    skind, scoef, stx, sty = sel.packed()
    return (1, skind, scoef, stx, sty, 0, 0.0, _NO_TABLE, _NO_TABLE)


def nominal_control(x, scenario: Scenario, sel: SigmaSelector) -> np.ndarray:
    """Min-norm control meeting the tightened decrease condition.

    Solves  min |u|^2  s.t.  sigma + b.u <= 0  in closed form:
    u = -(sigma/|b|^2) b, and u = 0 at the goal where both sides vanish.
    """
    u, _, _ = run_control_kernel(x, scenario, _nominal_packing(sel),
                                 require_clearance=False)
    return u


def check_clf_decrease(x, u, scenario: Scenario, sel: SigmaSelector) -> float:
    """Tightened decrease margin  a + sigma + b.u  (nonpositive = satisfied)."""
    terms = clf_terms(x, scenario, sel)
    u = np.asarray(u, dtype=np.float64)
    return terms.a_tilde + float(terms.b[0]) * float(u[0]) + float(terms.b[1]) * float(u[1])
