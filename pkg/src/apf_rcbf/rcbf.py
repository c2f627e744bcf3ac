"""Barrier side: reciprocal-barrier conditions and the closed-form safety filter.

On the influence shell of an obstacle the repulsive potential B = U_rep blows
up toward the surface, which makes it a reciprocal barrier for the clearance
h = rho.  For the single integrator the barrier condition

    c(x) + d(x) . u <= 0,     c = -alpha_gain * h,   d = F_rep,

keeps the shell forward-invariant, and tightening c to c~ = c + Gamma with a
nonnegative Gamma preserves that guarantee.  The minimally-invasive filter

    u = u_nom                         when phi = c~ + d.u_nom <= 0
    u = u_nom - (phi/|d|^2) d         when phi > 0

is the closed-form solution of projecting u_nom onto the constraint.  The
``scaled_special`` tightening Gamma = lam |d|^2 + alpha_gain h - d.u_nom makes
phi collapse to exactly lam |d|^2, so the filtered controller superposes
corrections of exactly -lam F_rep per active obstacle; at lam = 1 with the
squared-gradient-norm stabilizer this reproduces the potential-field
controller identically.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .clf import SigmaSelector, sigma_value
from .errors import InfeasibleConstraintError, InsideObstacleError, NegativeGammaError
from .fields import _NO_TABLE, INSIDE_OBSTACLE_MSG, f_att, f_rep, run_control_kernel, u_rep
from .scenario import Obstacle, Scenario, rho

logger = logging.getLogger(__name__)

NEGATIVE_GAMMA_MSG = "Gamma selector produced negative value"
INFEASIBLE_MSG = "constraint infeasible at state"

_GAMMA_KINDS = {"zero": 0, "scaled_special": 1, "custom": 2}

# selector keys already warned about; cleared by tests
_warned_negative_gamma = set()


def _warn_negative_gamma(key, min_gamma, where):
    """Log (once per selector per process) that a tightening went negative.

    A negative evaluated Gamma means the tightened-condition certificate does
    not hold at that state; the filter itself stays feasible and its output
    is unaffected, so controllers keep running rather than aborting a
    simulation mid-flight.  Term-level evaluation via :func:`rcbf_terms`
    treats the same condition as a hard error.
    """
    if key in _warned_negative_gamma:
        return
    _warned_negative_gamma.add(key)
    logger.warning(
        "Gamma selector %s evaluated negative (min %.3e) %s; "
        "filter output is unaffected but the tightening certificate fails there",
        key, min_gamma, where)


@dataclass(frozen=True)
class GammaSelector:
    """Choice of tightening term Gamma(x) for the barrier condition.

    Kinds: ``zero``, ``scaled_special`` (Gamma = lam |d|^2 + alpha_gain h -
    d.u_nom with lam > 0), and ``custom`` (interpolation over clearance h,
    nonnegative values, clamped at the table ends).
    """

    kind: str
    lam: float | None = None
    table: tuple | None = None

    def __post_init__(self):
        if self.kind not in _GAMMA_KINDS:
            raise ValueError(f"unknown gamma selector kind: {self.kind!r}")
        if self.kind == "scaled_special":
            if self.lam is None or not float(self.lam) > 0.0:
                raise ValueError("scaled_special selector requires a positive lambda")
            object.__setattr__(self, "lam", float(self.lam))
        if self.kind == "custom":
            if self.table is None:
                raise ValueError("custom gamma selector requires a table")
            from .clf import _freeze_table

            xs, ys = _freeze_table(self.table[0], self.table[1], "gamma")
            if xs[0] < 0.0:
                raise ValueError("gamma table knots are clearances and must be >= 0")
            if not np.all(ys >= 0.0):
                raise ValueError("gamma table values must be nonnegative")
            object.__setattr__(self, "table", (xs, ys))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def scaled_special(cls, lam: float):
        return cls("scaled_special", lam=lam)

    @classmethod
    def custom(cls, clearances, values):
        return cls("custom", table=(clearances, values))

    def packed(self):
        gkind = _GAMMA_KINDS[self.kind]
        glam = self.lam if self.lam is not None else 0.0
        if self.kind == "custom":
            gtx, gty = self.table
        else:
            gtx = gty = _NO_TABLE
        return gkind, glam, gtx, gty

    def _key(self):
        if self.kind == "scaled_special":
            return ("scaled_special", self.lam)
        return (self.kind,)


@dataclass(frozen=True)
class RcbfTerms:
    """Barrier condition pieces at one state for one obstacle."""

    B: float
    h: float
    c: float
    d: np.ndarray
    gamma: float
    c_tilde: float


@dataclass(frozen=True)
class FilterDiagnostics:
    """What the filter saw and did: margin, activity, and applied gains.

    ``g_att``/``g_rep`` are the attractive/repulsive gains of the combined
    controller form; they are NaN in contexts where the corresponding
    decomposition does not apply (e.g. ``g_att`` for a bare filter call).
    """

    phi: float
    active: bool
    correction: np.ndarray
    g_att: float
    g_rep: float


def rcbf_terms(x, obs: Obstacle, scenario: Scenario, u_nom, sel: GammaSelector) -> RcbfTerms:
    """Evaluate the (tightened) barrier condition pieces term by term.

    Unlike the fused controllers, this evaluates Gamma from its definition,
    and enforces Gamma >= 0 as a hard error.
    """
    h = rho(x, obs)
    if h <= 0.0:
        raise InsideObstacleError(INSIDE_OBSTACLE_MSG)
    u_nom = np.asarray(u_nom, dtype=np.float64)
    B = u_rep(x, obs, scenario)
    c = -scenario.alpha_gain * h
    d = f_rep(x, obs, scenario)
    if sel.kind == "zero":
        gamma = 0.0
    elif sel.kind == "scaled_special":
        dd = float(d[0]) * float(d[0]) + float(d[1]) * float(d[1])
        du = float(d[0]) * float(u_nom[0]) + float(d[1]) * float(u_nom[1])
        gamma = sel.lam * dd + scenario.alpha_gain * h - du
    else:
        gtx, gty = sel.table
        gamma = float(np.interp(h, gtx, gty))
    if gamma < 0.0:
        raise NegativeGammaError(NEGATIVE_GAMMA_MSG)
    return RcbfTerms(B=B, h=h, c=c, d=d, gamma=gamma, c_tilde=c + gamma)


def safety_filter(u_nom, terms: RcbfTerms):
    """Project ``u_nom`` onto the tightened barrier constraint (closed form).

    Returns ``(u, FilterDiagnostics)``; raises when the constraint admits no
    control at all (zero row with positive offset).
    """
    u_nom = np.asarray(u_nom, dtype=np.float64)
    d = terms.d
    dd = float(d[0]) * float(d[0]) + float(d[1]) * float(d[1])
    phi = terms.c_tilde + float(d[0]) * float(u_nom[0]) + float(d[1]) * float(u_nom[1])
    if dd == 0.0 and terms.c_tilde > 0.0:
        raise InfeasibleConstraintError(INFEASIBLE_MSG)
    if phi > 0.0:
        g_rep = -(phi / dd)
        correction = g_rep * d
        u = u_nom + correction
        return u, FilterDiagnostics(phi=phi, active=True, correction=correction,
                                    g_att=math.nan, g_rep=g_rep)
    correction = np.zeros(2)
    g_rep = -(phi / dd) if dd > 0.0 else math.nan
    return u_nom.copy(), FilterDiagnostics(phi=phi, active=False, correction=correction,
                                           g_att=math.nan, g_rep=g_rep)


# packing for the fixed equivalence filter: squared-gradient-norm stabilizer
# with unit-scale scaled-special tightening (identical to the packing the
# combined potential-field controller uses)
_SPECIAL_PACKING = (2, 0, 1.0, _NO_TABLE, _NO_TABLE, 1, 1.0, _NO_TABLE, _NO_TABLE)


def special_filter_control(x, scenario: Scenario) -> np.ndarray:
    """Safety-filtered stabilizer with the unit scaled-special tightening.

    Equals the combined potential-field controller at every state outside the
    obstacles: -F_att where no obstacle is active, -F_att - sum F_rep_i
    otherwise.
    """
    u, _, ming = run_control_kernel(x, scenario, _SPECIAL_PACKING)
    if ming < 0.0:
        _warn_negative_gamma(("scaled_special", 1.0), ming, "in special_filter_control")
    return u


def generalized_control(x, scenario: Scenario, sigma_sel: SigmaSelector,
                        gamma_sel: GammaSelector):
    """Filtered stabilizer with selectable tightenings on both sides.

    The stabilizer is u_nom = g_att F_att with g_att = -sigma/|F_att|^2, and
    each obstacle whose constraint margin phi is positive contributes the
    correction g_rep F_rep with g_rep = -phi/|F_rep|^2, superposed onto
    u_nom.  Returns ``(u, per-obstacle FilterDiagnostics tuple)``.
    """
    skind, scoef, stx, sty = sigma_sel.packed()
    gkind, glam, gtx, gty = gamma_sel.packed()
    packing = (2, skind, scoef, stx, sty, gkind, glam, gtx, gty)
    phis = np.empty(len(scenario.obstacles), dtype=np.float64)
    u, _, ming = run_control_kernel(x, scenario, packing, phis=phis)
    if ming < 0.0:
        _warn_negative_gamma(gamma_sel._key(), ming, "in generalized_control")

    b = f_att(x, scenario)
    bb = float(b[0]) * float(b[0]) + float(b[1]) * float(b[1])
    sigma = sigma_value(x, scenario, sigma_sel)
    g_att = -(sigma / bb) if bb > 0.0 else 0.0
    diagnostics = []
    for i, obs in enumerate(scenario.obstacles):
        d = f_rep(x, obs, scenario)
        dd = float(d[0]) * float(d[0]) + float(d[1]) * float(d[1])
        phi = float(phis[i])
        active = phi > 0.0
        if active and dd > 0.0:
            g_rep = -(phi / dd)
            correction = g_rep * d
        else:
            g_rep = -(phi / dd) if dd > 0.0 else math.nan
            correction = np.zeros(2)
        diagnostics.append(FilterDiagnostics(phi=phi, active=active,
                                             correction=correction,
                                             g_att=g_att, g_rep=g_rep))
    return u, tuple(diagnostics)
