"""Small exact QP solver used as an independent oracle for the closed forms.

Solves  min 1/2 |u - u_nom|^2  subject to  offset_i + normal_i . u <= 0  by
enumerating every candidate active set (there are at most 2^8), solving the
equality-constrained projection for each in closed form, and returning the
first KKT-consistent feasible candidate.  For a convex QP any KKT point is
the unique minimizer, so enumeration order — by active-set size, then
lexicographic — only breaks ties among equivalent representations and makes
the reported active set deterministic.

Deliberately no iterative solver and no external dependency: the whole point
is an oracle whose correctness is an enumeration argument, not a convergence
argument.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

FEASIBILITY_TOL = 1e-10
MULTIPLIER_TOL = 1e-12
CONDITION_LIMIT = 1e12
MAX_CONSTRAINTS = 8


@dataclass(frozen=True)
class HalfSpaceConstraint:
    """Half space  offset + normal . u <= 0."""

    offset: float
    normal: np.ndarray

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=np.float64)
        if normal.shape != (2,):
            raise ValueError(f"normal must be a 2-vector, got shape {normal.shape}")
        if not np.all(np.isfinite(normal)):
            raise ValueError("normal must be finite")
        normal.setflags(write=False)
        object.__setattr__(self, "normal", normal)
        object.__setattr__(self, "offset", float(self.offset))


@dataclass(frozen=True)
class QpSolution:
    u_star: np.ndarray
    active_set: tuple
    kkt_residual: float
    feasible: bool


def solve_projection(u_nom, constraints) -> QpSolution:
    """Exact minimizer of 1/2 |u - u_nom|^2 over the half-space intersection.

    ``feasible=False`` (with NaN ``u_star``) when the intersection is empty.
    """
    u_nom = np.asarray(u_nom, dtype=np.float64)
    m = len(constraints)
    if m > MAX_CONSTRAINTS:
        raise ValueError(f"at most {MAX_CONSTRAINTS} constraints supported, got {m}")
    offsets = np.array([c.offset for c in constraints], dtype=np.float64)
    normals = np.array([c.normal for c in constraints], dtype=np.float64).reshape(m, 2)

    for size in range(m + 1):
        for subset in combinations(range(m), size):
            if size == 0:
                u = u_nom.copy()
                lam = np.zeros(0)
                stationarity = 0.0
                complementarity = 0.0
            else:
                idx = list(subset)
                N = normals[idx]
                A = N @ N.T
                with np.errstate(all="ignore"):
                    cond = np.linalg.cond(A)
                if not np.isfinite(cond) or cond > CONDITION_LIMIT:
                    continue
                try:
                    lam = np.linalg.solve(A, offsets[idx] + N @ u_nom)
                except np.linalg.LinAlgError:
                    continue
                if np.any(lam < -MULTIPLIER_TOL):
                    continue
                u = u_nom - N.T @ lam
                stationarity = float(np.linalg.norm((u - u_nom) + N.T @ lam))
                complementarity = float(np.max(np.abs(lam * (offsets[idx] + N @ u))))
            residuals = offsets + normals @ u if m else np.zeros(0)
            primal = float(np.max(residuals, initial=0.0))
            if primal > FEASIBILITY_TOL:
                continue
            dual = float(np.max(-lam, initial=0.0))
            kkt = max(stationarity, complementarity, primal, dual, 0.0)
            u.setflags(write=False)
            return QpSolution(u_star=u, active_set=subset, kkt_residual=kkt, feasible=True)

    u = np.full(2, np.nan)
    u.setflags(write=False)
    return QpSolution(u_star=u, active_set=(), kkt_residual=np.inf, feasible=False)


def sample_feasibility_check(u, constraints) -> bool:
    """True iff every constraint is satisfied at ``u`` within tolerance."""
    u = np.asarray(u, dtype=np.float64)
    for c in constraints:
        if c.offset + float(c.normal[0]) * float(u[0]) + float(c.normal[1]) * float(u[1]) \
                > FEASIBILITY_TOL:
            return False
    return True
