"""Numerical property suites: equivalence grid, gradient checks, oracle sweep.

Each suite returns a :class:`SuiteResult` whose ``lines`` are fully
deterministic for a given seed (timings are kept out of them on purpose, so
reports are byte-reproducible).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .clf import SigmaSelector
from .qp import HalfSpaceConstraint, solve_projection
from .rcbf import GammaSelector, RcbfTerms, safety_filter
from .scenario import Scenario, rho
from .simulate import ControllerSpec
from .fields import f_att, f_rep, u_att, u_rep

DEFAULT_BOUNDS = ((-3.0, 9.0), (-2.0, 6.0))
EXCLUSION_BAND = 1e-3


@dataclass(frozen=True)
class SuiteResult:
    name: str
    lines: tuple
    max_error: float
    tolerance: float
    passed: bool
    elapsed: float


def _eval_packed(scenario: Scenario, packing, xs, ys):
    centers, radii, rho0s = scenario.packed()
    ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty = packing
    out_ux = np.empty(xs.shape[0])
    out_uy = np.empty(xs.shape[0])
    out_h = np.empty(xs.shape[0])
    _k._eval_controls(xs, ys, float(scenario.goal[0]), float(scenario.goal[1]),
                      centers, radii, rho0s,
                      scenario.k_att, scenario.k_rep, scenario.alpha_gain,
                      ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty,
                      out_ux, out_uy, out_h)
    return out_ux, out_uy


def grid_states(scenario: Scenario, nx=200, ny=200, bounds=DEFAULT_BOUNDS,
                band=EXCLUSION_BAND):
    """Workspace grid minus the states where the compared controllers differ
    by construction or are undefined.

    Excluded: obstacle interiors, a ``band`` around each obstacle surface and
    each influence boundary (the repulsive branch switches there), and a
    ``band`` ball around the goal (the stabilizer's removable singularity).
    """
    gx = np.linspace(bounds[0][0], bounds[0][1], nx)
    gy = np.linspace(bounds[1][0], bounds[1][1], ny)
    xx, yy = np.meshgrid(gx, gy)
    xs = xx.ravel()
    ys = yy.ravel()
    keep = np.ones(xs.shape[0], dtype=bool)
    for obs in scenario.obstacles:
        rho = np.sqrt((xs - obs.center[0]) ** 2 + (ys - obs.center[1]) ** 2) - obs.radius
        keep &= rho > band
        keep &= np.abs(rho - obs.influence_margin) > band
    dg = np.sqrt((xs - scenario.goal[0]) ** 2 + (ys - scenario.goal[1]) ** 2)
    keep &= dg > band
    return np.ascontiguousarray(xs[keep]), np.ascontiguousarray(ys[keep])


def equivalence_suite(scenario: Scenario, nx=200, ny=200, bounds=DEFAULT_BOUNDS,
                      tol=1e-9) -> SuiteResult:
    """Max pointwise gap between the potential-field controller, the fixed
    equivalence filter, and the generalized controller with the unit
    scaled-special tightening, over the masked workspace grid."""
    t0 = time.perf_counter()
    xs, ys = grid_states(scenario, nx=nx, ny=ny, bounds=bounds)
    apf = ControllerSpec("apf").packing()
    special = ControllerSpec("special_filter").packing()
    gen = ControllerSpec(
        "generalized",
        sigma_sel=SigmaSelector.grad_norm_squared(),
        gamma_sel=GammaSelector.scaled_special(1.0),
    ).packing()
    aux, auy = _eval_packed(scenario, apf, xs, ys)
    sux, suy = _eval_packed(scenario, special, xs, ys)
    gux, guy = _eval_packed(scenario, gen, xs, ys)
    err_special = float(np.max(np.hypot(aux - sux, auy - suy), initial=0.0))
    err_gen = float(np.max(np.hypot(aux - gux, auy - guy), initial=0.0))
    elapsed = time.perf_counter() - t0
    max_error = max(err_special, err_gen)
    passed = max_error <= tol
    lines = (
        f"[equivalence] grid {nx}x{ny} on "
        f"[{bounds[0][0]:g},{bounds[0][1]:g}]x[{bounds[1][0]:g},{bounds[1][1]:g}], "
        f"{xs.shape[0]} states kept",
        f"[equivalence] max |u_apf - u_special|     = {err_special:.6e} (tol {tol:.1e})",
        f"[equivalence] max |u_apf - u_generalized| = {err_gen:.6e} (tol {tol:.1e})",
        f"[equivalence] {'PASS' if passed else 'FAIL'}",
    )
    return SuiteResult("equivalence", lines, max_error, tol, passed, elapsed)


def _central_fd(func, x, scales):
    """Central difference with explicit per-coordinate steps ``scales``.

    The step must track the length scale the function actually varies on: the
    attractive potential varies on the coordinate scale, but the repulsive
    potential varies on the clearance scale, and stepping it by coordinate
    magnitude at small clearance makes the truncation term (~2 delta^2/rho^2)
    swamp the comparison.
    """
    fd = np.empty(2)
    for j in range(2):
        delta = scales[j]
        hi = x.copy()
        lo = x.copy()
        hi[j] += delta
        lo[j] -= delta
        fd[j] = (func(hi) - func(lo)) / (2.0 * delta)
    return fd


def gradient_states(scenario: Scenario, n, rng, bounds=DEFAULT_BOUNDS,
                    margin=EXCLUSION_BAND):
    """Random states with every clearance at least ``margin`` away from both
    0 and the influence margin; half are drawn inside the influence shells
    where the repulsive field is live."""
    states = np.empty((n, 2))
    obstacles = scenario.obstacles
    count = 0
    while count < n:
        if obstacles and count % 2 == 0:
            obs = obstacles[(count // 2) % len(obstacles)]
            theta = rng.uniform(0.0, 2.0 * np.pi)
            r = obs.radius + rng.uniform(margin, obs.influence_margin - margin)
            cand = np.array([obs.center[0] + r * np.cos(theta),
                             obs.center[1] + r * np.sin(theta)])
        else:
            cand = np.array([rng.uniform(*bounds[0]), rng.uniform(*bounds[1])])
        ok = True
        for obs in obstacles:
            rho = np.hypot(cand[0] - obs.center[0], cand[1] - obs.center[1]) - obs.radius
            if rho < margin or abs(rho - obs.influence_margin) < margin:
                ok = False
                break
        if ok:
            states[count] = cand
            count += 1
    return states


def gradient_suite(scenario: Scenario, n=10000, seed=0, tol=1e-5,
                   step_scale=1e-6) -> SuiteResult:
    """Central finite differences of the potentials against their analytic
    gradients; error is measured relative to max(1, |gradient|)."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    states = gradient_states(scenario, n, rng)
    max_att = 0.0
    max_rep = 0.0
    for x in states:
        coord_scales = (step_scale * (1.0 + abs(float(x[0]))),
                        step_scale * (1.0 + abs(float(x[1]))))
        fd = _central_fd(lambda p: u_att(p, scenario), x, coord_scales)
        grad = f_att(x, scenario)
        err = float(np.linalg.norm(fd - grad)) / max(1.0, float(np.linalg.norm(grad)))
        if err > max_att:
            max_att = err
        for obs in scenario.obstacles:
            clearance = rho(x, obs)
            rep_scales = (step_scale * clearance, step_scale * clearance)
            fd = _central_fd(lambda p: u_rep(p, obs, scenario), x, rep_scales)
            grad = f_rep(x, obs, scenario)
            err = float(np.linalg.norm(fd - grad)) / max(1.0, float(np.linalg.norm(grad)))
            if err > max_rep:
                max_rep = err
    elapsed = time.perf_counter() - t0
    max_error = max(max_att, max_rep)
    passed = max_error <= tol
    lines = (
        f"[gradients] {n} states, seed {seed}, central differences "
        f"(step {step_scale:.0e} scaled)",
        f"[gradients] max rel error attractive = {max_att:.6e} (tol {tol:.1e})",
        f"[gradients] max rel error repulsive  = {max_rep:.6e} (tol {tol:.1e})",
        f"[gradients] {'PASS' if passed else 'FAIL'}",
    )
    return SuiteResult("gradients", lines, max_error, tol, passed, elapsed)


def oracle_suite(n=100000, seed=0, tol=1e-9) -> SuiteResult:
    """Closed-form filter against the enumeration QP on random
    single-constraint projections."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    u_noms = rng.normal(0.0, 2.0, size=(n, 2))
    offsets = rng.uniform(-2.0, 2.0, size=n)
    normals = rng.normal(0.0, 1.0, size=(n, 2))
    max_error = 0.0
    for i in range(n):
        offset = float(offsets[i])
        terms = RcbfTerms(B=0.0, h=0.0, c=offset, d=normals[i], gamma=0.0,
                          c_tilde=offset)
        u_closed, _ = safety_filter(u_noms[i], terms)
        sol = solve_projection(u_noms[i], [HalfSpaceConstraint(offset, normals[i])])
        err = float(np.max(np.abs(u_closed - sol.u_star)))
        if err > max_error:
            max_error = err
    elapsed = time.perf_counter() - t0
    passed = max_error <= tol
    lines = (
        f"[oracle] {n} random single-constraint projections, seed {seed}",
        f"[oracle] max |u_closed_form - u_qp| = {max_error:.6e} (tol {tol:.1e})",
        f"[oracle] {'PASS' if passed else 'FAIL'}",
    )
    return SuiteResult("oracle", lines, max_error, tol, passed, elapsed)


SUITE_NAMES = ("equivalence", "gradients", "oracle")


def run_suites(scenario: Scenario, names, seed=0):
    results = []
    for name in names:
        if name == "equivalence":
            results.append(equivalence_suite(scenario))
        elif name == "gradients":
            results.append(gradient_suite(scenario, seed=seed))
        elif name == "oracle":
            results.append(oracle_suite(seed=seed))
        else:
            raise ValueError(f"unknown suite: {name!r}")
    return results
