"""Numeric kernels shared by the field/controller API and the simulator.

Everything in this module operates on packed scalars and arrays (no
dataclasses) so that the same code compiles under numba and runs unchanged as
plain Python when the numpy backend is selected (``APF_RCBF_NUMBA=0``).

Packing conventions used throughout:

* obstacles: ``centers`` (m, 2), ``radii`` (m,), ``rho0s`` (m,)
* controller kind: 1 = nominal only (no filtering), 2 = filtered
  (the pure potential-field controller and the equivalence filter are packed
  as kind 2 with ``skind=0, gkind=1, glam=1`` at the Python level)
* sigma selector ``skind``: 0 = squared gradient norm, 1 = scaled potential
  value, 2 = scaled distance, 3 = interpolation table over distance-to-goal
* gamma selector ``gkind``: 0 = zero, 1 = scaled-special, 2 = interpolation
  table over clearance
* integrator ``integ``: 0 = explicit Euler, 1 = classic RK4
* terminal status: 0 = reached goal, 1 = timeout, 2 = domain error

Kernels never raise: domain violations are reported through return codes and
NaN diagnostics, and the Python wrappers convert them into typed exceptions.

A note on arithmetic: the filtered controller computes its correction for the
scaled-special tightening as ``phi = lam * D`` in closed form (the definition
``c_tilde + d.u_nom`` cancels symbolically to exactly that).  Evaluating the
cancelling form numerically loses ~9 digits where the repulsive gradient is
large, while the closed form keeps the filtered controller *bitwise* equal to
the superposition controller for ``lam = 1``.  Do not "simplify" this back to
the definition.
"""

from __future__ import annotations

import math

import numpy as np

from ._backend import jit_kernel

# terminal status codes used by _integrate
REACHED_GOAL = 0
TIMEOUT = 1
DOMAIN_ERROR = 2


@jit_kernel
def _rho(x, y, cx, cy, r):
    ox = x - cx
    oy = y - cy
    return math.sqrt(ox * ox + oy * oy) - r


@jit_kernel
def _min_clearance(x, y, centers, radii):
    hmin = np.inf
    for i in range(centers.shape[0]):
        h = _rho(x, y, centers[i, 0], centers[i, 1], radii[i])
        if h < hmin:
            hmin = h
    return hmin


@jit_kernel
def _att_value(x, y, gx, gy, k_att):
    dx = x - gx
    dy = y - gy
    return 0.5 * k_att * (dx * dx + dy * dy)


@jit_kernel
def _att_grad(x, y, gx, gy, k_att):
    return k_att * (x - gx), k_att * (y - gy)


@jit_kernel
def _rep_value(x, y, cx, cy, r, rho0, k_rep):
    ox = x - cx
    oy = y - cy
    rho = math.sqrt(ox * ox + oy * oy) - r
    if rho >= rho0:
        return 0.0
    q = 1.0 / rho - 1.0 / rho0
    return 0.5 * k_rep * q * q


@jit_kernel
def _rep_grad(x, y, cx, cy, r, rho0, k_rep):
    """Gradient of the repulsive potential (the repulsive force).

    For 0 < rho < rho0 this is  -(k_rep / rho^2) (1/rho - 1/rho0) (x - c)/|x - c|
    and zero outside the influence region.  The expression order here is
    mirrored verbatim by the Python-level field API so superposition tests can
    assert exact (not approximate) agreement.
    """
    ox = x - cx
    oy = y - cy
    dist = math.sqrt(ox * ox + oy * oy)
    rho = dist - r
    if rho >= rho0:
        return 0.0, 0.0
    coef = -(k_rep / (rho * rho)) * (1.0 / rho - 1.0 / rho0) / dist
    return coef * ox, coef * oy


@jit_kernel
def _alpha_bar(h, rho0, k_rep):
    q = rho0 * h / (rho0 - h)
    return (2.0 / k_rep) * q * q


@jit_kernel
def _sigma_value(x, y, gx, gy, k_att, skind, scoef, stx, sty):
    """Tightening term for the stabilizing controller, per selector."""
    dx = x - gx
    dy = y - gy
    if skind == 0:
        bx = k_att * dx
        by = k_att * dy
        return bx * bx + by * by
    if skind == 1:
        return scoef * (0.5 * k_att * (dx * dx + dy * dy))
    if skind == 2:
        return scoef * math.sqrt(dx * dx + dy * dy)
    return np.interp(math.sqrt(dx * dx + dy * dy), stx, sty)


@jit_kernel
def _control_point(x, y, gx, gy, centers, radii, rho0s,
                   k_att, k_rep, alpha_gain,
                   ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty,
                   phis):
    """Evaluate one controller at one state.

    Fills ``phis`` (one constraint margin per obstacle; NaN for obstacles the
    state is inside of) and returns ``(ux, uy, hmin, min_gamma)`` where
    ``min_gamma`` is the smallest tightening value evaluated at this state
    (+inf when no obstacle was active).  Callers must treat the control as
    undefined when ``hmin <= 0``.
    """
    bx = k_att * (x - gx)
    by = k_att * (y - gy)
    bb = bx * bx + by * by
    sig = _sigma_value(x, y, gx, gy, k_att, skind, scoef, stx, sty)
    if bb > 0.0:
        gatt = -(sig / bb)
    else:
        gatt = 0.0
    unx = gatt * bx
    uny = gatt * by

    ux = unx
    uy = uny
    hmin = np.inf
    ming = np.inf
    for i in range(centers.shape[0]):
        cx = centers[i, 0]
        cy = centers[i, 1]
        ox = x - cx
        oy = y - cy
        dist = math.sqrt(ox * ox + oy * oy)
        rho = dist - radii[i]
        if rho < hmin:
            hmin = rho
        if rho <= 0.0:
            phis[i] = np.nan
            continue
        rho0 = rho0s[i]
        if rho >= rho0:
            dx = 0.0
            dy = 0.0
            dd = 0.0
        else:
            coef = -(k_rep / (rho * rho)) * (1.0 / rho - 1.0 / rho0) / dist
            dx = coef * ox
            dy = coef * oy
            dd = dx * dx + dy * dy
        alphah = alpha_gain * rho
        if ckind == 1:
            # No filtering: record the margin the zero-tightening filter
            # would have seen, as a diagnostic only.
            phis[i] = -alphah + (dx * unx + dy * uny)
            continue
        if gkind == 1:
            gam = glam * dd + alphah - (dx * unx + dy * uny)
            phi = glam * dd
        elif gkind == 0:
            gam = 0.0
            phi = -alphah + (dx * unx + dy * uny)
        else:
            gam = np.interp(rho, gtx, gty)
            phi = (-alphah + gam) + (dx * unx + dy * uny)
        if gam < ming:
            ming = gam
        phis[i] = phi
        if phi > 0.0 and dd > 0.0:
            grep = -(phi / dd)
            ux += grep * dx
            uy += grep * dy
    return ux, uy, hmin, ming


@jit_kernel
def _eval_controls(xs, ys, gx, gy, centers, radii, rho0s,
                   k_att, k_rep, alpha_gain,
                   ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty,
                   out_ux, out_uy, out_h):
    """Evaluate one controller over a batch of states (the grid sweep)."""
    phis = np.empty(centers.shape[0], dtype=np.float64)
    ming = np.inf
    for i in range(xs.shape[0]):
        ux, uy, hmin, mg = _control_point(
            xs[i], ys[i], gx, gy, centers, radii, rho0s,
            k_att, k_rep, alpha_gain,
            ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty, phis)
        out_ux[i] = ux
        out_uy[i] = uy
        out_h[i] = hmin
        if mg < ming:
            ming = mg
    return ming


@jit_kernel
def _integrate(x0x, x0y, gx, gy, centers, radii, rho0s,
               k_att, k_rep, alpha_gain,
               ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty,
               dt, n_max, goal_tol, integ,
               ts, xs, ys, uxs, uys, hs, vs, phis_out):
    """Closed-loop rollout of the single integrator under one controller.

    Samples are recorded at the top of every step (state, control, clearance,
    potential value, per-obstacle constraint margins), then the goal test
    runs, then the state advances.  The rollout stops without recording when
    the current state — or, for RK4, any stage state — has nonpositive
    clearance, because the controller is undefined there.

    Returns ``(n_samples, status, min_gamma, n_negative_gamma_evals)``.
    """
    m = centers.shape[0]
    scratch = np.empty(m, dtype=np.float64)
    ming = np.inf
    negcount = 0
    xx = x0x
    yy = x0y
    n = 0
    status = TIMEOUT
    for k in range(n_max + 1):
        ux, uy, hmin, mg = _control_point(
            xx, yy, gx, gy, centers, radii, rho0s,
            k_att, k_rep, alpha_gain,
            ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty,
            phis_out[k])
        if mg < ming:
            ming = mg
        if mg < 0.0:
            negcount += 1
        if hmin <= 0.0:
            status = DOMAIN_ERROR
            break
        ts[k] = k * dt
        xs[k] = xx
        ys[k] = yy
        uxs[k] = ux
        uys[k] = uy
        hs[k] = hmin
        vs[k] = _att_value(xx, yy, gx, gy, k_att)
        n = k + 1
        ddx = xx - gx
        ddy = yy - gy
        if math.sqrt(ddx * ddx + ddy * ddy) < goal_tol:
            status = REACHED_GOAL
            break
        if k == n_max:
            status = TIMEOUT
            break
        if integ == 0:
            xx = xx + dt * ux
            yy = yy + dt * uy
        else:
            k1x = ux
            k1y = uy
            x2 = xx + 0.5 * dt * k1x
            y2 = yy + 0.5 * dt * k1y
            k2x, k2y, h2, mg2 = _control_point(
                x2, y2, gx, gy, centers, radii, rho0s,
                k_att, k_rep, alpha_gain,
                ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty, scratch)
            if mg2 < ming:
                ming = mg2
            if mg2 < 0.0:
                negcount += 1
            if h2 <= 0.0:
                status = DOMAIN_ERROR
                break
            x3 = xx + 0.5 * dt * k2x
            y3 = yy + 0.5 * dt * k2y
            k3x, k3y, h3, mg3 = _control_point(
                x3, y3, gx, gy, centers, radii, rho0s,
                k_att, k_rep, alpha_gain,
                ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty, scratch)
            if mg3 < ming:
                ming = mg3
            if mg3 < 0.0:
                negcount += 1
            if h3 <= 0.0:
                status = DOMAIN_ERROR
                break
            x4 = xx + dt * k3x
            y4 = yy + dt * k3y
            k4x, k4y, h4, mg4 = _control_point(
                x4, y4, gx, gy, centers, radii, rho0s,
                k_att, k_rep, alpha_gain,
                ckind, skind, scoef, stx, sty, gkind, glam, gtx, gty, scratch)
            if mg4 < ming:
                ming = mg4
            if mg4 < 0.0:
                negcount += 1
            if h4 <= 0.0:
                status = DOMAIN_ERROR
                break
            xx = xx + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            yy = yy + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    return n, status, ming, negcount
