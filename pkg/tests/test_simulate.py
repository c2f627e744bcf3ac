"""Closed-loop rollouts against hand-stepped integrators, plus metrics and CSV."""

import logging
import math

import numpy as np
import pytest

from apf_rcbf import (
    ControllerSpec,
    GammaSelector,
    Obstacle,
    Scenario,
    SigmaSelector,
    Trajectory,
    apf_control,
    f_rep,
    metrics,
    nominal_control,
    read_trajectory_csv,
    rho,
    simulate,
    write_trajectory_csv,
)
from apf_rcbf.simulate import csv_header

SQ = SigmaSelector.grad_norm_squared()


def spec_nominal():
    return ControllerSpec("nominal_only", sigma_sel=SQ)


@pytest.fixture(scope="module")
def single():
    return Scenario(goal=[4.0, 0.0],
                    obstacles=(Obstacle([2.0, 0.0], 0.5, 0.2),))


def test_controller_spec_validation():
    with pytest.raises(ValueError, match="unknown controller kind"):
        ControllerSpec("pid")
    with pytest.raises(ValueError, match="requires sigma_sel"):
        ControllerSpec("nominal_only")
    with pytest.raises(ValueError, match="requires sigma_sel"):
        ControllerSpec("generalized", gamma_sel=GammaSelector.zero())
    with pytest.raises(ValueError, match="requires gamma_sel"):
        ControllerSpec("generalized", sigma_sel=SQ)
    with pytest.raises(ValueError, match="takes no selectors"):
        ControllerSpec("apf", sigma_sel=SQ)
    with pytest.raises(ValueError, match="takes no selectors"):
        ControllerSpec("special_filter", gamma_sel=GammaSelector.zero())
    ControllerSpec("apf")
    ControllerSpec("special_filter")
    ControllerSpec("generalized", sigma_sel=SQ, gamma_sel=GammaSelector.zero())


def test_sim_config_validation():
    from apf_rcbf import SimConfig
    with pytest.raises(ValueError, match="dt must lie"):
        SimConfig(dt=0.0)
    with pytest.raises(ValueError, match="dt must lie"):
        SimConfig(dt=0.1)
    with pytest.raises(ValueError, match="t_max must be positive"):
        SimConfig(t_max=0.0)
    with pytest.raises(ValueError, match="goal_tolerance must be positive"):
        SimConfig(goal_tolerance=-1.0)
    with pytest.raises(ValueError, match="integrator must be one of"):
        SimConfig(integrator="rk45")
    cfg = SimConfig()
    assert (cfg.dt, cfg.t_max, cfg.goal_tolerance, cfg.integrator) == \
        (0.01, 40.0, 0.05, "rk4")


def test_simulate_rejects_bad_start(single):
    from apf_rcbf import SimConfig
    with pytest.raises(ValueError, match="finite 2-vector"):
        simulate(single, spec_nominal(), SimConfig(), [np.nan, 0.0])
    with pytest.raises(ValueError, match="strictly outside"):
        simulate(single, spec_nominal(), SimConfig(), [2.0, 0.1])
    with pytest.raises(ValueError, match="smaller than the smallest obstacle radius"):
        simulate(single, spec_nominal(), SimConfig(goal_tolerance=0.5), [0.0, 0.0])


def test_simulate_validates_scenario():
    from apf_rcbf import ScenarioValidationError, SimConfig
    bad = Scenario(goal=[1, 0], k_att=-1.0)
    with pytest.raises(ScenarioValidationError):
        simulate(bad, spec_nominal(), SimConfig(), [0.0, 0.0])


def test_euler_matches_hand_stepping():
    """Three Euler steps of the pure stabilizer, replayed with bare floats."""
    from apf_rcbf import SimConfig
    s = Scenario(goal=[3.0, 5.0], k_att=1.5)
    cfg = SimConfig(dt=0.02, t_max=0.06, goal_tolerance=1e-3, integrator="euler")
    tr = simulate(s, spec_nominal(), cfg, [1.0, 2.0])
    assert tr.terminal == "timeout"
    assert tr.n_samples == 4  # samples at t = 0, 0.02, 0.04, 0.06

    xx, yy = 1.0, 2.0
    for k in range(4):
        ex, ey = xx - 3.0, yy - 5.0
        ux, uy = -(1.5 * ex), -(1.5 * ey)
        assert tr.t[k] == k * 0.02
        assert (tr.x[k, 0], tr.x[k, 1]) == (xx, yy)
        assert (tr.u[k, 0], tr.u[k, 1]) == (ux, uy)
        assert tr.V[k] == 0.5 * 1.5 * (ex * ex + ey * ey)
        assert tr.h_min[k] == np.inf  # no obstacles anywhere
        xx = xx + 0.02 * ux
        yy = yy + 0.02 * uy


def test_rk4_matches_hand_stepping():
    """One RK4 step of the obstacle-free stabilizer, all four stages by hand."""
    from apf_rcbf import SimConfig
    s = Scenario(goal=[2.0, -1.0], k_att=2.0)
    cfg = SimConfig(dt=0.03, t_max=0.03, goal_tolerance=1e-6, integrator="rk4")
    tr = simulate(s, spec_nominal(), cfg, [0.5, 0.5])
    assert tr.n_samples == 2

    def f(px, py):
        return -(2.0 * (px - 2.0)), -(2.0 * (py - -1.0))

    dt = 0.03
    xx, yy = 0.5, 0.5
    k1x, k1y = f(xx, yy)
    k2x, k2y = f(xx + 0.5 * dt * k1x, yy + 0.5 * dt * k1y)
    k3x, k3y = f(xx + 0.5 * dt * k2x, yy + 0.5 * dt * k2y)
    k4x, k4y = f(xx + dt * k3x, yy + dt * k3y)
    nx = xx + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    ny = yy + (dt / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    assert (tr.x[1, 0], tr.x[1, 1]) == (nx, ny)


def test_reached_goal_immediately():
    from apf_rcbf import SimConfig
    s = Scenario(goal=[1.0, 1.0])
    tr = simulate(s, spec_nominal(), SimConfig(goal_tolerance=0.05), [1.0, 0.96])
    assert tr.terminal == "reached_goal"
    assert tr.n_samples == 1
    assert metrics(tr).time_to_goal == 0.0


def test_reached_goal_converges():
    from apf_rcbf import SimConfig
    s = Scenario(goal=[1.0, 1.0])
    tr = simulate(s, spec_nominal(), SimConfig(), [-2.0, 3.0])
    assert tr.terminal == "reached_goal"
    assert np.hypot(*(tr.x[-1] - s.goal)) < 0.05
    # exponential approach: distance shrinks monotonically
    dists = np.hypot(tr.x[:, 0] - 1.0, tr.x[:, 1] - 1.0)
    assert np.all(np.diff(dists) < 0)


def test_timeout_sample_count():
    from apf_rcbf import SimConfig
    s = Scenario(goal=[100.0, 0.0])
    cfg = SimConfig(dt=0.01, t_max=0.05, goal_tolerance=0.01)
    tr = simulate(s, spec_nominal(), cfg, [0.0, 0.0])
    assert tr.terminal == "timeout"
    assert tr.n_samples == 6  # n_max + 1 samples, t = 0 .. t_max
    assert tr.t[-1] == pytest.approx(0.05, abs=1e-15)


def test_domain_error_when_blind_controller_hits_obstacle(single):
    """The unfiltered stabilizer drives straight through the obstacle; the
    rollout must stop at the last state with positive clearance."""
    from apf_rcbf import SimConfig
    cfg = SimConfig(dt=0.05, t_max=10.0, goal_tolerance=0.05, integrator="euler")
    tr = simulate(single, spec_nominal(), cfg, [0.0, 0.0])
    assert tr.terminal == "domain_error"
    assert np.all(tr.h_min > 0)
    assert tr.n_samples >= 2
    # while the filtered controller sails around^W bounces off safely
    tr_apf = simulate(single, ControllerSpec("apf"), cfg, [0.0, 0.0])
    assert tr_apf.terminal != "domain_error"
    assert np.all(tr_apf.h_min > 0)


def test_rk4_stage_domain_checks(single):
    """A stage state inside the obstacle aborts even if full steps stay out."""
    from apf_rcbf import SimConfig
    cfg = SimConfig(dt=0.05, t_max=10.0, goal_tolerance=0.05, integrator="rk4")
    tr = simulate(single, spec_nominal(), cfg, [0.0, 0.0])
    assert tr.terminal == "domain_error"
    assert np.all(tr.h_min > 0)


def test_filtered_run_warns_on_negative_tightening(caplog):
    """A tiny scaled-special coefficient drives the tightening negative on the
    approach — and is too weak to keep the discrete rollout out of the
    obstacle.  The post-run warning is the diagnostic for exactly this."""
    s = Scenario(goal=[7.0, 0.0], obstacles=(Obstacle([0.0, 0.0], 0.5, 0.2),))
    from apf_rcbf import SimConfig
    spec = ControllerSpec("generalized", sigma_sel=SQ,
                          gamma_sel=GammaSelector.scaled_special(1e-3))
    cfg = SimConfig(dt=0.01, t_max=5.0, goal_tolerance=0.05)
    with caplog.at_level(logging.WARNING, logger="apf_rcbf.simulate"):
        tr = simulate(s, spec, cfg, [-0.75, 0.0])
    msgs = [r.getMessage() for r in caplog.records
            if "evaluated negative" in r.getMessage()]
    assert len(msgs) == 1
    assert "generalized" in msgs[0]
    assert tr.terminal == "domain_error"
    assert np.all(tr.h_min > 0)  # samples stop at the last safe state


def test_apf_run_never_warns_about_tightening(single, caplog):
    from apf_rcbf import SimConfig
    cfg = SimConfig(dt=0.01, t_max=10.0, goal_tolerance=0.05)
    with caplog.at_level(logging.WARNING, logger="apf_rcbf.simulate"):
        simulate(single, ControllerSpec("apf"), cfg, [0.0, 0.0])
    assert not [r for r in caplog.records if "tightening" in r.getMessage()]


def test_recorded_phi_matches_term_recomputation(single):
    """phi columns must be recomputable from the recorded states."""
    from apf_rcbf import SimConfig
    cfg = SimConfig(dt=0.01, t_max=10.0, goal_tolerance=0.05)
    spec = ControllerSpec("generalized", sigma_sel=SQ,
                          gamma_sel=GammaSelector.zero())
    tr = simulate(single, spec, cfg, [0.0, 0.4])
    obs = single.obstacles[0]
    n_active = 0
    for k in range(tr.n_samples):
        x = tr.x[k]
        h = rho(x, obs)
        d = f_rep(x, obs, single)
        u_nom = nominal_control(x, single, SQ)
        phi_expected = -single.alpha_gain * h + float(d @ u_nom)
        assert tr.phi[k, 0] == pytest.approx(phi_expected, rel=1e-12, abs=1e-12)
        if tr.phi[k, 0] > 0:
            n_active += 1
    assert tr.terminal == "reached_goal"
    assert n_active > 0  # the filter actually had to intervene on this route


def test_recorded_u_matches_controller(single):
    from apf_rcbf import SimConfig
    cfg = SimConfig(dt=0.02, t_max=10.0, goal_tolerance=0.05)
    tr = simulate(single, ControllerSpec("apf"), cfg, [0.0, 0.3])
    for k in range(0, tr.n_samples, 7):
        np.testing.assert_array_equal(tr.u[k], apf_control(tr.x[k], single))


def test_metrics_straight_line():
    from apf_rcbf import SimConfig
    s = Scenario(goal=[5.0, 0.0])
    tr = simulate(s, spec_nominal(), SimConfig(), [0.0, 0.0])
    m = metrics(tr)
    assert m.time_to_goal == tr.t[-1]
    assert m.oscillation == 0.0
    travelled = 5.0 - np.hypot(*(tr.x[-1] - s.goal))
    assert m.path_length == pytest.approx(travelled, rel=1e-9)
    assert m.min_clearance == math.inf


def test_metrics_right_angle_turn():
    t = np.array([0.0, 1.0, 2.0])
    x = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    tr = Trajectory(t=t, x=x, u=np.zeros((3, 2)), h_min=np.full(3, 0.7),
                    V=np.zeros(3), phi=np.zeros((3, 0)), terminal="timeout")
    m = metrics(tr)
    assert m.path_length == pytest.approx(2.0, rel=1e-15)
    assert m.oscillation == pytest.approx(np.pi / 2, rel=1e-12)
    assert m.min_clearance == 0.7
    assert m.time_to_goal is None


def test_metrics_ignores_stationary_tail():
    x = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
    tr = Trajectory(t=np.arange(4.0), x=x, u=np.zeros((4, 2)),
                    h_min=np.ones(4), V=np.zeros(4), phi=np.zeros((4, 0)),
                    terminal="timeout")
    assert metrics(tr).oscillation == 0.0
    assert metrics(tr).path_length == pytest.approx(1.0)


def test_trajectory_rejects_unknown_terminal():
    with pytest.raises(ValueError, match="unknown terminal status"):
        Trajectory(t=np.zeros(1), x=np.zeros((1, 2)), u=np.zeros((1, 2)),
                   h_min=np.zeros(1), V=np.zeros(1), phi=np.zeros((1, 0)),
                   terminal="finished")


def test_csv_header_names():
    assert csv_header(0) == "t,x,y,ux,uy,h_min,V"
    assert csv_header(2) == "t,x,y,ux,uy,h_min,V,phi_1,phi_2"


def test_csv_round_trip_is_exact(single, tmp_path):
    """%.17g serialization must reproduce every float64 bit for bit."""
    from apf_rcbf import SimConfig
    cfg = SimConfig(dt=0.01, t_max=2.0, goal_tolerance=0.05)
    tr = simulate(single, ControllerSpec("apf"), cfg, [0.0, 0.3])
    path = tmp_path / "run.csv"
    write_trajectory_csv(tr, path)
    back = read_trajectory_csv(path, terminal=tr.terminal)
    assert back.terminal == tr.terminal
    np.testing.assert_array_equal(back.t, tr.t)
    np.testing.assert_array_equal(back.x, tr.x)
    np.testing.assert_array_equal(back.u, tr.u)
    np.testing.assert_array_equal(back.h_min, tr.h_min)
    np.testing.assert_array_equal(back.V, tr.V)
    np.testing.assert_array_equal(back.phi, tr.phi)
    header = path.read_text().splitlines()[0]
    assert header == "t,x,y,ux,uy,h_min,V,phi_1"


def test_csv_reader_rejects_foreign_header(tmp_path):
    path = tmp_path / "other.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError, match="unexpected trajectory CSV header"):
        read_trajectory_csv(path, terminal="timeout")
