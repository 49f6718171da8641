import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import F_LOG, damped_oscillator, oscillator_errors, rates
from sealsim.dynamics import (
    AllContact,
    FilmModel,
    NoBracket,
    NoneContact,
    StepController,
    choose_dt,
    closure_distance,
    critical_angle,
    find_equilibrium,
    ode_rhs,
    period_curves,
    rk4_step,
    run_transient,
)
from sealsim.model import BearingConfig, RotorMotion, StatorState, min_clearance, rotor_height

STILL = RotorMotion.stationary()
SMALL = dict(n_r=4, n_theta=16, adaptive=False)


def test_ode_rhs_decoupled_examples():
    film = FilmModel(BearingConfig(alpha=0.0, d_a=0.0, k_z=1.0))
    assert ode_rhs(0.0, 1.0, 0.0, film, STILL) == (0.0, 0.0)
    film = FilmModel(BearingConfig(alpha=0.0))
    assert ode_rhs(0.0, 1.2, 0.0, film, STILL) == pytest.approx((0.0, -1.0))
    assert film.n_solves == 0


def test_ode_rhs_static_log_force():
    cfg = BearingConfig()
    film = FilmModel(cfg)
    dx1, dx2 = ode_rhs(0.0, 1.3, 0.0, film, STILL)
    assert dx1 == 0.0
    assert dx2 == pytest.approx(cfg.alpha * F_LOG - cfg.k_z * 0.3, abs=1e-2 * F_LOG)
    # force cache: same state, no second solve
    ode_rhs(0.0, 1.3, 0.0, film, STILL)
    assert film.n_solves == 1


def test_rk4_exact_for_constant_velocity():
    s = rk4_step(StatorState(1.0, 0.7, 2.0), 0.3, lambda t, a, b: (b, 0.0))
    assert (s.x1, s.x2, s.t) == pytest.approx((1.21, 0.7, 2.3), abs=1e-15)
    with pytest.raises(ValueError):
        rk4_step(s, 0.0, lambda t, a, b: (b, 0.0))


def test_rk4_single_step_matches_taylor():
    # y' = y has RK4 amplification exactly the degree-4 Taylor polynomial
    dt = 0.1
    s = rk4_step(StatorState(1.0, 0.0), dt, lambda t, a, b: (a, 0.0))
    assert s.x1 == pytest.approx(1 + dt + dt**2 / 2 + dt**3 / 6 + dt**4 / 24, abs=1e-15)


def test_rk4_global_order():
    period = 2 * math.pi / math.sqrt(5 - 0.0625)
    errs = oscillator_errors([period / 100, period / 200, period / 400])
    assert np.all(rates(errs) >= 3.8)


def test_rk4_handles_stiff_force_at_dt_min():
    cfg = BearingConfig(beta=0.2)
    film = FilmModel(cfg)
    s = rk4_step(StatorState(0.2 + 2e-3, -1.0), cfg.dt_min, lambda t, a, b: ode_rhs(t, a, b, film, STILL))
    assert s.is_finite()


def test_lyapunov_non_increasing():
    cfg = BearingConfig(alpha=0.0)
    film = FilmModel(cfg)
    s = StatorState(1.4, -0.3)
    energy = [0.5 * s.x2**2 + 0.5 * cfg.k_z * (s.x1 - 1) ** 2]
    for _ in range(400):
        s = rk4_step(s, cfg.dt_base / 4, lambda t, a, b: ode_rhs(t, a, b, film, STILL))
        energy.append(0.5 * s.x2**2 + 0.5 * cfg.k_z * (s.x1 - 1) ** 2)
    assert np.all(np.diff(energy) <= 1e-15)


def test_choose_dt_examples():
    ctl = StepController(0.1, 0.001, 0.2)
    assert choose_dt(0.5, ctl) == 0.1
    assert choose_dt(0.02, ctl) == pytest.approx(0.01)
    assert choose_dt(1e-9, ctl) == 0.001
    with pytest.raises(ValueError):
        StepController(0.1, 0.2, 0.1)


@given(st.floats(0, 5), st.floats(0, 5))
def test_choose_dt_monotone_and_bounded(g1, g2):
    ctl = StepController.from_bearing(BearingConfig())
    lo, hi = sorted((g1, g2))
    assert ctl.dt_min <= choose_dt(lo, ctl) <= choose_dt(hi, ctl) <= ctl.dt_base


def test_equilibrium_cases():
    assert find_equilibrium(BearingConfig(alpha=0.0)) == 1.0
    cfg = BearingConfig()
    film = FilmModel(cfg)
    h = find_equilibrium(cfg, film)
    assert h == pytest.approx(1.0 + cfg.alpha * film.force(h, 0.0, 0.0) / cfg.k_z, abs=1e-12)
    with pytest.raises(NoBracket):
        find_equilibrium(BearingConfig(alpha=-10.0))


def test_stationary_run_is_fixed_point():
    cfg = BearingConfig(beta=0.1, **SMALL)
    res = run_transient(cfg, STILL, 100 * cfg.dt_base)
    assert res.contact is None and len(res.records) == 101
    for name in ("h_s", "F", "g"):
        col = res.column(name)
        assert np.ptp(col) < 1e-9
    assert np.all(np.diff(res.column("t")) > 0)


def test_records_deterministic_and_consistent():
    cfg = BearingConfig(beta=0.25, **SMALL)
    motion = RotorMotion.sinusoidal(1.2)
    a = run_transient(cfg, motion, 3.0, stop_times=[1.0, 2.5])
    b = run_transient(cfg, motion, 3.0, stop_times=[1.0, 2.5])
    assert [r.row() for r in a.records] == [r.row() for r in b.records]
    ts = a.column("t")
    assert 1.0 in ts and 2.5 in ts and ts[-1] == 3.0
    for r in a.records:
        assert r.g == min_clearance(r.h_s, rotor_height(motion, r.t), cfg.beta)


def test_callbacks_see_every_record():
    seen = []
    cfg = BearingConfig(**SMALL)
    res = run_transient(cfg, RotorMotion.bump(0.5), 1.0, callbacks=[lambda rec, film: seen.append(rec.t)])
    assert seen == list(res.column("t"))


def test_contact_is_detected():
    cfg = BearingConfig(beta=1.0, **SMALL)
    res = run_transient(cfg, RotorMotion.sinusoidal(1.2), 3.0)
    assert res.contact is not None
    assert res.contact.g_min < cfg.face_tol
    assert res.contact.t_contact < 3.0


def test_contact_at_start_when_tolerance_exceeds_clearance():
    cfg = BearingConfig(beta=0.25, **SMALL)
    h_eq = find_equilibrium(cfg)
    tight = cfg.with_(face_tol=h_eq - 0.25 + 1e-9)
    res = run_transient(tight, RotorMotion.sinusoidal(1.2), 1.0, h_eq=h_eq)
    assert res.contact is not None and res.contact.t_contact == 0.0


def test_period_curves_and_closure():
    motion = RotorMotion.sinusoidal(0.5)
    cfg = BearingConfig(alpha=0.0)
    res = run_transient(cfg, motion, 2 * motion.period)
    curves = period_curves(res, motion)
    assert len(curves) == 2
    ph, g, dg = curves[0]
    assert ph[0] == 0.0 and ph[-1] == pytest.approx(motion.period)
    assert closure_distance(curves[0], curves[0]) == 0.0
    shifted = (ph, g + 0.3, dg - 0.4)
    assert closure_distance(shifted, curves[0]) == pytest.approx(0.5)


def test_critical_angle_bracket_errors():
    cfg = BearingConfig(**SMALL)
    with pytest.raises(AllContact):
        critical_angle(1.2, cfg, n_periods=1, beta_lo=1.5, beta_hi=2.0, decimals=2)
    with pytest.raises(NoneContact):
        critical_angle(1.2, cfg, n_periods=1, beta_lo=0.0, beta_hi=0.1, decimals=2)
    with pytest.raises(ValueError):
        critical_angle(-1.0, cfg)


def test_critical_angle_trail_monotone():
    cfg = BearingConfig(**SMALL)
    trail = []
    beta = critical_angle(1.2, cfg, n_periods=1, decimals=2, trail=trail)
    assert beta == round(beta, 2)
    safe = [p.beta for p in trail if not p.contact]
    hit = [p.beta for p in trail if p.contact]
    assert max(safe) == beta and min(hit) == pytest.approx(beta + 0.01)
    assert max(safe) < min(hit)
    for p in trail:
        if p.contact:
            assert p.g_min < cfg.face_tol
