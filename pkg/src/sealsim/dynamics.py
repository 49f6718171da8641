"""Stator dynamics: RK4 integration with quasistatic film-force coupling."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .adaptivity import AdaptivityConfig, adapt_step
from .mesh import AnnulusMesh
from .model import (
    BearingConfig,
    OdeState,
    RotorMotion,
    TimeSeriesRecord,
    min_clearance,
    rotor_height,
    rotor_height_rate,
)
from .reynolds import FilmSnapshot, NonPositiveGap, PressureField, pressure_force, solve_film

log = logging.getLogger(__name__)

RK4_C = (0.0, 0.5, 0.5, 1.0)
RK4_B = (1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0)


class NoBracket(RuntimeError):
    pass


class AllContact(RuntimeError):
    pass


class NoneContact(RuntimeError):
    pass


@dataclass(frozen=True)
class StepController:
    dt_base: float
    dt_min: float
    g_ref: float

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_base):
            raise ValueError("need 0 < dt_min <= dt_base")

    @classmethod
    def from_bearing(cls, cfg: BearingConfig) -> "StepController":
        return cls(cfg.dt_base, cfg.dt_min, cfg.g_ref)


def choose_dt(g: float, ctl: StepController) -> float:
    """Step size shrinking linearly with the clearance below ``g_ref``."""
    dt = ctl.dt_base * min(1.0, max(g, 0.0) / ctl.g_ref)
    return min(max(dt, ctl.dt_min), ctl.dt_base)


@dataclass
class ContactEvent:
    t_contact: float
    g_min: float
    reason: str = "clearance"


class FilmModel:
    """Quasistatic film force on a (possibly adapting) mesh.

    Keeps the most recent pressure field so the adaptivity controller and
    output writers can reuse it without another solve.
    """

    def __init__(self, cfg: BearingConfig, mesh: AnnulusMesh | None = None):
        self.cfg = cfg
        self.mesh = mesh if mesh is not None else AnnulusMesh(cfg.a, cfg.n_r, cfg.n_theta, cfg.max_refine_level)
        self.field: PressureField | None = None
        self._last_key = None
        self._last_force = None
        self.n_solves = 0

    def solve(self, h_s: float, h_r: float, dh_dt: float) -> PressureField:
        snap = FilmSnapshot.from_config(self.cfg, h_s, h_r, dh_dt)
        self.field = solve_film(self.mesh, snap, self.cfg)
        self.n_solves += 1
        return self.field

    def force(self, h_s: float, h_r: float, dh_dt: float) -> float:
        key = (self.mesh.version, h_s, h_r, dh_dt)
        if key == self._last_key:
            return self._last_force
        fld = self.solve(h_s, h_r, dh_dt)
        self._last_key, self._last_force = key, pressure_force(fld, self.cfg.p_ambient)
        return self._last_force


def ode_rhs(t: float, x1: float, x2: float, film: FilmModel, motion: RotorMotion) -> tuple[float, float]:
    """Right-hand side of the first-order stator system."""
    cfg = film.cfg
    spring = -cfg.d_a * x2 - cfg.k_z * (x1 - 1.0)
    if cfg.alpha == 0.0:
        return x2, spring
    h_r = rotor_height(motion, t)
    f = film.force(x1, h_r, x2 - rotor_height_rate(motion, t))
    return x2, cfg.alpha * f + spring


def rk4_step(state: OdeState, dt: float, rhs: Callable) -> OdeState:
    """Classical explicit RK4 step for ``rhs(t, x1, x2) -> (dx1, dx2)``."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    t, y = state.t, np.array([state.x1, state.x2])
    ks = []
    for i, c in enumerate(RK4_C):
        yi = y if i == 0 else y + dt * (c * ks[-1])
        ks.append(np.array(rhs(t + c * dt, yi[0], yi[1])))
    y_new = y + dt * sum(b * k for b, k in zip(RK4_B, ks))
    return OdeState(float(y_new[0]), float(y_new[1]), t + dt)


def find_equilibrium(cfg: BearingConfig, film: FilmModel | None = None, h_max: float = 1e3) -> float:
    """Stator height balancing spring and film force for a stationary rotor."""
    if cfg.alpha == 0.0:
        return 1.0
    film = film or FilmModel(cfg)

    def residual(h):
        return cfg.k_z * (h - 1.0) - cfg.alpha * film.force(h, 0.0, 0.0)

    lo = cfg.face_tol + abs(cfg.beta)
    r_lo = residual(lo)
    hi = max(2.0, 2.0 * lo)
    r_hi = residual(hi)
    while r_hi * r_lo > 0.0 and hi < h_max:
        hi *= 2.0
        r_hi = residual(hi)
    if r_hi * r_lo > 0.0:
        raise NoBracket(f"force balance has no sign change in [{lo}, {hi}]")
    root = brentq(residual, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    res = residual(root)
    if abs(res) > 1e-10:
        raise NoBracket(f"root finder stalled with residual {res:.2e}")
    return float(root)


def relax_to_equilibrium(cfg: BearingConfig, h0: float, t_end: float, film: FilmModel | None = None, dt: float | None = None) -> float:
    """Stator height after damped transient relaxation with a stationary rotor."""
    film = film or FilmModel(cfg)
    motion = RotorMotion.stationary()
    dt = dt or cfg.dt_base
    state = OdeState(h0, 0.0, 0.0)
    rhs = lambda t, a, b: ode_rhs(t, a, b, film, motion)  # noqa: E731
    while state.t < t_end - 1e-12:
        state = rk4_step(state, min(dt, t_end - state.t), rhs)
    return state.x1


@dataclass
class TransientResult:
    records: list[TimeSeriesRecord]
    contact: ContactEvent | None
    h_eq: float
    mesh: AnnulusMesh
    film: FilmModel = field(repr=False)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def g_min(self) -> float:
        return float(min(r.g for r in self.records))


def run_transient(
    cfg: BearingConfig,
    motion: RotorMotion,
    t_end: float,
    callbacks=(),
    h_eq: float | None = None,
    stop_times=(),
    film: FilmModel | None = None,
) -> TransientResult:
    """Integrate the coupled system from equilibrium until ``t_end`` or contact.

    Each callback is called as ``cb(record, film)`` after every accepted step
    (and once for the initial state). Steps are shortened to land exactly on
    every time in ``stop_times``.
    """
    if t_end <= 0.0:
        raise ValueError("t_end must be positive")
    film = film or FilmModel(cfg)
    if h_eq is None:
        h_eq = find_equilibrium(cfg, film)
    ctl = StepController.from_bearing(cfg)
    acfg = AdaptivityConfig.from_bearing(cfg)
    stops = sorted(s for s in stop_times if 0.0 < s < t_end) + [t_end]
    mesh = film.mesh

    def rhs(t, a, b):
        return ode_rhs(t, a, b, film, motion)

    def make_record(state, dt):
        h_r = rotor_height(motion, state.t)
        f = film.force(state.x1, h_r, state.x2 - rotor_height_rate(motion, state.t)) if cfg.alpha != 0.0 else 0.0
        disc_cells = mesh.n_active
        n_dofs = film.field.disc.n_dofs if film.field is not None else len(mesh.node_ids())
        return TimeSeriesRecord(state.t, state.x1, state.x2, f, min_clearance(state.x1, h_r, cfg.beta), dt, disc_cells, n_dofs)

    state = OdeState(h_eq, 0.0, 0.0)
    records: list[TimeSeriesRecord] = []
    contact = None
    try:
        rec = make_record(state, 0.0)
    except NonPositiveGap:
        rec = TimeSeriesRecord(0.0, h_eq, 0.0, math.nan, min_clearance(h_eq, rotor_height(motion, 0.0), cfg.beta), 0.0, mesh.n_active, 0)
    records.append(rec)
    for cb in callbacks:
        cb(rec, film)
    g_min = rec.g
    if rec.g < cfg.face_tol:
        return TransientResult(records, ContactEvent(0.0, rec.g), h_eq, mesh, film)

    step = 0
    stop_idx = 0
    while state.t < t_end - 1e-12:
        g = min_clearance(state.x1, rotor_height(motion, state.t), cfg.beta)
        while stops[stop_idx] <= state.t + 1e-12:
            stop_idx += 1
        dt = min(choose_dt(g, ctl), stops[stop_idx] - state.t)
        if cfg.adaptive:
            _, changed = adapt_step(mesh, film.field, g, step, acfg)
            if changed:
                film.field = None
        try:
            new = rk4_step(state, dt, rhs)
        except NonPositiveGap:
            dt = dt / 4.0
            try:
                new = rk4_step(state, dt, rhs)
            except NonPositiveGap as exc:
                contact = ContactEvent(state.t, min(g_min, 0.0), reason=f"stage gap: {exc}")
                break
        if not new.is_finite():
            contact = ContactEvent(state.t, g_min, reason="non-finite state")
            break
        state = new
        step += 1
        try:
            rec = make_record(state, dt)
        except NonPositiveGap:
            contact = ContactEvent(state.t, min(g_min, min_clearance(state.x1, rotor_height(motion, state.t), cfg.beta)))
            break
        records.append(rec)
        g_min = min(g_min, rec.g)
        for cb in callbacks:
            cb(rec, film)
        if rec.g < cfg.face_tol:
            contact = ContactEvent(state.t, rec.g)
            break
    return TransientResult(records, contact, h_eq, mesh, film)


# ---------------------------------------------------------------- periodicity
def period_curves(result: TransientResult, motion: RotorMotion, period: float = 2.0 * math.pi):
    """Split the ``(g, dg/dt)`` trajectory into per-period arrays.

    Returns a list of ``(phase, g, dg_dt)`` arrays, one per complete period.
    """
    t = result.column("t")
    g = result.column("g")
    dg = np.array([r.dh_s_dt - rotor_height_rate(motion, r.t) for r in result.records])
    out = []
    n = int(math.floor(t[-1] / period + 1e-9))
    for k in range(n):
        lo, hi = k * period, (k + 1) * period
        sel = (t >= lo - 1e-9) & (t <= hi + 1e-9)
        out.append((t[sel] - lo, g[sel], dg[sel]))
    return out


def closure_distance(curve_a, curve_b) -> float:
    """Sup distance between two per-period ``(g, dg/dt)`` curves.

    ``curve_b`` is interpolated onto the phases of ``curve_a``.
    """
    pa, ga, da = curve_a
    pb, gb, db = curve_b
    gi = np.interp(pa, pb, gb)
    di = np.interp(pa, pb, db)
    return float(np.max(np.hypot(ga - gi, da - di)))


# ---------------------------------------------------------------- contact search
@dataclass
class BisectionProbe:
    beta: float
    contact: bool
    g_min: float
    t_contact: float | None


def classify_contact(cfg: BearingConfig, motion: RotorMotion, n_periods: int, beta: float) -> BisectionProbe:
    c = cfg.with_(beta=beta, eps=motion.eps)
    try:
        h_eq = find_equilibrium(c)
    except NoBracket:
        return BisectionProbe(beta, True, -math.inf, 0.0)
    res = run_transient(c, motion, n_periods * motion.period, h_eq=h_eq)
    hit = res.contact is not None
    return BisectionProbe(beta, hit, res.g_min, res.contact.t_contact if hit else None)


def critical_angle(
    eps: float,
    cfg: BearingConfig,
    n_periods: int = 5,
    beta_lo: float = 0.0,
    beta_hi: float | None = None,
    decimals: int = 4,
    trail: list | None = None,
) -> float:
    """Largest misalignment (on a ``10**-decimals`` grid) that avoids contact.

    Bisection over grid indices, so the answer is exact on the grid and
    reproducible. Every probe is appended to ``trail`` when given.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    motion = RotorMotion.sinusoidal(eps)
    unit = 10.0**-decimals
    if beta_hi is None:
        beta_hi = find_equilibrium(cfg.with_(beta=0.0)) + eps
    lo = int(round(beta_lo / unit))
    hi = int(round(beta_hi / unit))
    trail = trail if trail is not None else []

    def probe(k):
        p = classify_contact(cfg, motion, n_periods, round(k * unit, decimals))
        trail.append(p)
        log.info("eps=%g beta=%.*f contact=%s g_min=%.3e", eps, decimals, p.beta, p.contact, p.g_min)
        return p.contact

    if probe(lo):
        raise AllContact(f"contact already at beta={lo * unit}")
    if not probe(hi):
        raise NoneContact(f"no contact at beta={hi * unit}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return round(lo * unit, decimals)
