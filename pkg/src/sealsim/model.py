"""Nondimensional parameters, rotor motion laws and film-gap formulas."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

DT_BASE = 2.0 * math.pi / 200.0


class ConfigError(ValueError):
    """Raised when a configuration value violates its documented range."""


@dataclass(frozen=True)
class BearingConfig:
    """All nondimensional parameters and numerical controls for one simulation.

    Physical groups follow the scaled Reynolds/stator system: ``sigma_t`` is
    the scaled squeeze number, ``re_star`` multiplies the wedge source,
    ``alpha`` couples the film force into the stator equation, ``d_a`` and
    ``k_z`` are the stator damping and restoring stiffness.
    """

    a: float = 0.2
    beta: float = 0.0
    eps: float = 0.0
    sigma_t: float = 1.0
    re_star: float = 1.0
    alpha: float = 1.0
    d_a: float = 0.5
    k_z: float = 5.0
    p_inner: float = 1.0
    p_outer: float = 2.0
    p_ambient: float = 1.0
    face_tol: float = 1e-4
    source_phase: float = 0.0
    # time stepping
    dt_base: float = DT_BASE
    dt_min: float = DT_BASE / 2048.0
    g_ref: float = 0.2
    # mesh and adaptivity
    n_r: int = 8
    n_theta: int = 40
    adaptive: bool = True
    g_trigger: float = 2e-2
    theta_max: float = 0.3
    theta_min: float = 0.03
    refine_interval: int = 5
    max_refine_level: int = 6
    # linear algebra
    solver: str = "direct"
    solver_tol: float = 1e-10

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        checks = [
            (0.0 < self.a < 1.0, "a", "a must lie in (0, 1)"),
            (self.sigma_t > 0.0, "sigma_t", "sigma_t must be > 0"),
            (self.face_tol > 0.0, "face_tol", "face_tol must be > 0"),
            (self.k_z > 0.0, "k_z", "k_z must be > 0"),
            (self.d_a >= 0.0, "d_a", "d_a must be >= 0"),
            (self.dt_base > 0.0, "dt_base", "dt_base must be > 0"),
            (0.0 < self.dt_min <= self.dt_base, "dt_min", "need 0 < dt_min <= dt_base"),
            (self.g_ref > 0.0, "g_ref", "g_ref must be > 0"),
            (self.g_trigger > 0.0, "g_trigger", "g_trigger must be > 0"),
            (
                0.0 < self.theta_min < self.theta_max <= 1.0,
                "theta_min",
                "need 0 < theta_min < theta_max <= 1",
            ),
            (self.refine_interval >= 1, "refine_interval", "refine_interval must be >= 1"),
            (self.max_refine_level >= 0, "max_refine_level", "max_refine_level must be >= 0"),
            (self.n_r >= 1, "n_r", "n_r must be >= 1"),
            (self.n_theta >= 4, "n_theta", "n_theta must be >= 4"),
            (self.solver in ("direct", "cg"), "solver", "solver must be 'direct' or 'cg'"),
            (self.solver_tol > 0.0, "solver_tol", "solver_tol must be > 0"),
        ]
        for ok, key, msg in checks:
            if not ok:
                raise ConfigError(f"{key}: {msg} (got {getattr(self, key)!r})")

    def with_(self, **changes) -> "BearingConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class RotorMotion:
    """Prescribed axial motion of the rotor centre.

    ``kind`` is one of ``"stationary"``, ``"sinusoidal"`` or ``"bump"``.
    """

    kind: str = "stationary"
    eps: float = 0.0

    KINDS = ("stationary", "sinusoidal", "bump")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"motion: unknown kind {self.kind!r}, expected one of {self.KINDS}")

    @classmethod
    def stationary(cls) -> "RotorMotion":
        return cls("stationary", 0.0)

    @classmethod
    def sinusoidal(cls, eps: float) -> "RotorMotion":
        return cls("sinusoidal", eps)

    @classmethod
    def bump(cls, eps: float) -> "RotorMotion":
        return cls("bump", eps)

    @property
    def period(self) -> float:
        return 2.0 * math.pi


def rotor_height(motion: RotorMotion, t: float) -> float:
    """Axial height of the rotor centre at time ``t``."""
    if motion.kind == "sinusoidal":
        return motion.eps * math.sin(t)
    if motion.kind == "bump":
        u = 0.25 * (t - 2.0) ** 2
        if u >= 1.0:
            return 0.0
        return motion.eps * math.exp(-1.0 / (1.0 - u))
    return 0.0


def rotor_height_rate(motion: RotorMotion, t: float) -> float:
    """Exact time derivative of :func:`rotor_height`."""
    if motion.kind == "sinusoidal":
        return motion.eps * math.cos(t)
    if motion.kind == "bump":
        u = 0.25 * (t - 2.0) ** 2
        if u >= 1.0:
            return 0.0
        one_minus = 1.0 - u
        return -motion.eps * math.exp(-1.0 / one_minus) * (t - 2.0) / (2.0 * one_minus**2)
    return 0.0


def gap(r, theta, h_s: float, h_r: float, beta: float, source_phase: float = 0.0):
    """Film thickness between rotor and stator.

    Works elementwise on arrays. Non-positive values are returned unchanged;
    callers decide what contact means.
    """
    return h_s - h_r - r * beta * np.sin(np.asarray(theta) - source_phase)


def min_clearance(h_s: float, h_r: float, beta: float) -> float:
    """Minimum of :func:`gap` over the annulus, attained on the outer rim."""
    return h_s - h_r - abs(beta)


def min_clearance_rate(x2: float, motion: RotorMotion, t: float) -> float:
    return x2 - rotor_height_rate(motion, t)


@dataclass
class StatorState:
    x1: float
    x2: float
    t: float = 0.0

    def is_finite(self) -> bool:
        return math.isfinite(self.x1) and math.isfinite(self.x2)


# the ODE state carries the same data
OdeState = StatorState


@dataclass
class TimeSeriesRecord:
    t: float
    h_s: float
    dh_s_dt: float
    F: float
    g: float
    dt: float
    n_cells: int
    n_dofs: int
    extra: dict = field(default_factory=dict, repr=False)

    CSV_HEADER = ("t", "h_s", "dh_s_dt", "F", "g", "dt", "n_cells", "n_dofs")

    def row(self) -> tuple:
        return (self.t, self.h_s, self.dh_s_dt, self.F, self.g, self.dt, self.n_cells, self.n_dofs)
