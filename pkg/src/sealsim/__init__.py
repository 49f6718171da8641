"""Coupled film/stator dynamics of a misaligned non-contacting face seal."""

from .adaptivity import AdaptivityConfig, adapt_step
from .dynamics import (
    ContactEvent,
    FilmModel,
    StepController,
    choose_dt,
    critical_angle,
    find_equilibrium,
    ode_rhs,
    rk4_step,
    run_transient,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .mesh import AnnulusMesh, build_coarse_annulus, hanging_constraints, refine_and_coarsen
from .model import (
    BearingConfig,
    ConfigError,
    OdeState,
    RotorMotion,
    StatorState,
    TimeSeriesRecord,
    gap,
    min_clearance,
    min_clearance_rate,
    rotor_height,
    rotor_height_rate,
)
from .reynolds import (
    FilmSnapshot,
    NonPositiveGap,
    PressureField,
    assemble,
    kelly_indicator,
    pressure_force,
    solve_pressure,
    source_term,
    velocity_profile,
)

__version__ = "0.1.0"
