"""Kelly-indicator driven mesh refinement and coarsening between time steps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import COARSEN, KEEP, REFINE, AnnulusMesh
from .model import BearingConfig, ConfigError
from .reynolds import PressureField, kelly_indicator


@dataclass(frozen=True)
class AdaptivityConfig:
    theta_max: float = 0.3
    theta_min: float = 0.03
    refine_interval: int = 5
    g_trigger: float = 2e-2
    max_refine_level: int = 6

    def __post_init__(self):
        if not (0.0 < self.theta_min < self.theta_max <= 1.0):
            raise ConfigError("need 0 < theta_min < theta_max <= 1")
        if self.refine_interval < 1:
            raise ConfigError("refine_interval must be >= 1")
        if self.g_trigger <= 0.0:
            raise ConfigError("g_trigger must be > 0")

    @classmethod
    def from_bearing(cls, cfg: BearingConfig) -> "AdaptivityConfig":
        return cls(cfg.theta_max, cfg.theta_min, cfg.refine_interval, cfg.g_trigger, cfg.max_refine_level)


# indicator values below this fraction of the field magnitude are roundoff
ZERO_FLOOR = 1e-10


def mark_cells(eta: np.ndarray, theta_max: float, theta_min: float, floor: float = 0.0) -> np.ndarray:
    """Fixed-fraction-of-maximum marking.

    A maximum at or below ``floor`` counts as zero and marks nothing.
    """
    marks = np.full(len(eta), KEEP, dtype=int)
    top = float(np.max(eta)) if len(eta) else 0.0
    if top <= floor:
        return marks
    marks[eta > theta_max * top] = REFINE
    marks[eta < theta_min * top] = COARSEN
    return marks


def adapt_step(
    mesh: AnnulusMesh,
    field: PressureField | None,
    g: float,
    step_index: int,
    cfg: AdaptivityConfig,
) -> tuple[AnnulusMesh, bool]:
    """One pass of the dynamic refinement controller at a time step.

    Runs every ``refine_interval`` steps. Below ``g_trigger`` cells are
    marked from the Kelly indicator of ``field``; otherwise every refined cell
    is marked for coarsening so the mesh relaxes towards the coarse grid.
    """
    if step_index % cfg.refine_interval != 0:
        return mesh, False
    mesh.max_level = cfg.max_refine_level
    before = mesh.version
    if g < cfg.g_trigger:
        if field is None or field.disc.version != mesh.version:
            return mesh, False
        eta = kelly_indicator(field)
        floor = ZERO_FLOOR * max(1.0, float(np.max(np.abs(field.values))))
        marks = mark_cells(eta, cfg.theta_max, cfg.theta_min, floor)
    else:
        levels = mesh.levels()
        if not np.any(levels > 0):
            return mesh, False
        marks = np.where(levels > 0, COARSEN, KEEP)
    mesh.refine_and_coarsen(list(marks))
    return mesh, mesh.version != before
