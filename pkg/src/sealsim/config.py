"""Scenario and sweep configuration files.

Config files are TOML. Bearing parameters may be given at top level or in a
``[bearing]`` table; run controls live in ``[run]`` (or top level), rotor
motion in ``[motion]`` and critical-angle sweeps in ``[sweep]``::

    preset = "example2"   # optional base preset
    a = 0.2
    beta = 0.25

    [motion]
    kind = "sinusoidal"

    [run]
    n_periods = 5
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .model import BearingConfig, ConfigError, RotorMotion

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PRESETS = ("example1", "example2", "safety-sweep")

BEARING_KEYS = set(BearingConfig.field_names())
MOTION_KEYS = {"kind"}
RUN_KEYS = {"t_end", "n_periods", "record_stride", "snapshot_times", "snapshot_min_g"}
SWEEP_KEYS = {"eps_values", "beta_lo", "beta_hi", "decimals"}
TOP_KEYS = {"preset", "name", "type"}
SECTIONS = {"bearing": BEARING_KEYS, "motion": MOTION_KEYS | {"eps"}, "run": RUN_KEYS, "sweep": SWEEP_KEYS | {"n_periods"}}

_INT_KEYS = {"n_r", "n_theta", "refine_interval", "max_refine_level", "record_stride", "n_periods", "decimals"}
_BOOL_KEYS = {"adaptive", "snapshot_min_g"}
_STR_KEYS = {"solver", "kind", "preset", "name", "type"}


@dataclass
class ScenarioSpec:
    name: str
    config: BearingConfig
    motion: RotorMotion
    t_end: float
    n_periods: int | None = None
    record_stride: int = 1
    snapshot_times: list[float] = field(default_factory=list)
    snapshot_min_g: bool = False


@dataclass
class SweepSpec:
    name: str
    config: BearingConfig
    eps_values: list[float]
    n_periods: int = 5
    beta_lo: float = 0.0
    beta_hi: float | None = None
    decimals: int = 4

    @property
    def face_tol(self) -> float:
        return self.config.face_tol


def _check_type(path: str, key: str, value):
    if key in _BOOL_KEYS:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if key in _STR_KEYS:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    if key in ("snapshot_times", "eps_values"):
        if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{path}: expected a list of numbers")
        return [float(v) for v in value]
    if key in _INT_KEYS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number")
    return float(value)


def _flatten(doc: dict, source: str) -> dict:
    """Validate keys and flatten tables into ``{section.key or key: value}``."""
    flat = {}
    top_ok = TOP_KEYS | BEARING_KEYS | RUN_KEYS | SWEEP_KEYS | {"motion"}
    for key, value in doc.items():
        if isinstance(value, dict):
            if key not in SECTIONS:
                raise ConfigError(f"{source}: unknown table [{key}]")
            for sub, v in value.items():
                if sub not in SECTIONS[key]:
                    raise ConfigError(f"{source}: unknown key {key}.{sub}")
                name = "motion" if (key, sub) == ("motion", "kind") else sub
                flat[name] = _check_type(f"{key}.{sub}", sub, v)
        else:
            if key not in top_ok:
                raise ConfigError(f"{source}: unknown key {key}")
            flat[key] = _check_type(key, "kind" if key == "motion" else key, value)
    return flat


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r}, expected one of {PRESETS}")
    text = resources.files("sealsim").joinpath("presets", f"{name}.toml").read_text()
    return _flatten(tomllib.loads(text), f"preset {name}")


def _read(path) -> dict:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return _flatten(doc, str(path))


def resolve(values: dict, name: str = "scenario"):
    """Build a :class:`ScenarioSpec` or :class:`SweepSpec` from flat values."""
    bearing = {k: v for k, v in values.items() if k in BEARING_KEYS}
    try:
        cfg = BearingConfig(**bearing)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    name = values.get("name", name)
    is_sweep = values.get("type") == "sweep" or "eps_values" in values
    if is_sweep:
        eps = values.get("eps_values", [cfg.eps] if cfg.eps > 0 else [])
        if not eps:
            raise ConfigError("sweep.eps_values: at least one amplitude is required")
        if any(e <= 0 for e in eps) or any(b <= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("sweep.eps_values: values must be positive and strictly increasing")
        n_periods = values.get("n_periods", 5)
        if n_periods < 1:
            raise ConfigError("sweep.n_periods: must be >= 1")
        return SweepSpec(
            name, cfg, eps, n_periods, values.get("beta_lo", 0.0), values.get("beta_hi"), values.get("decimals", 4)
        )
    motion = RotorMotion(values.get("motion", "stationary"), cfg.eps)
    n_periods = values.get("n_periods")
    if "t_end" in values:
        t_end = values["t_end"]
    elif n_periods is not None:
        t_end = n_periods * motion.period
    else:
        t_end = 5 * motion.period
    if t_end <= 0:
        raise ConfigError("run.t_end: must be positive")
    snaps = sorted(values.get("snapshot_times", []))
    if any(s < 0 or s > t_end for s in snaps):
        raise ConfigError(f"run.snapshot_times: all times must lie in [0, {t_end}]")
    stride = values.get("record_stride", 1)
    if stride < 1:
        raise ConfigError("run.record_stride: must be >= 1")
    return ScenarioSpec(name, cfg, motion, t_end, n_periods, stride, snaps, values.get("snapshot_min_g", False))


def parse_config(path=None, preset: str | None = None, out_dir=None, overrides: dict | None = None):
    """Parse a config file (optionally layered on a preset) into a spec.

    Resolution order: built-in defaults, preset, file, ``overrides``. When
    ``out_dir`` is given the fully resolved values are echoed to
    ``out_dir/resolved_config.toml``.
    """
    user = _read(path) if path is not None else {}
    preset = preset or user.get("preset")
    values = load_preset(preset) if preset else {}
    values.update(user)
    if overrides:
        values.update(_flatten(overrides, "overrides"))
    values.pop("preset", None)
    default_name = preset or (Path(path).stem if path else "scenario")
    spec = resolve(values, default_name)
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        Path(out_dir, "resolved_config.toml").write_text(dump_spec(spec))
    return spec


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return str(v)


def dump_spec(spec) -> str:
    """Resolved spec as TOML text readable by :func:`parse_config`."""
    lines = [f"name = {_toml_value(spec.name)}"]
    if isinstance(spec, SweepSpec):
        lines.append('type = "sweep"')
    lines += ["", "[bearing]"]
    lines += [f"{f.name} = {_toml_value(getattr(spec.config, f.name))}" for f in fields(BearingConfig)]
    if isinstance(spec, SweepSpec):
        lines += ["", "[sweep]", f"eps_values = {_toml_value(spec.eps_values)}", f"n_periods = {spec.n_periods}"]
        lines.append(f"beta_lo = {_toml_value(spec.beta_lo)}")
        if spec.beta_hi is not None:
            lines.append(f"beta_hi = {_toml_value(spec.beta_hi)}")
        lines.append(f"decimals = {spec.decimals}")
    else:
        lines += ["", "[motion]", f"kind = {_toml_value(spec.motion.kind)}"]
        lines += ["", "[run]", f"t_end = {_toml_value(spec.t_end)}"]
        if spec.n_periods is not None:
            lines.append(f"n_periods = {spec.n_periods}")
        lines.append(f"record_stride = {spec.record_stride}")
        lines.append(f"snapshot_times = {_toml_value(spec.snapshot_times)}")
        lines.append(f"snapshot_min_g = {_toml_value(spec.snapshot_min_g)}")
    return "\n".join(lines) + "\n"
