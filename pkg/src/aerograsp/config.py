"""
Flat key-value run configuration.

A config file is a YAML mapping of flat keys, for example::

    scenario: scenario1
    controller: proposed
    dt: 0.001
    wind_gust: 0.05
    gripper.pretension: 2.37
    controller.nu: [2.0, 5.0, 5.0]
    plant.payload_mass: 0.0

Keys without a prefix are scenario keys (see ``SCENARIO1_DEFAULTS`` and
``SCENARIO2_DEFAULTS``) or one of the run keys below. ``--set key=value``
overrides use the same names, with values parsed as YAML scalars or lists.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence

import yaml

from .controller import BaselineSmcConfig, ControllerConfig
from .dynamics import UamParams
from .simkernel import TRIM_MODES
from .trajectory import SCENARIO1_DEFAULTS, SCENARIO2_DEFAULTS, ScenarioSpec, build_scenario

RUN_KEYS = {
    "scenario": "scenario1",
    "controller": "proposed",
    "case": 1,
    "dt": 1e-3,
    "seed": None,
    "trim": "nominal_gravity",
    "baseline.preset": "default",
}
PREFIXES = ("controller.", "baseline.", "plant.", "gripper.")


class ConfigError(ValueError):
    pass


def parse_override(item: str):
    key, sep, raw = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"override {item!r} is not of the form key=value")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value of {key!r}: {exc}") from exc
    return key.strip(), value


def load_config(path=None, overrides: Sequence[str] = ()) -> Dict[str, Any]:
    """Read a flat config file (optional) and apply ``key=value`` overrides."""
    cfg: Dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {path} must be a mapping of flat keys")
        for key, value in loaded.items():
            if isinstance(value, dict):
                raise ConfigError(f"config key {key!r}: nested sections are not supported")
        cfg.update(loaded)
    for item in overrides:
        key, value = parse_override(item)
        cfg[key] = value
    return cfg


def _tuples(value):
    if isinstance(value, list):
        return tuple(_tuples(v) for v in value)
    return value


def _section(cfg: Mapping[str, Any], prefix: str, cls) -> Dict[str, Any]:
    names = {f.name for f in fields(cls)}
    out = {}
    for key, value in cfg.items():
        if key.startswith(prefix):
            name = key[len(prefix):]
            if name not in names and not (prefix == "baseline." and name == "preset"):
                raise ConfigError(f"unknown key {key!r}")
            if name != "preset":
                out[name] = _tuples(value)
    return out


@dataclass
class RunSetup:
    """Everything needed for one simulation run, resolved from a flat config."""

    scenario: str
    controller: str
    case: int
    dt: float
    trim: str
    spec: ScenarioSpec
    params: UamParams
    controller_cfg: ControllerConfig
    baseline_cfg: BaselineSmcConfig
    raw: Dict[str, Any] = field(default_factory=dict)


def resolve(cfg: Mapping[str, Any]) -> RunSetup:
    """Turn a flat config into scenario, plant and controller objects."""
    run = dict(RUN_KEYS)
    scenario_keys = set(SCENARIO1_DEFAULTS) | set(SCENARIO2_DEFAULTS) | {
        "payload_mass", "d_bar", "wind_mean", "wind_gust", "wind_torque", "wind_seed",
        "impact_peak", "impact_reference_speed"}
    scen_cfg: Dict[str, Any] = {}
    for key, value in cfg.items():
        if key in RUN_KEYS:
            run[key] = value
        elif key.startswith(PREFIXES):
            if key.startswith("gripper."):
                scen_cfg[key] = _tuples(value)
        elif key in scenario_keys:
            scen_cfg[key] = _tuples(value)
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if run["controller"] not in ("proposed", "baseline"):
        raise ConfigError("controller must be 'proposed' or 'baseline'")
    if run["trim"] not in TRIM_MODES:
        raise ConfigError(f"trim must be one of {TRIM_MODES}")
    try:
        dt = float(run["dt"])
        case = int(run["case"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad dt/case value: {exc}") from exc
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if run["seed"] is not None:
        scen_cfg["wind_seed"] = int(run["seed"])
    # scenario-specific keys of the other scenario are ignored
    own = SCENARIO1_DEFAULTS if run["scenario"] == "scenario1" else SCENARIO2_DEFAULTS
    other = (set(SCENARIO1_DEFAULTS) | set(SCENARIO2_DEFAULTS)) - set(own)
    scen_cfg = {k: v for k, v in scen_cfg.items() if k not in other}
    try:
        params = UamParams(**_section(cfg, "plant.", UamParams))
        controller_cfg = ControllerConfig(**_section(cfg, "controller.", ControllerConfig))
        base_kw = _section(cfg, "baseline.", BaselineSmcConfig)
        preset = run["baseline.preset"]
        if preset == "mistuned":
            base = BaselineSmcConfig.mistuned()
            base_kw = {**{f.name: getattr(base, f.name) for f in fields(base)}, **base_kw}
        elif preset != "default":
            raise ConfigError("baseline.preset must be 'default' or 'mistuned'")
        baseline_cfg = BaselineSmcConfig(**base_kw)
        spec = build_scenario(run["scenario"], scen_cfg, case, params)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    return RunSetup(run["scenario"], run["controller"], case, dt, run["trim"], spec, params,
                    controller_cfg, baseline_cfg, dict(cfg))
