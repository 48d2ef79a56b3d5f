"""
Run configuration: JSON parameter trees, schema validation, overrides and
conversion into domain objects.

Angles in config files carry a `_deg` suffix and are converted to radians
here, and only here.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Optional

from common.errors import EXIT_IO, RipError, ValidationError
from design.synthesis import DominantSpec, GainVector, dominant_pole_design, place_poles, poles_from_pairs
from lti.disturbance import DisturbanceProfile
from plant.linear import reduced_dynamics, small_angle_matrices
from plant.models import FullState, PhysicalParams, ReducedDynamics
from plant.presets import DEFAULT_PHYSICAL, ENCODER_QUANTUM, IDENTIFIED_DYNAMICS
from sim.controller import DERIVATIVE_MODES, REFERENCE_KINDS, ControllerRuntimeConfig, ReferenceSignal
from sim.simulator import PLANT_ALIASES, Scenario
from sim.trace import config_hash

logger = logging.getLogger(__name__)


class ConfigIOError(RipError, OSError):
    """Config file missing or unreadable."""

    exit_code = EXIT_IO


@dataclass(frozen=True)
class Field:
    kind: type | tuple
    choices: Optional[tuple] = None
    check: Optional[Callable[[Any], bool]] = None
    rule: str = ""


NUMBER = (int, float)
POSITIVE = Field(NUMBER, check=lambda v: v > 0, rule="> 0")
NON_NEGATIVE = Field(NUMBER, check=lambda v: v >= 0, rule=">= 0")
ANY_NUMBER = Field(NUMBER)
FLAG = Field(bool)
PATH = Field(str)
LIST = Field(list)

SCHEMA: dict[str, Any] = {
    "name": Field(str),
    "plant": {
        "mode": Field(str, choices=tuple(PLANT_ALIASES)),
        "source": Field(str, choices=("identified", "physical")),
        "linear_only": FLAG,
        "params": {
            "M1": POSITIVE, "M2": POSITIVE, "L1": POSITIVE, "L2": POSITIVE,
            "J1": POSITIVE, "J2": POSITIVE, "B1": NON_NEGATIVE, "B2": NON_NEGATIVE,
            "g": POSITIVE, "eta_g": POSITIVE, "eta_m": POSITIVE, "K_g": POSITIVE,
            "K_t": POSITIVE, "K_m": POSITIVE, "R_m": POSITIVE, "arm_com_ratio": POSITIVE,
        },
    },
    "controller": {
        "gains": LIST,
        "poles": LIST,
        "dominant": {
            "percent_overshoot": POSITIVE,
            "settling_time": POSITIVE,
            "zeta": POSITIVE,
            "sigma": POSITIVE,
            "far_pole_multipliers": LIST,
        },
    },
    "runtime": {
        "sample_period": POSITIVE,
        "v_sat": POSITIVE,
        "filter_cutoff": POSITIVE,
        "antiwindup_reset": POSITIVE,
        "catch_angle_deg": POSITIVE,
        "theta_limit_deg": POSITIVE,
        "quantization": Field((int, float, str, type(None))),
        "derivative_mode": Field(str, choices=DERIVATIVE_MODES),
    },
    "reference": {
        "kind": Field(str, choices=REFERENCE_KINDS),
        "amplitude_deg": ANY_NUMBER,
        "period": NON_NEGATIVE,
        "start_time": NON_NEGATIVE,
        "offset_deg": ANY_NUMBER,
    },
    "disturbance": {"steps": LIST},
    "initial": {
        "theta_deg": ANY_NUMBER,
        "alpha_deg": ANY_NUMBER,
        "theta_dot": ANY_NUMBER,
        "alpha_dot": ANY_NUMBER,
    },
    "simulation": {"duration": POSITIVE, "dt": POSITIVE},
    "analysis": {
        "z0_norm": NON_NEGATIVE,
        "sign_safe": FLAG,
        "window": POSITIVE,
        "trace": PATH,
    },
    "lti": {
        "a": LIST,
        "poles": LIST,
        "x_d": ANY_NUMBER,
        "integral": FLAG,
        "disturbance": LIST,
        "duration": POSITIVE,
        "dt": POSITIVE,
        "u_max": POSITIVE,
    },
    "batch": {"scenarios": LIST},
}


def validate_tree(tree: Any, schema: dict = SCHEMA, path: str = "") -> None:
    """Reject unknown keys, wrong types and out-of-range values."""
    if not isinstance(tree, dict):
        raise ValidationError(f"{path or 'config'} must be an object, got {type(tree).__name__}")
    for key, value in tree.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ValidationError(f"Unknown config key: {where}")
        spec = schema[key]
        if isinstance(spec, dict):
            validate_tree(value, spec, where)
            continue
        # bool is an int subclass; only FLAG fields take booleans
        if isinstance(value, bool) and spec.kind is not bool:
            raise ValidationError(f"{where} must not be a boolean")
        if not isinstance(value, spec.kind):
            raise ValidationError(f"{where} has the wrong type ({type(value).__name__})")
        if isinstance(value, float) and not math.isfinite(value):
            raise ValidationError(f"{where} must be finite")
        if spec.choices is not None and value not in spec.choices:
            raise ValidationError(f"{where} must be one of {list(spec.choices)}, got {value!r}")
        if spec.check is not None and not spec.check(value):
            raise ValidationError(f"{where} must be {spec.rule}, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    """A validated parameter tree plus where it came from."""

    tree: dict
    source: Optional[Path] = None
    overrides: tuple[str, ...] = field(default=())

    def section(self, name: str, required: bool = False) -> dict:
        value = self.tree.get(name)
        if value is None:
            if required:
                raise ValidationError(f"Config section {name!r} is required for this command")
            return {}
        return value

    def has(self, name: str) -> bool:
        return name in self.tree

    def dumps(self) -> str:
        return json.dumps(self.tree, indent=2, sort_keys=True)

    @property
    def hash(self) -> str:
        return config_hash(self.tree)


def parse_override(text: str) -> tuple[list[str], Any]:
    """`a.b.c=value`; the value is JSON when it parses, else a plain string."""
    if "=" not in text:
        raise ValidationError(f"Override must look like key.path=value, got {text!r}")
    key, raw = text.split("=", 1)
    parts = [p for p in key.strip().split(".") if p]
    if not parts:
        raise ValidationError(f"Override has an empty key: {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return parts, value


def apply_overrides(tree: dict, overrides: Iterable[str]) -> dict:
    result = copy.deepcopy(tree)
    for text in overrides:
        parts, value = parse_override(text)
        node = result
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ValidationError(f"Override {text!r} descends into non-object {part!r}")
            node = child
        node[parts[-1]] = value
    return result


def parse_config(tree: dict, overrides: Iterable[str] = (), source: Optional[Path] = None) -> RunConfig:
    overrides = tuple(overrides)
    merged = apply_overrides(tree, overrides)
    validate_tree(merged)
    return RunConfig(tree=merged, source=source, overrides=overrides)


def load_config(path: Optional[Path | str], overrides: Iterable[str] = ()) -> RunConfig:
    """Read a JSON config (or start from an empty tree) and apply overrides."""
    if path is None:
        return parse_config({}, overrides)
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            tree = json.load(f)
    except FileNotFoundError as e:
        raise ConfigIOError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ValidationError(f"Config {path} is not valid JSON: {e}") from e
    except OSError as e:
        raise ConfigIOError(f"Cannot read config {path}: {e}") from e
    logger.info("Loaded config %s", path)
    return parse_config(tree, overrides, source=path)


def loads_config(text: str) -> RunConfig:
    return parse_config(json.loads(text))


# -- builders ---------------------------------------------------------------


def build_params(cfg: RunConfig) -> PhysicalParams:
    values = DEFAULT_PHYSICAL.as_dict()
    values.update(cfg.section("plant").get("params", {}))
    return PhysicalParams(**{k: float(v) for k, v in values.items()})


def plant_source(cfg: RunConfig) -> str:
    return cfg.section("plant").get("source", "identified")


def build_dynamics(cfg: RunConfig) -> ReducedDynamics:
    if plant_source(cfg) == "identified":
        r = IDENTIFIED_DYNAMICS
    else:
        p = build_params(cfg)
        r = reduced_dynamics(small_angle_matrices(p), p)
    if cfg.section("plant").get("linear_only", False):
        r = r.linear_only()
    return r


def build_poles(cfg: RunConfig):
    """Requested pole set from explicit poles or a dominant-pole spec."""
    ctrl = cfg.section("controller")
    if "poles" in ctrl:
        return poles_from_pairs(ctrl["poles"])
    if "dominant" in ctrl:
        return dominant_pole_design(build_dominant(ctrl["dominant"]))
    raise ValidationError("controller needs 'poles' or 'dominant' to place poles")


def build_dominant(section: dict) -> DominantSpec:
    multipliers = tuple(section.get("far_pole_multipliers", (5.0, 6.0, 7.5)))
    if "percent_overshoot" in section:
        if "settling_time" in section:
            return DominantSpec.from_overshoot(section["percent_overshoot"], section["settling_time"], multipliers)
        if "sigma" not in section:
            raise ValidationError("dominant needs settling_time or sigma along with percent_overshoot")
        return DominantSpec.from_overshoot(section["percent_overshoot"], 4.0 / section["sigma"], multipliers)
    if "zeta" in section and "sigma" in section:
        return DominantSpec.from_real_part(section["zeta"], section["sigma"], multipliers)
    raise ValidationError("dominant needs percent_overshoot or zeta, with settling_time or sigma")


def build_gains(cfg: RunConfig, r: ReducedDynamics) -> GainVector:
    ctrl = cfg.section("controller", required=True)
    if "gains" in ctrl:
        return GainVector.from_array(ctrl["gains"])
    return place_poles(r, build_poles(cfg))


def build_runtime(cfg: RunConfig) -> ControllerRuntimeConfig:
    section = cfg.section("runtime")
    defaults = ControllerRuntimeConfig()
    quantization = section.get("quantization")
    if isinstance(quantization, str):
        if quantization != "encoder":
            raise ValidationError(f"runtime.quantization must be a number, null or 'encoder', got {quantization!r}")
        quantization = ENCODER_QUANTUM
    return ControllerRuntimeConfig(
        sample_period=float(section.get("sample_period", defaults.sample_period)),
        v_sat=float(section.get("v_sat", defaults.v_sat)),
        filter_cutoff=float(section.get("filter_cutoff", defaults.filter_cutoff)),
        antiwindup_reset=float(section.get("antiwindup_reset", defaults.antiwindup_reset)),
        catch_angle=_rad(section, "catch_angle_deg", defaults.catch_angle),
        theta_limit=_rad(section, "theta_limit_deg", defaults.theta_limit),
        quantization=None if quantization is None else float(quantization),
        derivative_mode=section.get("derivative_mode", defaults.derivative_mode),
    )


def build_reference(cfg: RunConfig) -> ReferenceSignal:
    section = cfg.section("reference")
    return ReferenceSignal(
        kind=section.get("kind", "constant"),
        amplitude=_rad(section, "amplitude_deg", 0.0),
        period=float(section.get("period", 0.0)),
        start_time=float(section.get("start_time", 0.0)),
        offset=_rad(section, "offset_deg", 0.0),
    )


def build_disturbance(steps: list) -> DisturbanceProfile:
    try:
        return DisturbanceProfile.from_pairs(steps)
    except ValidationError:
        raise
    except (TypeError, ValueError, IndexError, KeyError) as e:
        raise ValidationError(f"Disturbance steps must be [time, amplitude] pairs: {e}") from e


def build_initial(cfg: RunConfig) -> FullState:
    section = cfg.section("initial")
    return FullState(
        theta=_rad(section, "theta_deg", 0.0),
        alpha=_rad(section, "alpha_deg", 0.0),
        theta_dot=float(section.get("theta_dot", 0.0)),
        alpha_dot=float(section.get("alpha_dot", 0.0)),
    )


def build_scenario(cfg: RunConfig) -> Scenario:
    plant = cfg.section("plant")
    mode = plant.get("mode", "reduced")
    sim = cfg.section("simulation", required=True)
    r = build_dynamics(cfg)
    params = build_params(cfg) if plant_source(cfg) == "physical" or PLANT_ALIASES[mode] == "full" else None
    runtime = build_runtime(cfg)
    return Scenario(
        gains=build_gains(cfg, r),
        plant_mode=mode,
        params=params,
        dynamics=r,
        runtime=runtime,
        reference=build_reference(cfg),
        disturbance=build_disturbance(cfg.section("disturbance").get("steps", [])),
        initial=build_initial(cfg),
        duration=float(sim["duration"]) if "duration" in sim else _missing("simulation.duration"),
        dt=float(sim.get("dt", runtime.sample_period)),
        config_hash=cfg.hash,
    )


def _rad(section: dict, key: str, default: float) -> float:
    return math.radians(section[key]) if key in section else default


def _missing(key: str):
    raise ValidationError(f"Missing required config value {key}")
