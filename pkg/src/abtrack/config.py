"""Engine configuration: dataclasses plus a flat dotted-key JSON file format."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

from .motion import KalmanConfig


@dataclass
class CostWeights:
    start: int = 10
    # one above halt + missing so an unexplained absence halts (reversible) rather than ends
    end: int = 11
    halt: int = 4
    resume: int = 2
    missing: int = 6
    ignore_det: int = 1


@dataclass
class AnticipationConfig:
    prediction_horizon: int = 60
    warning_horizon: int = 30
    # (x, y, w, h); None means the centred lower third of the image
    caution_region: Optional[Tuple[float, float, float, float]] = None


@dataclass
class EngineConfig:
    iou_threshold: float = 0.3
    conf_threshold: float = 0.5
    low_conf_starts: bool = False
    max_halt_duration: int = 30
    fov_margin_px: float = 16.0
    image_size: Optional[Tuple[float, float]] = None
    interior_starts: bool = False
    startup_frames: int = 5
    occlusion_iou: float = 0.0
    seed: int = 0
    kalman: KalmanConfig = field(default_factory=KalmanConfig)
    cost: CostWeights = field(default_factory=CostWeights)
    anticipation: AnticipationConfig = field(default_factory=AnticipationConfig)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        for name in ("iou_threshold", "conf_threshold", "occlusion_iou"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(name, f"must lie in [0, 1], got {v}")
        if self.startup_frames < 1:
            raise ConfigError("startup_frames", "must be >= 1")
        if self.max_halt_duration < 1:
            raise ConfigError("max_halt_duration", "must be >= 1")
        if self.fov_margin_px < 0:
            raise ConfigError("fov_margin_px", "must be >= 0")
        for f in dataclasses.fields(self.cost):
            if getattr(self.cost, f.name) < 0:
                raise ConfigError(f"cost.{f.name}", "must be >= 0")
        for f in dataclasses.fields(self.kalman):
            if getattr(self.kalman, f.name) < 0:
                raise ConfigError(f"kalman.{f.name}", "must be >= 0")
        if self.anticipation.prediction_horizon < 1 or self.anticipation.warning_horizon < 1:
            raise ConfigError("anticipation", "horizons must be >= 1")

    def caution_region(self, image_size: Tuple[float, float]) -> Tuple[float, float, float, float]:
        if self.anticipation.caution_region is not None:
            return tuple(self.anticipation.caution_region)
        w, h = image_size
        return (w / 3.0, 2.0 * h / 3.0, w / 3.0, h / 3.0)


class ConfigError(ValueError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"config key {key!r}: {reason}")
        self.key = key


_NESTED = {"kalman": KalmanConfig, "cost": CostWeights, "anticipation": AnticipationConfig}

# one-line descriptions for --help and the generated reference
DESCRIPTIONS = {
    "iou_threshold": "minimum IoU between predicted track box and detection for assign/resume",
    "conf_threshold": "minimum detection confidence for assign/resume/start",
    "low_conf_starts": "allow tracks to start from detections below conf_threshold",
    "max_halt_duration": "frames a halted or coasting track survives before it is ended",
    "fov_margin_px": "width of the image border band where tracks may enter or leave",
    "image_size": "[width, height] in pixels; inferred from detections when null",
    "interior_starts": "allow enters_fov away from the image border",
    "startup_frames": "frames from the first detection during which enters_fov is allowed anywhere",
    "occlusion_iou": "IoU a hidden box must exceed with its occluder for hides_behind",
    "seed": "random seed (synthetic scenes)",
    "kalman.q_pos": "process noise variance on cx, cy, area, aspect",
    "kalman.q_vel": "process noise variance on velocities",
    "kalman.r_pos": "measurement noise variance on cx, cy",
    "kalman.r_size": "measurement noise variance on area, aspect",
    "kalman.p0": "initial variance of measured state components",
    "kalman.p0_vel": "initial variance of velocity components",
    "cost.start": "cost of starting a track",
    "cost.end": "cost of ending a track",
    "cost.halt": "cost of halting a track",
    "cost.resume": "cost of resuming a halted track",
    "cost.missing": "cost of a missing_detections event",
    "cost.ignore_det": "cost of ignoring a detection",
    "anticipation.prediction_horizon": "frames to roll hidden tracks forward",
    "anticipation.warning_horizon": "max frames ahead a reappearance triggers a warning",
    "anticipation.caution_region": "[x, y, w, h] warning region; null = centred lower third",
}


def to_flat(cfg: EngineConfig) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name in _NESTED:
            for g in dataclasses.fields(v):
                out[f"{f.name}.{g.name}"] = _plain(getattr(v, g.name))
        else:
            out[f.name] = _plain(v)
    return out


def _plain(v: Any) -> Any:
    return list(v) if isinstance(v, tuple) else v


def _coerce(key: str, default: Any, value: Any) -> Any:
    if key in ("image_size", "anticipation.caution_region"):
        if value is None:
            return None
        n = 2 if key == "image_size" else 4
        try:
            seq = tuple(float(v) for v in value)
        except (TypeError, ValueError):
            raise ConfigError(key, f"expected a list of {n} numbers") from None
        if len(seq) != n:
            raise ConfigError(key, f"expected a list of {n} numbers")
        return seq
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false"):
            return value.lower() == "true"
        raise ConfigError(key, f"expected a boolean, got {value!r}")
    try:
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {value!r}") from None


def from_flat(values: Mapping[str, Any], base: Optional[EngineConfig] = None) -> EngineConfig:
    """Build a config from dotted keys layered over ``base`` (defaults if None)."""
    flat = to_flat(base or EngineConfig())
    for key, value in values.items():
        if key not in flat:
            raise ConfigError(key, "unknown key")
        default = EngineConfig() if base is None else base
        flat[key] = _coerce(key, _lookup(default, key), value)
    top: Dict[str, Any] = {}
    nested: Dict[str, Dict[str, Any]] = {k: {} for k in _NESTED}
    for key, value in flat.items():
        if "." in key:
            head, tail = key.split(".", 1)
            nested[head][tail] = value
        else:
            top[key] = value
    if top.get("image_size") is not None:
        top["image_size"] = tuple(top["image_size"])
    if nested["anticipation"].get("caution_region") is not None:
        nested["anticipation"]["caution_region"] = tuple(nested["anticipation"]["caution_region"])
    return EngineConfig(**top, **{k: _NESTED[k](**v) for k, v in nested.items()})


def _lookup(cfg: EngineConfig, key: str) -> Any:
    if "." in key:
        head, tail = key.split(".", 1)
        return getattr(getattr(cfg, head), tail)
    return getattr(cfg, key)


def load_config(path: str, base: Optional[EngineConfig] = None) -> EngineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("<file>", "expected a JSON object of dotted keys")
    return from_flat(data, base)


def dump_config(cfg: EngineConfig) -> str:
    return json.dumps(to_flat(cfg), indent=2, sort_keys=True) + "\n"


def reference_markdown() -> str:
    """Table of every config key with its default."""
    rows = ["| key | default | meaning |", "|---|---|---|"]
    for key, value in to_flat(EngineConfig()).items():
        rows.append(f"| `{key}` | `{json.dumps(value)}` | {DESCRIPTIONS.get(key, '')} |")
    return "\n".join(rows) + "\n"
