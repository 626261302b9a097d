"""JSON configuration loading with exhaustive schema errors and shipped presets."""

from __future__ import annotations

import json
import math
import re
from importlib import resources
from pathlib import Path

from .dynamics import SystemParams
from .grover import OracleSetting, Source
from .schedule import PhysicalBounds, ScheduleConfig, ScheduleError, bounds_errors, config_errors

DEFAULT_G = 2.0 * math.pi * 25e3  # rad/s

SYSTEM_KEYS = ("g", "delta", "Omega", "Gamma", "n_th", "fock_dim", "omega0")
SCHEDULE_KEYS = ("n", "orientation", "v_mps", "t_s", "L_m")
GROVER_KEYS = ("alpha", "beta", "source")


class ConfigError(ValueError):
    """Raised with every schema problem found, one per line."""

    def __init__(self, path, errors):
        self.errors = list(errors)
        super().__init__(f"{path}: " + "; ".join(self.errors))


def preset_path(name: str) -> Path:
    stem = name[:-5] if name.endswith(".json") else name
    return Path(str(resources.files("oneway_cqed") / "presets" / f"{stem}.json"))


def resolve(path: str | Path) -> Path:
    """A real file wins; otherwise the name is looked up among the presets."""
    p = Path(path)
    if p.exists():
        return p
    candidate = preset_path(p.name)
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"no such file or preset: {path}")


def read_json(path: str | Path) -> dict:
    p = resolve(path)
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(p, [f"invalid JSON: {exc}"]) from None
    if not isinstance(data, dict):
        raise ConfigError(p, ["top level must be a JSON object"])
    return data


_ANGLE = re.compile(r"^\s*(-?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")


def parse_angle(value) -> float:
    """Numbers, ``"pi"``, ``"pi/2"``, ``"3pi/4"``, ``"-pi"``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value).strip().lower()
    try:
        return float(text)
    except ValueError:
        pass
    m = _ANGLE.match(text)
    if not m:
        raise ValueError(f"cannot parse angle {value!r}")
    coef = m.group(1)
    c = -1.0 if coef == "-" else (float(coef) if coef not in ("", None) else 1.0)
    denom = float(m.group(2)) if m.group(2) else 1.0
    return c * math.pi / denom


def _number(data, key, errors, positive=False, non_negative=False, integer=False):
    if key not in data:
        return None
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{key}: expected a number, got {value!r}")
        return None
    if integer and int(value) != value:
        errors.append(f"{key}: expected an integer, got {value!r}")
        return None
    if positive and not value > 0:
        errors.append(f"{key}: must be positive, got {value}")
        return None
    if non_negative and value < 0:
        errors.append(f"{key}: must be non-negative, got {value}")
        return None
    return int(value) if integer else float(value)


def system_params_from_dict(data: dict, where="params") -> SystemParams:
    """Defaults: ``g = 2 pi x 25 kHz``, ``delta = g``, ``Omega = 5 delta``, ``Gamma = g/100``, ``n_th = 1``."""
    errors = [f"unknown key {k!r}" for k in sorted(set(data) - set(SYSTEM_KEYS))]
    g = _number(data, "g", errors, positive=True)
    delta = _number(data, "delta", errors, positive=True)
    omega = _number(data, "Omega", errors, non_negative=True)
    gamma = _number(data, "Gamma", errors, non_negative=True)
    n_th = _number(data, "n_th", errors, non_negative=True)
    fock = _number(data, "fock_dim", errors, positive=True, integer=True) if data.get("fock_dim") is not None else None
    omega0 = _number(data, "omega0", errors)
    if errors:
        raise ConfigError(where, errors)
    g = DEFAULT_G if g is None else g
    delta = g if delta is None else delta
    try:
        return SystemParams(
            g=g,
            delta=delta,
            Omega=5.0 * delta if omega is None else omega,
            Gamma=g / 100.0 if gamma is None else gamma,
            n_th=1.0 if n_th is None else n_th,
            fock_dim=fock,
            omega0=0.0 if omega0 is None else omega0,
        )
    except ValueError as exc:
        raise ConfigError(where, [str(exc)]) from None


def schedule_from_dict(data: dict, where="config") -> ScheduleConfig:
    errors = [f"unknown key {k!r}" for k in sorted(set(data) - set(SCHEDULE_KEYS))]
    for key in ("n", "v_mps", "t_s", "L_m"):
        if key not in data:
            errors.append(f"missing key {key!r}")
    n = _number(data, "n", errors, positive=True, integer=True)
    for key in ("v_mps", "t_s", "L_m"):
        if key in data:
            value = data[key]
            if not isinstance(value, list):
                errors.append(f"{key}: expected a list, got {value!r}")
                continue
            for idx, x in enumerate(value):
                if isinstance(x, bool) or not isinstance(x, (int, float)):
                    errors.append(f"{key}[{idx}]: expected a number, got {x!r}")
    if "orientation" in data and data["orientation"] not in ("paper_eq10", "table1_reversed"):
        errors.append(f"orientation: unknown value {data['orientation']!r}")
    if not errors and n is not None:
        errors.extend(config_errors(n, data["v_mps"], data["t_s"], data["L_m"]))
    if errors:
        raise ConfigError(where, errors)
    try:
        return ScheduleConfig.from_dict(data)
    except ScheduleError as exc:
        raise ConfigError(where, [str(exc)]) from None


def bounds_from_dict(data: dict, where="bounds") -> PhysicalBounds:
    errors = bounds_errors(data)
    if errors:
        raise ConfigError(where, errors)
    return PhysicalBounds(**data)


def grover_from_dict(data: dict, where="grover") -> tuple[OracleSetting, Source]:
    errors = [f"unknown key {k!r}" for k in sorted(set(data) - set(GROVER_KEYS))]
    angles = {}
    for key in ("alpha", "beta"):
        if key not in data:
            errors.append(f"missing key {key!r}")
            continue
        try:
            angles[key] = parse_angle(data[key])
        except ValueError as exc:
            errors.append(f"{key}: {exc}")
    source = data.get("source", Source.COLLISION_GENERATED.value)
    try:
        source = Source(source)
    except ValueError:
        errors.append(f"source: unknown value {source!r}")
    if errors:
        raise ConfigError(where, errors)
    return OracleSetting(angles["alpha"], angles["beta"]), source


def load_params(path: str | Path, kind: str | None = None):
    """Load a system, schedule, bounds or Grover file; ``kind`` is inferred from keys when omitted."""
    data = read_json(path)
    if kind is None:
        keys = set(data)
        if keys & {"v_mps", "t_s", "L_m"}:
            kind = "schedule"
        elif keys & {"alpha", "beta"}:
            kind = "grover"
        elif keys & set(PhysicalBounds.__dataclass_fields__):
            kind = "bounds"
        elif keys & set(SYSTEM_KEYS) or not keys:
            kind = "system"
        else:
            raise ConfigError(path, [f"cannot tell the file kind from keys {sorted(keys)}"])
    loaders = {
        "system": system_params_from_dict,
        "schedule": schedule_from_dict,
        "bounds": bounds_from_dict,
        "grover": grover_from_dict,
    }
    if kind not in loaders:
        raise ValueError(f"unknown kind {kind!r}")
    return loaders[kind](data, str(path))
