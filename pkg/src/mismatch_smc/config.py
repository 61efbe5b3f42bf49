"""JSON configuration documents and the built-in scenario presets.

A config file is a single JSON object mirroring :class:`ScenarioConfig`. Every
key is optional; missing keys take the scenario-1 defaults, so

    {"controller": "smc", "gains": {"k": 0.1}}

is a complete document. Unknown keys are rejected with their field path.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from typing import Any, Callable, Mapping

from .controllers import ControllerGains, ControllerKind
from .errors import ConfigError
from .model import DisturbanceProfile, Segment
from .simulation import NfsConfig, ScenarioConfig

__all__ = [
    "PRESETS",
    "preset",
    "config_to_dict",
    "config_from_dict",
    "load_config",
    "dump_config",
    "apply_overrides",
]


def _scenario1() -> ScenarioConfig:
    return ScenarioConfig(name="scenario1")


def _scenario2() -> ScenarioConfig:
    # Small switching gain, zero initial state; everything else unchanged.
    return ScenarioConfig(name="scenario2", gains=ControllerGains(lam=5.0, k=0.1), x0=(0.0, 0.0))


PRESETS: dict[str, Callable[[], ScenarioConfig]] = {
    "scenario1": _scenario1,
    "scenario2": _scenario2,
}


def preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError("preset", f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None


# -- serialization ------------------------------------------------------------


def _segment_to_dict(seg: Segment) -> dict:
    out: dict[str, Any] = {"start": seg.start, "kind": seg.kind}
    if seg.kind == "step":
        out["level"] = seg.level
    elif seg.kind == "multisine":
        out["amplitude"] = seg.amplitude
        out["frequencies"] = list(seg.frequencies)
    return out


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Plain JSON-ready dict; ``config_from_dict`` inverts it exactly."""
    return {
        "name": cfg.name,
        "controller": cfg.controller.value,
        "gains": {
            "lam": cfg.gains.lam,
            "k": cfg.gains.k,
            "boundary_layer": cfg.gains.boundary_layer,
        },
        "observer_gain": list(cfg.observer_gain),
        "filter_bandwidth": cfg.filter_bandwidth,
        "nfs": {
            f.name: (list(v) if isinstance(v := getattr(cfg.nfs, f.name), tuple) else v)
            for f in dataclasses.fields(NfsConfig)
        },
        "disturbance": {"segments": [_segment_to_dict(s) for s in cfg.disturbance.segments]},
        "x0": list(cfg.x0),
        "dt": cfg.dt,
        "duration": cfg.duration,
        "integrator": cfg.integrator,
        "plant": cfg.plant,
        "settle_band": cfg.settle_band,
        "chattering_window": None if cfg.chattering_window is None else list(cfg.chattering_window),
    }


def _number(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(path, f"expected a finite number, got {v!r}")
    return v


def _integer(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    return v


def _string(v: Any, path: str) -> str:
    if not isinstance(v, str):
        raise ConfigError(path, f"expected a string, got {v!r}")
    return v


def _pair(v: Any, path: str) -> tuple[float, float]:
    if not isinstance(v, (list, tuple)) or len(v) != 2:
        raise ConfigError(path, f"expected a list of two numbers, got {v!r}")
    return _number(v[0], f"{path}[0]"), _number(v[1], f"{path}[1]")


def _mapping(v: Any, path: str, allowed) -> Mapping:
    if not isinstance(v, Mapping):
        raise ConfigError(path, f"expected an object, got {type(v).__name__}")
    for key in v:
        if key not in allowed:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(where, f"unknown key; allowed: {sorted(allowed)}")
    return v


def _nested(prefix: str, build: Callable[[], Any]) -> Any:
    # Re-raise constructor errors with the full dotted path.
    try:
        return build()
    except ConfigError as exc:
        path = exc.path
        if not path.startswith(prefix):
            path = f"{prefix}.{path}" if path else prefix
        raise ConfigError(path, exc.message) from None


def _gains_from(v: Any, base: ControllerGains) -> ControllerGains:
    m = _mapping(v, "gains", ("lam", "k", "boundary_layer"))
    lam = _number(m["lam"], "gains.lam") if "lam" in m else base.lam
    k = _number(m["k"], "gains.k") if "k" in m else base.k
    bl = base.boundary_layer
    if "boundary_layer" in m:
        bl = None if m["boundary_layer"] is None else _number(m["boundary_layer"], "gains.boundary_layer")
    return _nested("gains", lambda: ControllerGains(lam=lam, k=k, boundary_layer=bl))


def _nfs_from(v: Any, base: NfsConfig) -> NfsConfig:
    names = [f.name for f in dataclasses.fields(NfsConfig)]
    m = _mapping(v, "nfs", names)
    kw: dict[str, Any] = {}
    for key, raw in m.items():
        path = f"nfs.{key}"
        if key in ("rules1", "rules2"):
            kw[key] = _integer(raw, path)
        elif key == "center_range":
            kw[key] = _pair(raw, path)
        else:
            kw[key] = _number(raw, path)
    return dataclasses.replace(base, **kw)


def _segment_from(v: Any, path: str) -> Segment:
    m = _mapping(v, path, ("start", "kind", "level", "amplitude", "frequencies"))
    if "start" not in m:
        raise ConfigError(f"{path}.start", "missing")
    start = _number(m["start"], f"{path}.start")
    kind = _string(m.get("kind", "zero"), f"{path}.kind")
    level = _number(m.get("level", 0.0), f"{path}.level")
    amplitude = _number(m.get("amplitude", 0.0), f"{path}.amplitude")
    freqs = m.get("frequencies", [])
    if not isinstance(freqs, (list, tuple)):
        raise ConfigError(f"{path}.frequencies", "expected a list of numbers")
    freqs = tuple(_number(w, f"{path}.frequencies[{i}]") for i, w in enumerate(freqs))
    return _nested(path, lambda: Segment(start, kind, level, amplitude, freqs))


def _disturbance_from(v: Any) -> DisturbanceProfile:
    m = _mapping(v, "disturbance", ("segments",))
    segs = m.get("segments", [])
    if not isinstance(segs, (list, tuple)):
        raise ConfigError("disturbance.segments", "expected a list")
    parsed = tuple(_segment_from(s, f"disturbance.segments[{i}]") for i, s in enumerate(segs))
    return _nested("disturbance", lambda: DisturbanceProfile(parsed))


_TOP_KEYS = tuple(f.name for f in dataclasses.fields(ScenarioConfig))


def config_from_dict(doc: Mapping, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a validated config from a JSON object, filling gaps from ``base``.

    Raises:
        ConfigError: with the dotted path of the first offending entry.
    """
    base = base if base is not None else ScenarioConfig()
    m = _mapping(doc, "", _TOP_KEYS)
    kw: dict[str, Any] = {}
    if "name" in m:
        kw["name"] = _string(m["name"], "name")
    if "controller" in m:
        raw = _string(m["controller"], "controller")
        try:
            kw["controller"] = ControllerKind(raw)
        except ValueError:
            raise ConfigError("controller", f"unknown controller {raw!r}; expected one of "
                              f"{[c.value for c in ControllerKind]}") from None
    if "gains" in m:
        kw["gains"] = _gains_from(m["gains"], base.gains)
    if "observer_gain" in m:
        kw["observer_gain"] = _pair(m["observer_gain"], "observer_gain")
    if "filter_bandwidth" in m:
        kw["filter_bandwidth"] = _number(m["filter_bandwidth"], "filter_bandwidth")
    if "nfs" in m:
        kw["nfs"] = _nfs_from(m["nfs"], base.nfs)
    if "disturbance" in m:
        kw["disturbance"] = _disturbance_from(m["disturbance"])
    if "x0" in m:
        kw["x0"] = _pair(m["x0"], "x0")
    for key in ("dt", "duration", "settle_band"):
        if key in m:
            kw[key] = _number(m[key], key)
    for key in ("integrator", "plant"):
        if key in m:
            kw[key] = _string(m[key], key)
    if "chattering_window" in m:
        cw = m["chattering_window"]
        kw["chattering_window"] = None if cw is None else _pair(cw, "chattering_window")
    return dataclasses.replace(base, **kw)


def load_config(path: str | os.PathLike, base: ScenarioConfig | None = None) -> ScenarioConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {os.fspath(path)!r}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(doc, base)


def dump_config(cfg: ScenarioConfig, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def apply_overrides(cfg: ScenarioConfig, **overrides: Any) -> ScenarioConfig:
    """Apply command-line style overrides; ``None`` values are ignored.

    Accepted keys: ``controller``, ``dt``, ``duration``, ``k``, ``lam``,
    ``boundary_layer``, ``name``.
    """
    doc: dict[str, Any] = {}
    gains: dict[str, Any] = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in ("k", "lam", "boundary_layer"):
            gains[key] = value
        elif key in ("controller", "dt", "duration", "name"):
            doc[key] = value.value if isinstance(value, ControllerKind) else value
        else:
            raise ConfigError(key, "not an overridable setting")
    if gains:
        doc["gains"] = gains
    return config_from_dict(doc, cfg)
