"""Experiment configuration (YAML or JSON)."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


KERNELS = ("bidisc", "moment:gaussian", "moment:discrete", "tabulated")


@dataclass
class ExperimentConfig:
    """Parsed experiment settings.

    ``points`` is either ``{"explicit": [[...], ...]}`` (real chart
    coordinates) or ``{"random": {"count": n, "radius": r}}``; ``radius`` is
    a disc radius for the bidisc and a box half-width for the line models.
    """

    kernel: str = "bidisc"
    kernel_params: dict = field(default_factory=dict)
    points: dict = field(default_factory=lambda: {"random": {"count": 10}})
    frame: list | None = None
    times: list = field(default_factory=lambda: [0.1, 0.5, 1.0])
    tolerances: dict = field(default_factory=dict)
    corrupt: float = 0.0
    seed: int = 0
    tol_scale: float = 1.0
    report: str | None = None
    csv: str | None = None

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default)) * self.tol_scale

    def as_dict(self) -> dict:
        return {
            "kernel": self.kernel, "kernel_params": self.kernel_params, "points": self.points,
            "frame": self.frame, "times": self.times, "tolerances": self.tolerances,
            "corrupt": self.corrupt, "seed": self.seed, "tol_scale": self.tol_scale,
        }


def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def parse_config(data: dict | None, **overrides) -> ExperimentConfig:
    data = dict(data or {})
    _require(isinstance(data, dict), "configuration must be a mapping")
    kern = data.pop("kernel", "bidisc")
    if isinstance(kern, dict):
        name = kern.get("name", "bidisc")
        params = dict(kern.get("params", {}))
        if "measure" in kern:
            params.update(kern["measure"])
    else:
        name, params = str(kern), {}
    if name in ("moment", "measure"):
        kind = params.pop("kind", "gaussian")
        name = f"moment:{kind}"
    _require(name in KERNELS, f"unknown kernel {name!r}; choose from {KERNELS}")
    if name == "moment:discrete":
        params.pop("kind", None)
        _require("atoms" in params, "discrete measure needs 'atoms'")
    if name == "moment:gaussian":
        params.pop("kind", None)
        _require(not params, "gaussian measure takes no parameters")
    if name == "tabulated":
        _require("path" in params, "tabulated kernel needs 'path'")

    cfg = ExperimentConfig(kernel=name, kernel_params=params)
    pts = data.pop("points", None)
    if pts is not None:
        _require(isinstance(pts, dict) and len(pts) == 1 and next(iter(pts)) in ("explicit", "random"),
                 "points must be {explicit: [...]} or {random: {...}}")
        if "random" in pts:
            r = pts["random"] or {}
            _require(int(r.get("count", 10)) >= 1, "random point count must be positive")
        else:
            _require(len(pts["explicit"]) >= 1, "explicit point list is empty")
        cfg.points = pts
    if "frame" in data:
        cfg.frame = data.pop("frame")
    if "times" in data:
        cfg.times = [float(t) for t in data.pop("times")]
    if "flow" in data:
        flow = data.pop("flow") or {}
        if "times" in flow:
            cfg.times = [float(t) for t in flow["times"]]
    tol = data.pop("tolerances", {}) or {}
    _require(isinstance(tol, dict), "tolerances must be a mapping")
    for k, v in tol.items():
        _require(isinstance(v, (int, float)) and v > 0, f"tolerance {k!r} must be positive")
    cfg.tolerances = dict(tol)
    cfg.corrupt = float(data.pop("corrupt", 0.0))
    cfg.seed = int(data.pop("seed", 0))
    cfg.tol_scale = float(data.pop("tol_scale", 1.0))
    cfg.report = data.pop("report", None)
    cfg.csv = data.pop("csv", None)
    _require(not data, f"unknown configuration keys: {sorted(data)}")
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    _require(cfg.tol_scale > 0, "tol_scale must be positive")
    return cfg


def load_config(path: str | Path | None, **overrides) -> ExperimentConfig:
    if path is None:
        return parse_config({}, **overrides)
    try:
        text = Path(path).read_text()
        data = yaml.safe_load(text)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(data, **overrides)
