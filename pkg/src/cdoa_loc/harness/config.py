"""Experiment configuration: JSON file sections, defaults and dotted-key overrides.

Precedence is command-line flags > config file > built-in defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..baselines import BaselineConfig, PfEkfConfig
from ..channel import ChannelModel
from ..core import NodeLayout, Workspace
from .methods import Hyperparams, method_names

PRECEDENCE = "flags > config file > defaults"


class ConfigError(ValueError):
    pass


@dataclass
class WorkspaceConfig:
    x_min: float = 0.0
    x_max: float = 6.0
    y_min: float = 0.0
    y_max: float = 6.0

    def build(self) -> Workspace:
        return Workspace(self.x_min, self.x_max, self.y_min, self.y_max)


@dataclass
class LayoutConfig:
    nodes: list | None = None  # [[id, x, y], ...]; None puts four nodes on the workspace corners
    sensing_range: float = 40.0

    def build(self, ws: Workspace) -> NodeLayout:
        if self.nodes is None:
            return NodeLayout.corners(ws, self.sensing_range)
        try:
            return NodeLayout(tuple((str(i), (float(x), float(y))) for i, x, y in self.nodes), self.sensing_range)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"layout.nodes must be [[id, x, y], ...]: {exc}") from None


@dataclass
class ChannelConfig:
    ref_rssi: float = -40.0
    path_loss_eta: float = 3.0
    noise_levels: list = field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])  # dB std, one sweep point each
    min_distance: float = 0.1

    def build(self, noise: float) -> ChannelModel:
        return ChannelModel(self.ref_rssi, self.path_loss_eta, float(noise), self.min_distance)


@dataclass
class TrajectoryConfig:
    kinds: list = field(default_factory=lambda: ["boundary", "cross", "diagonal"])
    step: float = 0.25
    lane_spacing: float = 1.0


@dataclass
class ExperimentConfig:
    workspace: WorkspaceConfig = field(default_factory=WorkspaceConfig)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    method: Any = "all"  # name, list of names, or "all"
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    trajectory: TrajectoryConfig = field(default_factory=TrajectoryConfig)
    trials: int = 100
    seed: int = 0

    def methods(self) -> list[str]:
        names = [self.method] if isinstance(self.method, str) else list(self.method)
        if "all" in names:
            return method_names()
        unknown = [n for n in names if n not in method_names()]
        if unknown:
            raise ConfigError(f"unknown method(s) {unknown}; registered: {method_names()}")
        return names

    def to_dict(self) -> dict:
        return _to_plain(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.init}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


_NESTED = {
    ("workspace",): WorkspaceConfig, ("layout",): LayoutConfig, ("channel",): ChannelConfig,
    ("trajectory",): TrajectoryConfig, ("hyperparams",): Hyperparams,
    ("hyperparams", "baselines"): BaselineConfig, ("hyperparams", "baselines", "pfekf"): PfEkfConfig,
}


def _build(cls, data: dict, path: tuple[str, ...]):
    if not isinstance(data, dict):
        raise ConfigError(f"section {'.'.join(path) or '<root>'} must be an object")
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in section {'.'.join(path) or '<root>'}")
    kwargs = {}
    for k, v in data.items():
        sub = _NESTED.get(path + (k,))
        kwargs[k] = _build(sub, v, path + (k,)) if sub is not None else v
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section {'.'.join(path) or '<root>'}: {exc}") from None


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, ())


def load_config(path: str | Path | None) -> dict:
    """Raw dict from a JSON file (empty for None). Raises OSError / ConfigError."""
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(data: dict, assignment: str) -> dict:
    """Set ``a.b.c=value`` in a raw config dict; the key path must exist in the schema."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} is not key=value")
    key, value = assignment.split("=", 1)
    parts = tuple(p for p in key.strip().split(".") if p)
    if not parts:
        raise ConfigError(f"empty key in override {assignment!r}")
    cls = ExperimentConfig
    for i, p in enumerate(parts):
        names = {f.name for f in dataclasses.fields(cls) if f.init}
        if p not in names:
            raise ConfigError(f"unknown config key {'.'.join(parts[:i + 1])!r}")
        nxt = _NESTED.get(parts[:i + 1])
        if i < len(parts) - 1:
            if nxt is None:
                raise ConfigError(f"{'.'.join(parts[:i + 1])!r} is not a section")
            cls = nxt
    node = data
    for p in parts[:-1]:
        node = node.setdefault(p, {})
    node[parts[-1]] = _parse_value(value)
    return data


def resolve_config(path: str | Path | None = None, overrides: list[str] | None = None,
                   flags: dict | None = None) -> ExperimentConfig:
    """Defaults, then the file, then key=value overrides, then explicit flag values."""
    data = load_config(path)
    for o in overrides or []:
        apply_override(data, o)
    for k, v in (flags or {}).items():
        if v is not None:
            apply_override(data, f"{k}={json.dumps(v)}")
    return config_from_dict(data)
