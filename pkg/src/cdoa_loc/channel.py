"""Log-distance path-loss channel with additive Gaussian noise.

Also emulates the node-side collaboration window: every node records
``window_len`` noisy readings of the robot's access point against the same
robot position and the window mean is shared as one snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .core import NodeLayout, Position


@dataclass(frozen=True)
class ChannelModel:
    ref_rssi: float = -40.0     # A, dBm at 1 m
    path_loss_eta: float = 3.0  # eta
    noise_std: float = 0.0      # dB, zero-mean Gaussian
    min_distance: float = 0.1   # m, clamp floor for log10(d)

    def __post_init__(self) -> None:
        if not 2.0 <= self.path_loss_eta <= 6.0:
            raise ValueError(f"path_loss_eta must lie in [2, 6], got {self.path_loss_eta}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.min_distance <= 0:
            raise ValueError("min_distance must be > 0")

    def mean_rssi(self, d) -> np.ndarray | float:
        """Noiseless RSSI at distance(s) ``d``."""
        d = np.maximum(d, self.min_distance)
        return self.ref_rssi - 10.0 * self.path_loss_eta * np.log10(d)

    def field(self, points: np.ndarray, layout: NodeLayout) -> np.ndarray:
        """Noiseless RSSI, shape (n_points, n_nodes), for robot positions ``points``."""
        pts = np.atleast_2d(points)
        nodes = layout.positions
        d = np.hypot(pts[:, None, 0] - nodes[None, :, 0], pts[:, None, 1] - nodes[None, :, 1])
        return self.mean_rssi(d)


@dataclass(frozen=True)
class RssiSnapshot:
    """One synchronised window of averaged readings, aligned with a layout's node order."""

    timestamp: float
    readings: tuple[float, ...]
    node_ids: tuple[str, ...]
    window_len: int = 1

    def __post_init__(self) -> None:
        if self.window_len < 1:
            raise ValueError("window_len must be >= 1")
        if len(self.readings) != len(self.node_ids):
            raise ValueError("one reading per node is required")
        if not all(math.isfinite(r) for r in self.readings):
            raise ValueError("readings must be finite")

    @classmethod
    def from_mapping(cls, timestamp: float, readings: Mapping[str, float], layout: NodeLayout,
                     window_len: int = 1) -> "RssiSnapshot":
        missing = [i for i in layout.ids if i not in readings]
        if missing:
            raise ValueError(f"snapshot is missing nodes {missing}")
        return cls(float(timestamp), tuple(float(readings[i]) for i in layout.ids),
                   tuple(layout.ids), window_len)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.node_ids, self.readings))

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.readings, dtype=float)


def rssi_at(model: ChannelModel, tx: Position, rx: Position, rng: np.random.Generator) -> float:
    d = np.hypot(rx.x - tx.x, rx.y - tx.y)
    return float(model.mean_rssi(d) + rng.normal(0.0, model.noise_std))


def distance_from_rssi(model: ChannelModel, rssi, d0: float = 1.0):
    """Invert the noiseless path-loss law: d0 * 10**((A - rssi) / (10 eta))."""
    return d0 * np.power(10.0, (model.ref_rssi - np.asarray(rssi, dtype=float)) / (10.0 * model.path_loss_eta))


def sample_readings(model: ChannelModel, layout: NodeLayout, robot: Position, window_len: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Raw noisy readings, shape (window_len, n_nodes).

    Draw order is row-major (sample, node), so a one-sample window consumes the
    stream exactly like consecutive :func:`rssi_at` calls in node order.
    """
    if window_len < 1:
        raise ValueError("window_len must be >= 1")
    if len(layout) == 0:
        raise ValueError("empty layout")
    mean = model.field(robot.as_array(), layout)[0]
    return mean + rng.normal(0.0, model.noise_std, size=(window_len, len(layout)))


def sample_window(model: ChannelModel, layout: NodeLayout, robot: Position, window_len: int,
                  rng: np.random.Generator, timestamp: float = 0.0) -> RssiSnapshot:
    raw = sample_readings(model, layout, robot, window_len, rng)
    return snapshot_from_raw(raw, layout, timestamp)


def snapshot_from_raw(raw: np.ndarray, layout: NodeLayout, timestamp: float = 0.0) -> RssiSnapshot:
    raw = np.atleast_2d(raw)
    return RssiSnapshot(float(timestamp), tuple(float(v) for v in raw.mean(axis=0)),
                        tuple(layout.ids), raw.shape[0])
