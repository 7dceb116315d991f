"""Collaborative direction of arrival from one synchronised RSSI snapshot.

The RSSI field increases toward the transmitter, so a finite-difference
gradient taken across the node layout points from the layout toward the
robot. Its two-argument arctangent is the CDOA bearing.

Besides the single layout-wide bearing, :func:`sensor_stencils` gives every
node a one-sided (three-point) gradient stencil built from the node and its two
nearest neighbours. The resulting per-sensor bearings are what the
``"sensors"`` bearing model of the localizers consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .channel import RssiSnapshot
from .core import (InvalidLayoutError, NodeLayout, NoSignalDirectionError, Position,
                   RankDeficiencyError, ewma_angle, wrap_angle)

GradientMethod = Literal["auto", "rect4", "general", "lsq"]


@dataclass(frozen=True)
class RssiGradient:
    g_x: float  # dB/m
    g_y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.g_x) and math.isfinite(self.g_y)):
            raise ValueError("gradient components must be finite")


@dataclass(frozen=True)
class CdoaMeasurement:
    angle: float
    raw_angle: float
    timestamp: float = 0.0
    robot_hint: Position | None = None
    # per-node one-sided bearings, NaN where a node's stencil gradient vanished
    sensor_angles: tuple[float, ...] = ()
    raw_sensor_angles: tuple[float, ...] = ()


def _check_snapshot(layout: NodeLayout, snap: RssiSnapshot) -> np.ndarray:
    if tuple(snap.node_ids) != tuple(layout.ids):
        raise ValueError(f"snapshot nodes {snap.node_ids} do not match layout {layout.ids}")
    return snap.values


def gradient_rect4(layout: NodeLayout, snap: RssiSnapshot) -> RssiGradient:
    """Central finite differences over a rectangular SW, NW, NE, SE layout."""
    if not layout.is_rect4:
        raise InvalidLayoutError("gradient_rect4 needs a 4-node axis-aligned rectangle")
    s1, s2, s3, s4 = _check_snapshot(layout, snap)
    dx, dy = layout.delta_x, layout.delta_y
    g_x = (s3 - s2) / (2 * dx) + (s4 - s1) / (2 * dx)
    g_y = (s2 - s1) / (2 * dy) + (s3 - s4) / (2 * dy)
    return RssiGradient(float(g_x), float(g_y))


def _nearest_node(pts: np.ndarray, target: np.ndarray, tol: float) -> int:
    d = np.hypot(pts[:, 0] - target[0], pts[:, 1] - target[1])
    k = int(np.argmin(d))
    if d[k] > tol:
        raise InvalidLayoutError(f"no node within {tol:g} m of offset point {tuple(target)}")
    return k


def gradient_general(layout: NodeLayout, snap: RssiSnapshot, delta_x: float | None = None,
                     delta_y: float | None = None) -> RssiGradient:
    """Gradient from the readings at the four offsets (x_c +- dx/2, y_c +- dy/2).

    Readings are looked up at the node nearest to each offset, within a tenth
    of the smaller spacing. The y-term is taken north-minus-south so that the
    result coincides with :func:`gradient_rect4` on rectangular layouts.
    """
    s = _check_snapshot(layout, snap)
    dx = layout.delta_x if delta_x is None else float(delta_x)
    dy = layout.delta_y if delta_y is None else float(delta_y)
    lam, dlt = 0.5 * dx, 0.5 * dy
    c = layout.centroid.as_array()
    pts = layout.positions
    tol = min(dx, dy) / 10.0
    sw = s[_nearest_node(pts, c + (-lam, -dlt), tol)]
    nw = s[_nearest_node(pts, c + (-lam, dlt), tol)]
    ne = s[_nearest_node(pts, c + (lam, dlt), tol)]
    se = s[_nearest_node(pts, c + (lam, -dlt), tol)]
    g_x = (se - sw) / (2 * dx) + (ne - nw) / (2 * dx)
    g_y = (ne - se) / (2 * dy) + (nw - sw) / (2 * dy)
    return RssiGradient(float(g_x), float(g_y))


def gradient_lsq(layout: NodeLayout, snap: RssiSnapshot) -> RssiGradient:
    """Least-squares plane S = a x + b y + c through all node readings; returns (a, b)."""
    s = _check_snapshot(layout, snap)
    pts = layout.positions
    centered = pts - pts.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-9 * max(1.0, np.abs(centered).max())) < 2:
        raise RankDeficiencyError("collinear nodes do not determine a planar gradient")
    design = np.column_stack([centered, np.ones(len(pts))])
    coef, *_ = np.linalg.lstsq(design, s, rcond=None)
    return RssiGradient(float(coef[0]), float(coef[1]))


def cdoa_from_gradient(g: RssiGradient) -> float:
    if g.g_x == 0.0 and g.g_y == 0.0:
        raise NoSignalDirectionError("zero RSSI gradient")
    return wrap_angle(math.atan2(g.g_y, g.g_x))


def compute_gradient(layout: NodeLayout, snap: RssiSnapshot, method: GradientMethod = "auto") -> RssiGradient:
    if method == "auto":
        method = "rect4" if layout.is_rect4 else "lsq"
    if method == "rect4":
        return gradient_rect4(layout, snap)
    if method == "general":
        return gradient_general(layout, snap)
    if method == "lsq":
        return gradient_lsq(layout, snap)
    raise ValueError(f"unknown gradient method {method!r}")


def sensor_stencils(layout: NodeLayout) -> np.ndarray:
    """Per-node one-sided gradient operators, shape (n_nodes, 2, n_nodes).

    Row ``i`` maps the reading vector to the plane gradient through node ``i``
    and its two nearest non-collinear neighbours. Every operator annihilates
    constants, so the bearing it yields ignores the reference power A and,
    for a log-distance field, the path-loss exponent.
    """
    pts = layout.positions
    n = len(pts)
    ops = np.zeros((n, 2, n))
    for i in range(n):
        d = np.hypot(*(pts - pts[i]).T)
        order = [k for k in np.argsort(d, kind="stable") if k != i]
        j = order[0]
        for k in order[1:]:
            basis = np.array([pts[j] - pts[i], pts[k] - pts[i]])
            if abs(np.linalg.det(basis)) > 1e-9 * d[j] * d[k]:
                break
        else:
            raise RankDeficiencyError(f"node {layout.ids[i]} has no non-collinear neighbour pair")
        inv = np.linalg.inv(basis)
        ops[i, :, j] = inv[:, 0]
        ops[i, :, k] = inv[:, 1]
        ops[i, :, i] = -(inv[:, 0] + inv[:, 1])
    return ops


def sensor_angles(stencils: np.ndarray, readings: np.ndarray) -> np.ndarray:
    """Bearings of each per-node stencil gradient; NaN where the gradient is zero."""
    g = stencils @ readings
    out = np.arctan2(g[:, 1], g[:, 0])
    out[(g[:, 0] == 0.0) & (g[:, 1] == 0.0)] = np.nan
    return out


@dataclass
class CdoaSmoother:
    """EWMA state for the layout bearing and the per-sensor bearings."""

    alpha: float = 0.7
    angle: float | None = None
    sensor: np.ndarray | None = None
    degenerate_count: int = field(default=0)

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")

    def update(self, raw: float, raw_sensor: np.ndarray) -> tuple[float, np.ndarray]:
        if self.angle is None:
            self.angle = raw
        else:
            self.angle, deg = ewma_angle(self.angle, raw, self.alpha, with_flag=True)
            self.degenerate_count += deg
        if self.sensor is None or self.alpha == 1.0:
            self.sensor = raw_sensor.copy()
        else:
            a = self.alpha
            prev = self.sensor
            sx = a * np.sin(raw_sensor) + (1 - a) * np.sin(prev)
            cx = a * np.cos(raw_sensor) + (1 - a) * np.cos(prev)
            merged = np.arctan2(sx, cx)
            # fall back to the new bearing if the resultant vanished, keep the old one if the new is NaN
            merged = np.where(np.hypot(sx, cx) < 1e-12, raw_sensor, merged)
            merged = np.where(np.isnan(raw_sensor), prev, merged)
            self.sensor = np.where(np.isnan(prev), raw_sensor, merged)
        return self.angle, self.sensor

    def reset(self) -> None:
        self.angle = None
        self.sensor = None


def estimate_cdoa(layout: NodeLayout, snap: RssiSnapshot, smoother: CdoaSmoother,
                  method: GradientMethod = "auto", robot_hint: Position | None = None,
                  stencils: np.ndarray | None = None) -> CdoaMeasurement:
    """Gradient, bearing and smoothing in one call.

    Raises :class:`NoSignalDirectionError` on an exactly symmetric snapshot and
    leaves ``smoother`` untouched in that case.
    """
    g = compute_gradient(layout, snap, method)
    raw = cdoa_from_gradient(g)
    if stencils is None:
        stencils = sensor_stencils(layout)
    raw_sensor = sensor_angles(stencils, snap.values)
    angle, smoothed_sensor = smoother.update(raw, raw_sensor)
    return CdoaMeasurement(angle=angle, raw_angle=raw, timestamp=snap.timestamp, robot_hint=robot_hint,
                           sensor_angles=tuple(float(v) for v in smoothed_sensor),
                           raw_sensor_angles=tuple(float(v) for v in raw_sensor))
