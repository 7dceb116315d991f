"""Robot paths used in the simulations: boundary loop, diagonals and serpentine coverage."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from ..core import Position, Workspace

TrajectoryKind = Literal["boundary", "cross", "diagonal", "custom"]
KINDS: tuple[str, ...] = ("boundary", "cross", "diagonal")


@dataclass(frozen=True)
class Trajectory:
    waypoints: tuple[Position, ...]
    kind: str = "custom"
    step: float = 0.25

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError("a trajectory needs at least 2 waypoints")
        object.__setattr__(self, "waypoints", tuple(Position.of(p) for p in self.waypoints))

    def __len__(self) -> int:
        return len(self.waypoints)

    def as_array(self) -> np.ndarray:
        return np.array([p.as_array() for p in self.waypoints])

    def inside(self, ws: Workspace) -> bool:
        return all(ws.contains(p) for p in self.waypoints)


def densify(vertices: Sequence[Sequence[float]], step: float) -> list[Position]:
    """Points along a polyline, every vertex kept, consecutive spacing <= step."""
    vs = np.asarray(vertices, dtype=float)
    out = [Position(float(vs[0, 0]), float(vs[0, 1]))]
    for a, b in zip(vs[:-1], vs[1:]):
        n = max(1, int(math.ceil(math.hypot(*(b - a)) / step - 1e-9)))
        for k in range(1, n + 1):
            p = b if k == n else a + (b - a) * (k / n)
            out.append(Position(float(p[0]), float(p[1])))
    return out


def generate_trajectory(ws: Workspace, kind: str, step: float = 0.25, lane_spacing: float = 1.0) -> Trajectory:
    """Build a trajectory of the given kind, inset by ``step`` from the walls.

    boundary: closed loop around the perimeter.
    diagonal: SW to NE, along the top edge, then NW to SE; the centre is a waypoint.
    cross: serpentine sweep with horizontal lanes ``lane_spacing`` apart.
    """
    if not step > 0:
        raise ValueError("step must be > 0")
    if 2 * step >= min(ws.width, ws.height):
        raise ValueError(f"step {step} is too large for a {ws.width} x {ws.height} workspace")
    x0, x1 = ws.x_min + step, ws.x_max - step
    y0, y1 = ws.y_min + step, ws.y_max - step
    c = ws.center
    if kind == "boundary":
        verts = [(x0, y0), (x0, y1), (x1, y1), (x1, y0), (x0, y0)]
    elif kind == "diagonal":
        verts = [(x0, y0), (c.x, c.y), (x1, y1), (x0, y1), (c.x, c.y), (x1, y0)]
    elif kind == "cross":
        if not lane_spacing > 0:
            raise ValueError("lane_spacing must be > 0")
        n_lanes = max(1, int(math.floor(ws.height / lane_spacing + 1e-9)))
        ys = ws.y_min + (np.arange(n_lanes) + 0.5) * ws.height / n_lanes
        verts = []
        for j, y in enumerate(ys):
            row = [(x0, float(y)), (x1, float(y))]
            verts.extend(row if j % 2 == 0 else row[::-1])
    else:
        raise ValueError(f"unknown trajectory kind {kind!r}")
    return Trajectory(tuple(densify(verts, step)), kind, step)
