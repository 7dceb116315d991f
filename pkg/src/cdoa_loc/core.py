"""Shared geometry, angle arithmetic and domain types.

Angles are plain floats in radians, always wrapped into (-pi, pi] by the
functions here. Positions are immutable 2-D points in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class LocalizationError(Exception):
    """Base class for errors raised by this package."""


class InvalidLayoutError(LocalizationError, ValueError):
    """Node layout does not satisfy the requirements of an operation."""


class NoSignalDirectionError(LocalizationError):
    """The RSSI gradient is exactly zero, so no bearing can be formed."""


class RankDeficiencyError(LocalizationError):
    """A least-squares system is singular (e.g. collinear anchors)."""


class DegenerateWeightsError(LocalizationError, ValueError):
    """All weights are zero or non-finite."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite position ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    @classmethod
    def of(cls, p: Sequence[float] | np.ndarray | "Position") -> "Position":
        if isinstance(p, Position):
            return p
        return cls(float(p[0]), float(p[1]))

    def distance_to(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Workspace:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"empty workspace {self}")

    @classmethod
    def square(cls, side: float) -> "Workspace":
        return cls(0.0, side, 0.0, side)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Position:
        return Position(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def contains(self, p: Position, tol: float = 1e-9) -> bool:
        return (self.x_min - tol <= p.x <= self.x_max + tol
                and self.y_min - tol <= p.y <= self.y_max + tol)

    def clip(self, pts: np.ndarray) -> np.ndarray:
        """Clamp an (n, 2) array of points into the workspace, in place."""
        np.clip(pts[:, 0], self.x_min, self.x_max, out=pts[:, 0])
        np.clip(pts[:, 1], self.y_min, self.y_max, out=pts[:, 1])
        return pts

    def uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        pts = rng.random((n, 2))
        pts[:, 0] = self.x_min + pts[:, 0] * self.width
        pts[:, 1] = self.y_min + pts[:, 1] * self.height
        return pts


# Quadrant of each slot in the rectangular convention: N1=SW, N2=NW, N3=NE, N4=SE.
_RECT_SLOTS = ((-1, -1), (-1, 1), (1, 1), (1, -1))


@dataclass(frozen=True)
class NodeLayout:
    """Static anchor nodes with known positions.

    For four nodes on an axis-aligned rectangle the constructor reorders them
    into the SW, NW, NE, SE convention the four-point gradient stencil needs;
    ``permutation[k]`` is the input index of the node stored at slot ``k``.
    """

    nodes: tuple[tuple[str, Position], ...]
    sensing_range: float = 40.0
    permutation: tuple[int, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        nodes = tuple((str(i), Position.of(p)) for i, p in self.nodes)
        if len(nodes) < 3:
            raise InvalidLayoutError("a layout needs at least 3 nodes")
        ids = [i for i, _ in nodes]
        if len(set(ids)) != len(ids):
            raise InvalidLayoutError(f"duplicate node ids in {ids}")
        pts = np.array([p.as_array() for _, p in nodes])
        for a in range(len(pts)):
            for b in range(a + 1, len(pts)):
                if np.allclose(pts[a], pts[b], rtol=0.0, atol=1e-12):
                    raise InvalidLayoutError(f"nodes {ids[a]} and {ids[b]} coincide")
        if self.sensing_range <= 0:
            raise ValueError("sensing_range must be positive")
        perm = _rect4_order(pts)
        object.__setattr__(self, "_rect4", perm is not None)
        if perm is None:
            perm = tuple(range(len(nodes)))
        nodes = tuple(nodes[k] for k in perm)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "permutation", tuple(perm))
        object.__setattr__(self, "_pts", np.array([p.as_array() for _, p in nodes]))
        self._pts.setflags(write=False)
        if self.delta_x <= 0 or self.delta_y <= 0:
            raise InvalidLayoutError("layout has zero extent along an axis")

    @classmethod
    def from_points(cls, points: Iterable[Sequence[float]], ids: Iterable[str] | None = None,
                    sensing_range: float = 40.0) -> "NodeLayout":
        points = [Position.of(p) for p in points]
        if ids is None:
            ids = [f"N{k + 1}" for k in range(len(points))]
        return cls(tuple(zip(ids, points)), sensing_range=sensing_range)

    @classmethod
    def corners(cls, ws: Workspace, sensing_range: float = 40.0) -> "NodeLayout":
        """Four nodes on the workspace corners, ids N1..N4 in SW, NW, NE, SE order."""
        pts = [(ws.x_min, ws.y_min), (ws.x_min, ws.y_max), (ws.x_max, ws.y_max), (ws.x_max, ws.y_min)]
        return cls.from_points(pts, sensing_range=sensing_range)

    @property
    def positions(self) -> np.ndarray:
        """(n, 2) read-only array of node coordinates in stored order."""
        return self._pts

    @property
    def ids(self) -> list[str]:
        return [i for i, _ in self.nodes]

    def __len__(self) -> int:
        return len(self.nodes)

    def index_of(self, node_id: str) -> int:
        for k, (i, _) in enumerate(self.nodes):
            if i == node_id:
                return k
        raise KeyError(node_id)

    @property
    def centroid(self) -> Position:
        c = self._pts.mean(axis=0)
        return Position(float(c[0]), float(c[1]))

    @property
    def delta_x(self) -> float:
        return float(np.ptp(self._pts[:, 0]))

    @property
    def delta_y(self) -> float:
        return float(np.ptp(self._pts[:, 1]))

    @property
    def is_rect4(self) -> bool:
        return self._rect4


def _rect4_order(pts: np.ndarray, tol: float = 1e-9) -> tuple[int, ...] | None:
    """Slot order (SW, NW, NE, SE) if ``pts`` are the corners of an axis-aligned rectangle."""
    if len(pts) != 4:
        return None
    xs = np.unique(np.round(pts[:, 0] / tol) * tol)
    ys = np.unique(np.round(pts[:, 1] / tol) * tol)
    if len(xs) != 2 or len(ys) != 2:
        return None
    c = pts.mean(axis=0)
    order = []
    for sx, sy in _RECT_SLOTS:
        match = [k for k in range(4)
                 if np.sign(pts[k, 0] - c[0]) == sx and np.sign(pts[k, 1] - c[1]) == sy]
        if len(match) != 1:
            return None
        order.append(match[0])
    return tuple(order)


def wrap_angle(theta: float) -> float:
    """Wrap ``theta`` into (-pi, pi]."""
    if not math.isfinite(theta):
        raise ValueError(f"cannot wrap non-finite angle {theta}")
    w = math.remainder(theta, TWO_PI)  # in [-pi, pi]
    if w <= -math.pi:
        w += TWO_PI
    return w


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    """Vectorised :func:`wrap_angle`; NaN propagates."""
    w = np.remainder(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi
    return np.where(w <= -math.pi, w + TWO_PI, w)


def angular_error(a: float, b: float) -> float:
    """Signed shortest-arc difference ``a - b`` in (-pi, pi]."""
    return wrap_angle(a - b)


def ewma_angle(prev: float, new: float, alpha: float, *, with_flag: bool = False):
    """Exponentially weighted average of two bearings on the unit circle.

    Averaging unit vectors keeps the result correct across the +-pi seam. If
    the weighted resultant has zero length (antipodal inputs at alpha=0.5)
    ``new`` is returned; pass ``with_flag=True`` to also receive a bool that
    marks this case.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 1.0:
        out, degenerate = wrap_angle(new), False
    elif alpha == 0.0:
        out, degenerate = wrap_angle(prev), False
    else:
        sx = alpha * math.sin(new) + (1.0 - alpha) * math.sin(prev)
        cx = alpha * math.cos(new) + (1.0 - alpha) * math.cos(prev)
        degenerate = math.hypot(sx, cx) < 1e-12
        out = wrap_angle(new) if degenerate else wrap_angle(math.atan2(sx, cx))
    return (out, degenerate) if with_flag else out
