"""CDOA particle filter and grid EM localizers.

Both score candidate positions with a product of Gaussian densities of
bearing errors over a sliding window of the last M measurements. Older
measurements are compared against the candidate moved back along the
recorded odometry, so a moving robot contributes bearings taken from
different places. Without odometry the robot is treated as static over the
window.

Two bearing models are available:

``CentroidBearings``
    one bearing per measurement, expected value = direction from the layout
    centroid to the candidate.
``SensorBearings``
    one bearing per node, expected value = the one-sided stencil bearing of
    the noiseless log-distance field at the candidate. Unlike the centroid
    model this constrains range as well as direction.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Protocol

import numpy as np

from ._kernels import accumulate_lattice_loglik, sensor_window_loglik
from .cdoa import CdoaMeasurement, sensor_stencils
from .core import DegenerateWeightsError, NodeLayout, Position, Workspace, angular_error, wrap_angles

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class BearingModel(Protocol):
    n_terms: int

    def expected(self, points: np.ndarray) -> np.ndarray:
        """(P, 2) candidate positions -> (P, n_terms) expected bearings, NaN if undefined."""

    def measured(self, m: CdoaMeasurement) -> np.ndarray:
        """Measured bearings of one measurement, shape (n_terms,)."""


class CentroidBearings:
    n_terms = 1

    def __init__(self, centroid: Position):
        self.centroid = centroid

    def expected(self, points: np.ndarray) -> np.ndarray:
        dx = points[:, 0] - self.centroid.x
        dy = points[:, 1] - self.centroid.y
        out = np.arctan2(dy, dx)
        out[(dx == 0.0) & (dy == 0.0)] = np.nan
        return out[:, None]

    def measured(self, m: CdoaMeasurement) -> np.ndarray:
        return np.array([m.angle])


class SensorBearings:
    def __init__(self, layout: NodeLayout, min_distance: float = 0.1):
        self.nodes = layout.positions
        self.stencils = sensor_stencils(layout)
        self.n_terms = len(layout)
        self.min_d2 = min_distance ** 2

    def expected(self, points: np.ndarray) -> np.ndarray:
        dx = points[:, None, 0] - self.nodes[None, :, 0]
        dy = points[:, None, 1] - self.nodes[None, :, 1]
        # -ln d^2 is the log-distance field up to a positive scale and an offset,
        # both of which the stencils ignore
        field_ = -np.log(np.maximum(dx * dx + dy * dy, self.min_d2))
        g = np.einsum("sdn,pn->psd", self.stencils, field_)
        out = np.arctan2(g[..., 1], g[..., 0])
        out[(g[..., 0] == 0.0) & (g[..., 1] == 0.0)] = np.nan
        return out

    def measured(self, m: CdoaMeasurement) -> np.ndarray:
        if len(m.sensor_angles) != self.n_terms:
            raise ValueError("measurement carries no per-sensor bearings for this layout")
        return np.asarray(m.sensor_angles, dtype=float)


def make_bearing_model(kind: str, layout: NodeLayout, min_distance: float = 0.1) -> BearingModel:
    if kind == "centroid":
        return CentroidBearings(layout.centroid)
    if kind == "sensors":
        return SensorBearings(layout, min_distance)
    raise ValueError(f"unknown bearing model {kind!r}")


@dataclass
class MeasurementWindow:
    """FIFO of the last ``capacity`` measurements with cumulative odometry."""

    capacity: int = 5
    sigma: float = 0.3
    entries: deque = field(default_factory=deque)
    _travel: np.ndarray = field(default_factory=lambda: np.zeros(2), repr=False)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError("window capacity must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")

    def push(self, m: CdoaMeasurement, odometry=None) -> None:
        if odometry is not None:
            self._travel = self._travel + np.asarray(odometry, dtype=float)
        self.entries.append((m, self._travel.copy()))
        while len(self.entries) > self.capacity:
            self.entries.popleft()

    def __len__(self) -> int:
        return len(self.entries)

    def shifts(self) -> np.ndarray:
        """(K, 2) displacement from each entry's robot position to the newest one."""
        latest = self.entries[-1][1]
        return np.array([latest - d for _, d in self.entries])

    def measured(self, model: BearingModel) -> np.ndarray:
        return wrap_angles(np.array([model.measured(m) for m, _ in self.entries]))


class LikelihoodTerm(NamedTuple):
    expected: float | None  # None when the back-propagated candidate sits on the centroid
    error: float | None


def likelihood_terms(candidate: Position, window: MeasurementWindow, centroid: Position) -> list[LikelihoodTerm]:
    latest = window.entries[-1][1]
    terms = []
    for m, travel in window.entries:
        hx = candidate.x - (latest[0] - travel[0])
        hy = candidate.y - (latest[1] - travel[1])
        if hx == centroid.x and hy == centroid.y:
            terms.append(LikelihoodTerm(None, None))
            continue
        expected = math.atan2(hy - centroid.y, hx - centroid.x)
        terms.append(LikelihoodTerm(expected, angular_error(m.angle, expected)))
    return terms


def cdoa_likelihood(candidate: Position, window: MeasurementWindow, centroid: Position) -> float:
    """Product of Gaussian densities of centroid-bearing errors over the window.

    Terms whose back-propagated candidate coincides with the centroid have no
    defined bearing and are left out of the product.
    """
    if len(window) == 0:
        raise ValueError("empty measurement window")
    s = window.sigma
    peak = 1.0 / (s * math.sqrt(2.0 * math.pi))
    p = 1.0
    for t in likelihood_terms(candidate, window, centroid):
        if t.error is not None:
            p *= peak * math.exp(-(t.error ** 2) / (2.0 * s * s))
    return p


def window_log_likelihood(points: np.ndarray, window: MeasurementWindow, model: BearingModel,
                          compiled: bool = True) -> np.ndarray:
    """Log of the windowed likelihood for every row of ``points`` (P, 2).

    Per-sensor bearings go through a compiled loop unless ``compiled`` is
    False; the vectorised route is kept as a cross-check.
    """
    if len(window) == 0:
        raise ValueError("empty measurement window")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    shifts = window.shifts()
    meas = window.measured(model)
    s = window.sigma
    if isinstance(model, SensorBearings) and compiled:
        out = np.empty(len(pts))
        return sensor_window_loglik(np.ascontiguousarray(pts), shifts, np.ascontiguousarray(meas, dtype=float),
                                    model.nodes, model.stencils, model.min_d2, 1.0 / (2.0 * s * s),
                                    math.log(s) + LOG_SQRT_2PI, out)
    hist = pts[None, :, :] - shifts[:, None, :]
    exp = model.expected(hist.reshape(-1, 2)).reshape(len(shifts), len(pts), -1)
    err = wrap_angles(meas[:, None, :] - exp)
    logterm = -err * err / (2.0 * s * s) - (math.log(s) + LOG_SQRT_2PI)
    return np.nansum(logterm, axis=(0, 2))


def normalize_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    total = w.sum()
    if not total > 0:
        raise DegenerateWeightsError("all weights are zero")
    return w / total


def weights_from_log(logw: np.ndarray) -> np.ndarray:
    """Normalised weights from log-weights, shifted by the max before exponentiating."""
    finite = np.isfinite(logw)
    if not finite.any():
        raise DegenerateWeightsError("no finite log-weight")
    w = np.zeros_like(logw)
    w[finite] = np.exp(logw[finite] - logw[finite].max())
    return normalize_weights(w)


def multinomial_resample(weights: np.ndarray, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    n = len(weights) if n is None else n
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right")


def systematic_resample(weights: np.ndarray, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    n = len(weights) if n is None else n
    cdf = np.cumsum(weights)
    cdf[-1] = 1.0
    u = (rng.random() + np.arange(n)) / n
    return np.searchsorted(cdf, u, side="right")


class Particle(NamedTuple):
    pos: Position
    weight: float


def particles_for_resolution(workspace: Workspace, resolution: float) -> int:
    """Particle count that spreads one sample per resolution cell."""
    return max(1, int(math.ceil(workspace.area / resolution ** 2 - 1e-9)))


@dataclass
class ParticleFilterState:
    particles: np.ndarray
    weights: np.ndarray
    workspace: Workspace
    model: BearingModel
    window: MeasurementWindow
    rng: np.random.Generator
    resolution: float = 0.08
    motion_std: float = 0.05
    resampling: Literal["multinomial", "systematic"] = "multinomial"
    last_estimate: Position | None = None

    @classmethod
    def uniform(cls, workspace: Workspace, model: BearingModel, rng: np.random.Generator,
                n_particles: int | None = 200, window: MeasurementWindow | None = None,
                **kwargs) -> "ParticleFilterState":
        """Particles spread uniformly over the workspace.

        ``n_particles=None`` derives the count from ``resolution`` (one particle
        per resolution cell).
        """
        res = kwargs.get("resolution", cls.resolution)
        n = particles_for_resolution(workspace, res) if n_particles is None else int(n_particles)
        if n < 1:
            raise ValueError("need at least one particle")
        return cls(particles=workspace.uniform(n, rng), weights=np.full(n, 1.0 / n), workspace=workspace,
                   model=model, window=window if window is not None else MeasurementWindow(), rng=rng, **kwargs)

    @property
    def n(self) -> int:
        return len(self.particles)

    def particle_list(self) -> list[Particle]:
        return [Particle(Position(float(x), float(y)), float(w)) for (x, y), w in zip(self.particles, self.weights)]

    def reseed(self) -> None:
        self.particles = self.workspace.uniform(self.n, self.rng)
        self.weights = np.full(self.n, 1.0 / self.n)


def pf_step(state: ParticleFilterState, measurement: CdoaMeasurement, odometry=None) -> Position | None:
    """One CDOA-PF iteration; returns the best particle or None if the weights collapsed.

    Transition (odometry plus Gaussian jitter), window update, likelihood
    weighting, estimate = highest-weight particle, then resampling back to n
    particles. Resampled particles are spread uniformly within one resolution
    cell around their parent.
    """
    pts = state.particles
    if odometry is not None:
        pts += np.asarray(odometry, dtype=float)
    if state.motion_std > 0:
        pts += state.rng.normal(0.0, state.motion_std, size=pts.shape)
    state.workspace.clip(pts)
    state.window.push(measurement, odometry)

    logw = window_log_likelihood(pts, state.window, state.model)
    try:
        w = weights_from_log(logw)
    except DegenerateWeightsError:
        state.reseed()
        state.last_estimate = None
        return None
    best = int(np.argmax(w))
    estimate = Position(float(pts[best, 0]), float(pts[best, 1]))

    resample = systematic_resample if state.resampling == "systematic" else multinomial_resample
    idx = resample(w, state.rng)
    pts = pts[idx]
    if state.resolution > 0:
        pts += state.rng.uniform(-0.5 * state.resolution, 0.5 * state.resolution, size=pts.shape)
    state.particles = state.workspace.clip(pts)
    state.weights = np.full(state.n, 1.0 / state.n)
    state.last_estimate = estimate
    return estimate


@dataclass
class GridState:
    """Cell-centred grid over the workspace with one log-weight per cell.

    On a regular grid the expected bearings are tabulated once on the lattice;
    window shifts are snapped to whole cells so every windowed term is a table
    lookup. ``snap_shifts=False`` evaluates shifted candidates exactly instead.
    """

    centers: np.ndarray  # (ny, nx, 2)
    model: BearingModel
    resolution: tuple[float, float] | None = None  # cell size (x, y) of a regular lattice
    origin: tuple[float, float] | None = None      # centre of cell (0, 0)
    snap_shifts: bool = True
    log_weights: np.ndarray | None = None
    _table: np.ndarray | None = field(default=None, repr=False)
    _pad: tuple[int, int] = (0, 0)

    @classmethod
    def regular(cls, workspace: Workspace, resolution: float, model: BearingModel,
                snap_shifts: bool = True) -> "GridState":
        """Cells of roughly ``resolution`` metres that tile ``workspace`` exactly."""
        nx = max(1, int(math.ceil(workspace.width / resolution - 1e-9)))
        ny = max(1, int(math.ceil(workspace.height / resolution - 1e-9)))
        cx, cy = workspace.width / nx, workspace.height / ny
        xs = workspace.x_min + (np.arange(nx) + 0.5) * cx
        ys = workspace.y_min + (np.arange(ny) + 0.5) * cy
        gx, gy = np.meshgrid(xs, ys)
        return cls(np.stack([gx, gy], axis=-1), model, (cx, cy), (float(xs[0]), float(ys[0])), snap_shifts)

    @property
    def shape(self) -> tuple[int, int]:
        return self.centers.shape[:2]

    @property
    def weights(self) -> np.ndarray:
        """Normalised cell weights of the last step."""
        return weights_from_log(self.log_weights.ravel()).reshape(self.shape)

    def _lattice_table(self, pad_r: int, pad_c: int) -> np.ndarray:
        if self._table is None or pad_r > self._pad[0] or pad_c > self._pad[1]:
            ny, nx = self.shape
            pr, pc = max(pad_r, self._pad[0], ny), max(pad_c, self._pad[1], nx)
            cx, cy = self.resolution
            xs = self.origin[0] + np.arange(-pc, nx + pc) * cx
            ys = self.origin[1] + np.arange(-pr, ny + pr) * cy
            gx, gy = np.meshgrid(xs, ys)
            pts = np.column_stack([gx.ravel(), gy.ravel()])
            exp = self.model.expected(pts)
            self._table = np.ascontiguousarray(exp.T.reshape(-1, len(ys), len(xs)))
            self._pad = (pr, pc)
        return self._table

    def log_likelihood(self, window: MeasurementWindow) -> np.ndarray:
        ny, nx = self.shape
        if self.resolution is None or not self.snap_shifts:
            return window_log_likelihood(self.centers.reshape(-1, 2), window, self.model).reshape(ny, nx)
        cx, cy = self.resolution
        shifts = window.shifts()
        q_c = np.rint(shifts[:, 0] / cx).astype(np.int64)
        q_r = np.rint(shifts[:, 1] / cy).astype(np.int64)
        table = self._lattice_table(int(np.abs(q_r).max()), int(np.abs(q_c).max()))
        s = window.sigma
        out = np.zeros((ny, nx))
        accumulate_lattice_loglik(table, self._pad[0] - q_r, self._pad[1] - q_c,
                                  np.ascontiguousarray(window.measured(self.model)),
                                  ny, nx, 1.0 / (2.0 * s * s), math.log(s) + LOG_SQRT_2PI, out)
        return out


def em_step(state: GridState, measurement: CdoaMeasurement, window: MeasurementWindow,
            odometry=None) -> Position:
    """One CDOA-EM iteration: push the measurement, score every cell, return the best one.

    Ties resolve to the lowest (row, col) cell.
    """
    window.push(measurement, odometry)
    state.log_weights = state.log_likelihood(window)
    r, c = np.unravel_index(int(np.argmax(state.log_weights)), state.shape)
    x, y = state.centers[r, c]
    return Position(float(x), float(y))
