"""Comparison localizers: trilateration, weighted centroid, D-RSSI, I-RSSI and PF-EKF."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np

from ._kernels import gauss_newton_ranges
from .channel import ChannelModel, RssiSnapshot, distance_from_rssi
from .core import NodeLayout, Position, Workspace
from .localizers import multinomial_resample, weights_from_log

log = logging.getLogger(__name__)

WeightMode = Literal["power_mw", "raw_rssi", "inverse_distance"]


@dataclass
class PfEkfConfig:
    n_particles: int = 200
    motion_std: float = 0.3  # m per step, random-walk diffusion of the particles
    rssi_std: float | None = None  # None: use the channel's noise_std (floored at 0.5 dB)
    F: np.ndarray = field(default_factory=lambda: np.eye(2))
    H: np.ndarray = field(default_factory=lambda: np.eye(2))
    Q: np.ndarray = field(default_factory=lambda: 0.01 * np.eye(2))
    R: np.ndarray = field(default_factory=lambda: 0.1 * np.eye(2))
    init_cov: float = 1.0

    def __post_init__(self) -> None:
        for name in ("F", "H", "Q", "R"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).reshape(2, 2))
        for name in ("Q", "R"):
            m = getattr(self, name)
            if not np.allclose(m, m.T) or np.linalg.eigvalsh(m).min() <= 0:
                raise ValueError(f"{name} must be symmetric positive definite")


@dataclass
class BaselineConfig:
    grid_resolution: float = 0.1
    irssi_k: int = 13
    irssi_bag: int = 30
    irssi_initial: tuple[float, float] = (0.0, 0.0)
    pfekf: PfEkfConfig = field(default_factory=PfEkfConfig)

    def __post_init__(self) -> None:
        if self.grid_resolution <= 0:
            raise ValueError("grid_resolution must be > 0")
        if not 1 <= self.irssi_k <= self.irssi_bag:
            raise ValueError("need 1 <= irssi_k <= irssi_bag")
        if isinstance(self.pfekf, dict):
            self.pfekf = PfEkfConfig(**self.pfekf)


# --------------------------------------------------------------------------- trilateration

class TrilaterationResult(NamedTuple):
    position: Position
    converged: bool
    iterations: int
    cost: float


def _cost(p: np.ndarray, anchors: np.ndarray, d: np.ndarray) -> float:
    r = np.hypot(anchors[:, 0] - p[0], anchors[:, 1] - p[1]) - d
    return float(r @ r)


def _collinear(anchors: np.ndarray) -> bool:
    c = anchors - anchors.mean(axis=0)
    sv = np.linalg.svd(c, compute_uv=False)
    return sv.size < 2 or sv[1] <= 1e-9 * max(sv[0], 1.0)


def _line_candidates(anchors: np.ndarray, d: np.ndarray) -> list[np.ndarray]:
    """Both mirror-image solutions for anchors on a line."""
    c = anchors.mean(axis=0)
    _, _, vt = np.linalg.svd(anchors - c)
    u_dir, v_dir = vt[0], np.array([-vt[0][1], vt[0][0]])
    u = (anchors - c) @ u_dir
    # d_i^2 - u_i^2 = -2 u u_i + (u^2 + v^2): linear in (u, w)
    a = np.column_stack([-2 * u, np.ones_like(u)])
    (u0, w), *_ = np.linalg.lstsq(a, d ** 2 - u ** 2, rcond=None)
    v = math.sqrt(max(w - u0 * u0, 0.0))
    return [c + u0 * u_dir + v * v_dir, c + u0 * u_dir - v * v_dir]


def solve_trilateration(anchors: np.ndarray, distances: np.ndarray, init: np.ndarray,
                        workspace: Workspace | None = None, max_iter: int = 100,
                        step_tol: float = 1e-9) -> TrilaterationResult:
    """Damped Gauss-Newton on sum_i (|p - a_i| - d_i)^2."""
    anchors = np.asarray(anchors, dtype=float)
    d = np.asarray(distances, dtype=float)
    starts = [np.asarray(init, dtype=float)]
    if _collinear(anchors):
        starts = _line_candidates(anchors, d)
    best = None
    for p0 in starts:
        res = _gauss_newton(anchors, d, p0, max_iter, step_tol)
        inside = workspace is None or workspace.contains(res.position)
        key = (not inside, res.cost)
        if best is None or key < best[0]:
            best = (key, res)
    return best[1]


def _gauss_newton(anchors, d, p0, max_iter, step_tol) -> TrilaterationResult:
    x, y, cost, it, ok = gauss_newton_ranges(np.ascontiguousarray(anchors), np.ascontiguousarray(d),
                                             float(p0[0]), float(p0[1]), max_iter, step_tol)
    return TrilaterationResult(Position(x, y), bool(ok), int(it), float(cost))


def trilaterate(layout: NodeLayout, snap: RssiSnapshot, model: ChannelModel,
                workspace: Workspace | None = None) -> TrilaterationResult:
    """Nonlinear least-squares position from RSSI-derived ranges, started at the WCL estimate."""
    d = distance_from_rssi(model, snap.values)
    init = weighted_centroid(layout, snap).as_array()
    res = solve_trilateration(layout.positions, d, init, workspace)
    if not res.converged:
        log.debug("trilateration did not converge in %d iterations", res.iterations)
    return res


# --------------------------------------------------------------------------- weighted centroid

def wcl_weights(readings: np.ndarray, mode: WeightMode = "power_mw",
                model: ChannelModel | None = None) -> np.ndarray:
    if mode == "power_mw":
        w = np.power(10.0, (readings - readings.max()) / 10.0)  # scaled mW, overflow-safe
    elif mode == "raw_rssi":
        w = readings / readings.sum()
    elif mode == "inverse_distance":
        if model is None:
            raise ValueError("inverse_distance weights need a channel model")
        w = 1.0 / distance_from_rssi(model, readings)
    else:
        raise ValueError(f"unknown weight mode {mode!r}")
    return w


def weighted_centroid(layout: NodeLayout, snap: RssiSnapshot, weight_mode: WeightMode = "power_mw",
                      model: ChannelModel | None = None) -> Position:
    """Weighted mean of node positions.

    ``raw_rssi`` is the literal RSSI_i / sum(RSSI) weighting; with negative dBm
    readings it favours the weaker nodes. ``power_mw`` converts to milliwatts
    first.
    """
    w = wcl_weights(snap.values, weight_mode, model)
    total = w.sum()
    if not np.isfinite(total) or abs(total) < 1e-300:
        warnings.warn("degenerate WCL weights; returning the plain centroid", RuntimeWarning, stacklevel=2)
        return layout.centroid
    p = (w @ layout.positions) / total
    return Position(float(p[0]), float(p[1]))


# --------------------------------------------------------------------------- D-RSSI

def grid_centers(workspace: Workspace, resolution: float) -> np.ndarray:
    """(ny * nx, 2) cell centres in row-major order (row = y index)."""
    nx = max(1, int(math.ceil(workspace.width / resolution - 1e-9)))
    ny = max(1, int(math.ceil(workspace.height / resolution - 1e-9)))
    xs = workspace.x_min + (np.arange(nx) + 0.5) * workspace.width / nx
    ys = workspace.y_min + (np.arange(ny) + 0.5) * workspace.height / ny
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


class DrssiGrid:
    """Theoretical RSS per grid point, computed once (the offline phase)."""

    def __init__(self, layout: NodeLayout, model: ChannelModel, workspace: Workspace, resolution: float):
        self.centers = grid_centers(workspace, resolution)
        self.theory = model.field(self.centers, layout)

    def locate(self, readings: np.ndarray) -> Position:
        ref = int(np.argmax(readings))
        meas = readings - readings[ref]
        theory = self.theory - self.theory[:, ref:ref + 1]
        cost = ((theory - meas) ** 2).sum(axis=1)
        x, y = self.centers[int(np.argmin(cost))]
        return Position(float(x), float(y))


def drssi_locate(layout: NodeLayout, snap: RssiSnapshot, model: ChannelModel, workspace: Workspace,
                 resolution: float) -> Position:
    """Grid point whose theoretical differential RSS best matches the measured one."""
    return DrssiGrid(layout, model, workspace, resolution).locate(snap.values)


# --------------------------------------------------------------------------- I-RSSI

@dataclass
class IRssiState:
    layout: NodeLayout
    model: ChannelModel
    k: int = 13
    position: Position = Position(0.0, 0.0)
    prev_rssi: np.ndarray | None = None
    distances: np.ndarray | None = None
    short_bags: int = 0
    workspace: Workspace | None = None

    def __post_init__(self) -> None:
        if self.distances is None:
            p = self.position.as_array()
            d0 = np.hypot(*(self.layout.positions - p).T)
            self.distances = np.maximum(d0, self.model.min_distance)
        if self.prev_rssi is None:
            self.prev_rssi = np.asarray(self.model.mean_rssi(self.distances), dtype=float)


def top_k_mean(bag, k: int) -> tuple[float, bool]:
    """Mean of the k largest values; the flag is False when the bag held fewer than k."""
    vals = np.sort(np.asarray(bag, dtype=float))[::-1]
    return float(vals[:k].mean()), len(vals) >= k


def irssi_locate(state: IRssiState, bagged_readings, model: ChannelModel | None = None) -> Position:
    """Update per-node ranges by the differential path-loss step and trilaterate.

    ``bagged_readings`` is a per-node sequence of raw dBm samples (or a
    (samples, nodes) array).
    """
    model = model or state.model
    if isinstance(bagged_readings, np.ndarray) and bagged_readings.ndim == 2:
        bags = list(bagged_readings.T)
    else:
        bags = list(bagged_readings)
    if len(bags) != len(state.layout):
        raise ValueError("one bag per node is required")
    r_t = np.empty(len(bags))
    for i, bag in enumerate(bags):
        r_t[i], full = top_k_mean(bag, state.k)
        state.short_bags += not full
    step = distance_from_rssi(model, r_t) - distance_from_rssi(model, state.prev_rssi)
    state.distances = np.maximum(state.distances + step, model.min_distance)
    state.prev_rssi = r_t
    res = solve_trilateration(state.layout.positions, state.distances, state.position.as_array(), state.workspace)
    state.position = res.position
    return res.position


# --------------------------------------------------------------------------- PF-EKF

def ekf_predict(Y: np.ndarray, P: np.ndarray, F: np.ndarray, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return F @ Y, F @ P @ F.T + Q


def ekf_update(Y: np.ndarray, P: np.ndarray, X: np.ndarray, H: np.ndarray, R: np.ndarray,
               eps: float = 1e-9) -> tuple[np.ndarray, np.ndarray, bool]:
    """Kalman update; the flag reports whether the innovation covariance had to be regularised."""
    S = H @ P @ H.T + R
    regularised = False
    try:
        S_inv = np.linalg.inv(S)
        if not np.all(np.isfinite(S_inv)) or np.linalg.cond(S) > 1e15:
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        S_inv = np.linalg.inv(S + eps * np.eye(len(S)))
        regularised = True
    K = P @ H.T @ S_inv
    Y_new = Y + K @ (X - H @ Y)
    P_new = P @ (np.eye(len(Y)) - K @ H)
    return Y_new, 0.5 * (P_new + P_new.T), regularised


@dataclass
class PfEkfState:
    layout: NodeLayout
    model: ChannelModel
    workspace: Workspace
    rng: np.random.Generator
    config: PfEkfConfig = field(default_factory=PfEkfConfig)
    particles: np.ndarray | None = None
    Y: np.ndarray | None = None
    P: np.ndarray | None = None
    regularised_steps: int = 0
    last_observation: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.particles is None:
            self.particles = self.workspace.uniform(self.config.n_particles, self.rng)
        if self.Y is None:
            self.Y = self.workspace.center.as_array()
        if self.P is None:
            self.P = self.config.init_cov * np.eye(2)


def pf_ekf_locate(state: PfEkfState, snap: RssiSnapshot, model: ChannelModel | None = None) -> Position:
    """Particle filter on raw RSSI, whose weighted mean is the observation of a 2-D Kalman filter."""
    model = model or state.model
    cfg = state.config
    pts = state.particles
    if cfg.motion_std > 0:
        pts += state.rng.normal(0.0, cfg.motion_std, size=pts.shape)
    state.workspace.clip(pts)
    sd = cfg.rssi_std if cfg.rssi_std is not None else max(model.noise_std, 0.5)
    resid = snap.values[None, :] - model.field(pts, state.layout)
    w = weights_from_log(-0.5 * (resid ** 2).sum(axis=1) / sd ** 2)
    X = w @ pts
    state.particles = pts[multinomial_resample(w, state.rng)]
    Yp, Pp = ekf_predict(state.Y, state.P, cfg.F, cfg.Q)
    state.Y, state.P, reg = ekf_update(Yp, Pp, X, cfg.H, cfg.R)
    state.regularised_steps += reg
    state.last_observation = X
    return Position(float(state.Y[0]), float(state.Y[1]))
