"""String-keyed registry of localization methods with a uniform step interface.

Every method receives the same :class:`Observation` per waypoint and picks
the input it consumes: the CDOA methods use the collaboration-window mean,
I-RSSI the raw sample bag, the single-shot baselines one instantaneous
sample (or the window mean when ``baseline_input="mean"``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Protocol

import numpy as np

from ..baselines import (BaselineConfig, DrssiGrid, IRssiState, PfEkfState, irssi_locate, pf_ekf_locate,
                         trilaterate, weighted_centroid)
from ..cdoa import CdoaMeasurement, CdoaSmoother, estimate_cdoa, sensor_stencils
from ..channel import ChannelModel, RssiSnapshot
from ..core import NodeLayout, NoSignalDirectionError, Position, Workspace
from ..localizers import GridState, MeasurementWindow, ParticleFilterState, em_step, make_bearing_model, pf_step


@dataclass
class Hyperparams:
    window_len: int = 30            # raw samples per node averaged into one snapshot
    alpha: float = 0.7              # EWMA weight of the newest bearing
    window_size: int = 5            # M, bearings kept in the likelihood window
    sigma: float = 0.3              # rad, bearing noise in the likelihood
    bearing_model: str = "sensors"
    gradient: str = "auto"
    em_resolution: float = 0.05
    pf_resolution: float = 0.08
    n_particles: int | None = 200   # None: one particle per pf_resolution cell
    pf_motion_std: float = 0.05     # m, jitter added on top of odometry
    pf_free_motion_std: float = 0.25  # m, random-walk transition when odometry is off
    resampling: str = "multinomial"
    use_odometry: bool = True
    odometry_noise: float = 0.0     # m, std of additive odometry error per step
    baseline_input: Literal["instant", "mean"] = "instant"
    wcl_mode: str = "raw_rssi"
    baselines: BaselineConfig = field(default_factory=BaselineConfig)

    def __post_init__(self) -> None:
        if isinstance(self.baselines, dict):
            self.baselines = BaselineConfig(**self.baselines)
        if self.window_len < 1 or self.window_size < 1:
            raise ValueError("window_len and window_size must be >= 1")
        if self.baseline_input not in ("instant", "mean"):
            raise ValueError("baseline_input must be 'instant' or 'mean'")

    @property
    def samples_per_step(self) -> int:
        return max(self.window_len, self.baselines.irssi_bag)


@dataclass(frozen=True)
class Observation:
    """Everything a node cluster reports at one waypoint."""

    timestamp: float
    raw: np.ndarray                 # (samples, n_nodes) dBm
    window_len: int
    node_ids: tuple[str, ...]
    odometry: tuple[float, float] | None = None

    def _snap(self, rows: np.ndarray, n: int) -> RssiSnapshot:
        return RssiSnapshot(self.timestamp, tuple(float(v) for v in rows), self.node_ids, n)

    @property
    def snapshot(self) -> RssiSnapshot:
        n = min(self.window_len, len(self.raw))
        return self._snap(self.raw[:n].mean(axis=0), n)

    @property
    def instant(self) -> RssiSnapshot:
        return self._snap(self.raw[0], 1)

    def bag(self, size: int) -> np.ndarray:
        return self.raw[:size]


@dataclass(frozen=True)
class MethodContext:
    layout: NodeLayout
    model: ChannelModel
    workspace: Workspace


class Localizer(Protocol):
    def step(self, obs: Observation) -> Position | None: ...


Factory = Callable[[MethodContext, Hyperparams, np.random.Generator], Localizer]
REGISTRY: dict[str, Factory] = {}
DISPLAY_NAMES: dict[str, str] = {}


def register(name: str, display: str | None = None):
    def deco(factory: Factory) -> Factory:
        REGISTRY[name] = factory
        DISPLAY_NAMES[name] = display or name
        return factory
    return deco


def method_names() -> list[str]:
    return list(REGISTRY)


def make_localizer(name: str, ctx: MethodContext, hp: Hyperparams, rng: np.random.Generator) -> Localizer:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown method {name!r}; registered: {', '.join(REGISTRY)}") from None
    return factory(ctx, hp, rng)


def _odometry(obs: Observation, hp: Hyperparams):
    return obs.odometry if hp.use_odometry else None


class _CdoaFrontEnd:
    def __init__(self, ctx: MethodContext, hp: Hyperparams):
        self.layout = ctx.layout
        self.hp = hp
        self.smoother = CdoaSmoother(hp.alpha)
        self.stencils = sensor_stencils(ctx.layout)
        self.bearing_model = make_bearing_model(hp.bearing_model, ctx.layout, ctx.model.min_distance)

    def measure(self, obs: Observation) -> CdoaMeasurement:
        """Bearings for this step; an exactly symmetric snapshot yields an all-NaN placeholder.

        The placeholder still carries the step's odometry into the window, and
        NaN terms drop out of the likelihood.
        """
        try:
            return estimate_cdoa(self.layout, obs.snapshot, self.smoother, self.hp.gradient, stencils=self.stencils)
        except NoSignalDirectionError:
            blank = (math.nan,) * len(self.layout)
            return CdoaMeasurement(math.nan, math.nan, obs.timestamp, None, blank, blank)

    def informative(self, window: MeasurementWindow) -> bool:
        return bool(np.isfinite(window.measured(self.bearing_model)).any())


_GRID_CACHE: dict[tuple, GridState] = {}


class CdoaEm(_CdoaFrontEnd):
    def __init__(self, ctx: MethodContext, hp: Hyperparams, rng: np.random.Generator):
        super().__init__(ctx, hp)
        key = (tuple(ctx.layout.ids), ctx.layout.positions.tobytes(), ctx.workspace, hp.em_resolution,
               hp.bearing_model, ctx.model.min_distance)
        grid = _GRID_CACHE.get(key)
        if grid is None:
            grid = _GRID_CACHE[key] = GridState.regular(ctx.workspace, hp.em_resolution, self.bearing_model)
        # share the expensive lattice table, keep per-trial weights separate
        self.grid = GridState(grid.centers, grid.model, grid.resolution, grid.origin, grid.snap_shifts)
        self.grid._table, self.grid._pad = grid._table, grid._pad
        self._shared = grid
        self.window = MeasurementWindow(hp.window_size, hp.sigma)

    def step(self, obs: Observation) -> Position | None:
        est = em_step(self.grid, self.measure(obs), self.window, _odometry(obs, self.hp))
        if self.grid._table is not self._shared._table:
            self._shared._table, self._shared._pad = self.grid._table, self.grid._pad
        return est if self.informative(self.window) else None


class CdoaPf(_CdoaFrontEnd):
    def __init__(self, ctx: MethodContext, hp: Hyperparams, rng: np.random.Generator):
        super().__init__(ctx, hp)
        self.state = ParticleFilterState.uniform(
            ctx.workspace, self.bearing_model, rng, hp.n_particles,
            window=MeasurementWindow(hp.window_size, hp.sigma), resolution=hp.pf_resolution,
            motion_std=hp.pf_motion_std if hp.use_odometry else hp.pf_free_motion_std,
            resampling=hp.resampling)

    def step(self, obs: Observation) -> Position | None:
        est = pf_step(self.state, self.measure(obs), _odometry(obs, self.hp))
        return est if self.informative(self.state.window) else None


class _SingleShot:
    def __init__(self, ctx: MethodContext, hp: Hyperparams):
        self.ctx, self.hp = ctx, hp

    def input(self, obs: Observation) -> RssiSnapshot:
        return obs.snapshot if self.hp.baseline_input == "mean" else obs.instant


@register("cdoa-em", "CDOA-EM")
def _make_em(ctx, hp, rng):
    return CdoaEm(ctx, hp, rng)


@register("cdoa-pf", "CDOA-PF")
def _make_pf(ctx, hp, rng):
    return CdoaPf(ctx, hp, rng)


@register("i-rssi", "I-RSSI")
def _make_irssi(ctx, hp, rng):
    class IRssi:
        def __init__(self):
            self.state = IRssiState(ctx.layout, ctx.model, hp.baselines.irssi_k,
                                    Position(*hp.baselines.irssi_initial), workspace=ctx.workspace)

        def step(self, obs):
            return irssi_locate(self.state, obs.bag(hp.baselines.irssi_bag))
    return IRssi()


@register("d-rssi", "D-RSSI")
def _make_drssi(ctx, hp, rng):
    class DRssi(_SingleShot):
        def __init__(self):
            super().__init__(ctx, hp)
            self.grid = DrssiGrid(ctx.layout, ctx.model, ctx.workspace, hp.baselines.grid_resolution)

        def step(self, obs):
            return self.grid.locate(self.input(obs).values)
    return DRssi()


@register("pf-ekf", "PF-EKF")
def _make_pfekf(ctx, hp, rng):
    class PfEkf(_SingleShot):
        def __init__(self):
            super().__init__(ctx, hp)
            self.state = PfEkfState(ctx.layout, ctx.model, ctx.workspace, rng, hp.baselines.pfekf)

        def step(self, obs):
            return pf_ekf_locate(self.state, self.input(obs))
    return PfEkf()


@register("trilateration", "Trilateration")
def _make_tri(ctx, hp, rng):
    class Tri(_SingleShot):
        def step(self, obs):
            return trilaterate(ctx.layout, self.input(obs), ctx.model, ctx.workspace).position
    return Tri(ctx, hp)


@register("wcl", "WCL")
def _make_wcl(ctx, hp, rng):
    class Wcl(_SingleShot):
        def step(self, obs):
            return weighted_centroid(ctx.layout, self.input(obs), hp.wcl_mode, ctx.model)
    return Wcl(ctx, hp)
