"""Seeded simulation of one trajectory walk and its evaluation by one method."""

from __future__ import annotations

import math
import time
import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..channel import ChannelModel, sample_readings
from ..core import NodeLayout, Position, Workspace
from .methods import Hyperparams, MethodContext, Observation, make_localizer
from .trajectory import Trajectory


@dataclass(frozen=True)
class Estimate:
    truth: Position
    estimate: Position | None
    iter_time: float  # s

    @property
    def error(self) -> float:
        return math.nan if self.estimate is None else self.truth.distance_to(self.estimate)


def rmse_of(estimates: Sequence[Estimate]) -> float:
    sq = [(e.truth.x - e.estimate.x) ** 2 + (e.truth.y - e.estimate.y) ** 2
          for e in estimates if e.estimate is not None]
    return math.sqrt(sum(sq) / len(sq)) if sq else math.nan


@dataclass
class TrialResult:
    method: str
    estimates: list[Estimate]
    seed: int
    rmse: float = field(init=False)
    mean_tpi: float = field(init=False)
    median_tpi: float = field(init=False)
    missing: int = field(init=False)
    tags: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.rmse = rmse_of(self.estimates)
        times = np.array([e.iter_time for e in self.estimates])
        self.mean_tpi = float(times.mean()) if len(times) else math.nan
        self.median_tpi = float(np.median(times)) if len(times) else math.nan
        self.missing = sum(e.estimate is None for e in self.estimates)


def _streams(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    channel, methods = np.random.SeedSequence(seed).spawn(2)
    return channel, methods


def method_rng(seed: int, method: str) -> np.random.Generator:
    """Per-method generator: independent of the channel stream and of other methods."""
    base = _streams(seed)[1]
    return np.random.default_rng(np.random.SeedSequence(base.entropy,
                                                        spawn_key=base.spawn_key + (zlib.crc32(method.encode()),)))


def simulate_observations(layout: NodeLayout, model: ChannelModel, trajectory: Trajectory,
                          hp: Hyperparams, seed: int, dt: float = 1.0) -> list[Observation]:
    """Noisy readings and odometry along ``trajectory``; depends only on the seed, never on the method."""
    rng = np.random.default_rng(_streams(seed)[0])
    obs = []
    prev = None
    ids = tuple(layout.ids)
    for k, p in enumerate(trajectory.waypoints):
        raw = sample_readings(model, layout, p, hp.samples_per_step, rng)
        odo = None
        if prev is not None:
            d = np.array([p.x - prev.x, p.y - prev.y])
            if hp.odometry_noise > 0:
                d = d + rng.normal(0.0, hp.odometry_noise, size=2)
            odo = (float(d[0]), float(d[1]))
        prev = p
        obs.append(Observation(k * dt, raw, hp.window_len, ids, odo))
    return obs


def run_observations(method: str, ctx: MethodContext, truths: Sequence[Position], observations: Sequence[Observation],
                     hp: Hyperparams, seed: int) -> TrialResult:
    """Feed a prepared observation stream to a fresh localizer; only the step call is timed."""
    loc = make_localizer(method, ctx, hp, method_rng(seed, method))
    out = []
    clock = time.perf_counter
    for truth, ob in zip(truths, observations):
        t0 = clock()
        est = loc.step(ob)
        t1 = clock()
        out.append(Estimate(truth, est, t1 - t0))
    return TrialResult(method, out, seed)


def run_trial(method: str, layout: NodeLayout, model: ChannelModel, trajectory: Trajectory,
              hyperparams: Hyperparams | None = None, seed: int = 0,
              workspace: Workspace | None = None) -> TrialResult:
    hp = hyperparams or Hyperparams()
    if workspace is None:
        pts = layout.positions
        workspace = Workspace(pts[:, 0].min(), pts[:, 0].max(), pts[:, 1].min(), pts[:, 1].max())
    obs = simulate_observations(layout, model, trajectory, hp, seed)
    res = run_observations(method, MethodContext(layout, model, workspace), trajectory.waypoints, obs, hp, seed)
    res.tags["trajectory"] = trajectory.kind
    res.tags["noise_std"] = model.noise_std
    return res
