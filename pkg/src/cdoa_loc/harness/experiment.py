"""Trial plans and paired multi-method execution over a configuration."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .config import ExperimentConfig
from .methods import Hyperparams, MethodContext
from .trajectory import Trajectory, generate_trajectory
from .trial import TrialResult, run_observations, simulate_observations

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialSpec:
    noise_std: float
    kind: str
    index: int
    seed: int


def trial_seed(base: int, kind_idx: int, index: int) -> int:
    """Seed shared by every noise level and method of one (trajectory, trial) pair.

    Sharing it across noise levels gives common random numbers: the noise
    draws at 4 dB are the 1 dB draws scaled by 4.
    """
    return int(np.random.SeedSequence([int(base), kind_idx, index]).generate_state(1)[0])


def trial_plan(cfg: ExperimentConfig) -> list[TrialSpec]:
    return [TrialSpec(float(noise), kind, i, trial_seed(cfg.seed, ki, i))
            for noise in cfg.channel.noise_levels
            for ki, kind in enumerate(cfg.trajectory.kinds)
            for i in range(cfg.trials)]


def _trajectory(cfg: ExperimentConfig, kind: str) -> Trajectory:
    return generate_trajectory(cfg.workspace.build(), kind, cfg.trajectory.step, cfg.trajectory.lane_spacing)


def run_spec(cfg: ExperimentConfig, spec: TrialSpec, methods: Sequence[str],
             hp: Hyperparams | None = None) -> list[TrialResult]:
    """All methods on one shared observation stream."""
    hp = hp or cfg.hyperparams
    ws = cfg.workspace.build()
    layout = cfg.layout.build(ws)
    model = cfg.channel.build(spec.noise_std)
    traj = _trajectory(cfg, spec.kind)
    obs = simulate_observations(layout, model, traj, hp, spec.seed)
    ctx = MethodContext(layout, model, ws)
    out = []
    for m in methods:
        r = run_observations(m, ctx, traj.waypoints, obs, hp, spec.seed)
        r.tags.update(trajectory=spec.kind, noise_std=spec.noise_std, trial=spec.index)
        out.append(r)
    return out


def _run_chunk(args) -> list[TrialResult]:
    cfg, specs, methods, hp = args
    return [r for s in specs for r in run_spec(cfg, s, methods, hp)]


def run_experiment(cfg: ExperimentConfig, methods: Sequence[str] | None = None, jobs: int = 1,
                   hp: Hyperparams | None = None, specs: Sequence[TrialSpec] | None = None) -> list[TrialResult]:
    """Run every trial spec; output order follows the plan regardless of ``jobs``."""
    methods = list(methods or cfg.methods())
    specs = list(specs if specs is not None else trial_plan(cfg))
    if jobs <= 1 or len(specs) <= 1:
        return _run_chunk((cfg, specs, methods, hp))
    chunks = [specs[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_chunk, [(cfg, c, methods, hp) for c in chunks]))
    per_spec = len(methods)
    ordered: list[TrialResult | None] = [None] * (len(specs) * per_spec)
    for j, part in enumerate(parts):
        for k, r in enumerate(part):
            spec_idx = j + (k // per_spec) * jobs
            ordered[spec_idx * per_spec + k % per_spec] = r
    return ordered  # type: ignore[return-value]


def with_hyperparams(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, hyperparams=replace(cfg.hyperparams, **changes))
