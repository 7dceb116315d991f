"""Particle-count sweep of CDOA-PF with and without the odometry motion model."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ExperimentConfig
from .experiment import run_experiment, trial_plan, with_hyperparams


@dataclass
class AblationCurves:
    counts: list[int]
    # (len(counts), n_trials) RMSE, rows paired by trial across counts and odometry settings
    with_odometry: np.ndarray
    without_odometry: np.ndarray
    meta: dict = field(default_factory=dict)

    def mean_curve(self, odometry: bool = True) -> np.ndarray:
        return (self.with_odometry if odometry else self.without_odometry).mean(axis=1)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["n_particles", "odometry", "rmse_mean_m", "rmse_std_m", "trials"])
            for odo, arr in ((True, self.with_odometry), (False, self.without_odometry)):
                for n, row in zip(self.counts, arr):
                    w.writerow([n, int(odo), f"{row.mean():.6f}", f"{row.std():.6f}", len(row)])


def ablate_particles(counts: Sequence[int], protocol: ExperimentConfig, jobs: int = 1) -> AblationCurves:
    """Run the CDOA-PF protocol at each particle count, odometry on and off, on shared seeds."""
    counts = [int(n) for n in counts]
    if counts != sorted(counts) or not counts or counts[0] < 1:
        raise ValueError("counts must be positive and sorted ascending")
    specs = trial_plan(protocol)
    curves = {}
    for odo in (True, False):
        rows = []
        for n in counts:
            cfg = with_hyperparams(protocol, n_particles=n, use_odometry=odo)
            res = run_experiment(cfg, ["cdoa-pf"], jobs=jobs, specs=specs)
            rows.append([r.rmse for r in res])
        curves[odo] = np.array(rows)
    return AblationCurves(counts, curves[True], curves[False],
                          {"trials": len(specs), "seed": protocol.seed})
