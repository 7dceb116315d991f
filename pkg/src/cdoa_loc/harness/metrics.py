"""Aggregation of trial results into RMSE / TPI summary tables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..core import NodeLayout, Position
from .methods import DISPLAY_NAMES, REGISTRY
from .trial import Estimate, TrialResult, rmse_of


@dataclass(frozen=True)
class SummaryRow:
    method: str
    trials: int
    rmse_mean: float
    rmse_std: float     # population std across trials
    tpi_mean_ms: float
    tpi_std_ms: float
    tpi_median_ms: float
    missing: int

    @property
    def label(self) -> str:
        return DISPLAY_NAMES.get(self.method, self.method)


def _order(method: str) -> tuple[int, str]:
    names = list(REGISTRY)
    return (names.index(method) if method in names else len(names), method)


def compute_metrics(results: Sequence[TrialResult]) -> list[SummaryRow]:
    """Per-method mean and population std of trial RMSE and TPI."""
    if not results:
        raise ValueError("no results to summarise")
    by_method: dict[str, list[TrialResult]] = {}
    for r in results:
        by_method.setdefault(r.method, []).append(r)
    rows = []
    for m in sorted(by_method, key=_order):
        rs = by_method[m]
        rmse = np.array([r.rmse for r in rs], dtype=float)
        tpi = np.array([r.mean_tpi for r in rs], dtype=float) * 1e3
        all_t = np.concatenate([[e.iter_time for e in r.estimates] for r in rs]) * 1e3
        rows.append(SummaryRow(m, len(rs), float(np.nanmean(rmse)), float(np.nanstd(rmse)),
                               float(tpi.mean()), float(tpi.std()), float(np.median(all_t)),
                               sum(r.missing for r in rs)))
    return rows


def split_rmse(result: TrialResult, layout: NodeLayout) -> tuple[float, float]:
    """RMSE of waypoints inside and outside the node layout's bounding box."""
    pts = layout.positions
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    inside, outside = [], []
    for e in result.estimates:
        ok = lo[0] <= e.truth.x <= hi[0] and lo[1] <= e.truth.y <= hi[1]
        (inside if ok else outside).append(e)
    return rmse_of(inside), rmse_of(outside)


_HEADER = ("method", "trials", "rmse_mean_m", "rmse_std_m", "tpi_mean_ms", "tpi_std_ms", "tpi_median_ms", "missing")


def _cells(r: SummaryRow) -> list[str]:
    return [r.label, str(r.trials), f"{r.rmse_mean:.4f}", f"{r.rmse_std:.4f}", f"{r.tpi_mean_ms:.4f}",
            f"{r.tpi_std_ms:.4f}", f"{r.tpi_median_ms:.4f}", str(r.missing)]


def summary_csv(rows: Iterable[SummaryRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(_HEADER)
        for r in rows:
            w.writerow([r.method] + _cells(r)[1:])


def summary_markdown(rows: Sequence[SummaryRow]) -> str:
    """Aligned Markdown table: RMSE and TPI as mean ± std."""
    head = ["Method", "RMSE (m)", "Average TPI (ms)", "Median TPI (ms)", "Trials", "Missing"]
    body = [[r.label, f"{r.rmse_mean:.2f} ± {r.rmse_std:.2f}", f"{r.tpi_mean_ms:.3f} ± {r.tpi_std_ms:.3f}",
             f"{r.tpi_median_ms:.3f}", str(r.trials), str(r.missing)] for r in rows]
    widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]

    def fmt(row):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |"
    lines = [fmt(head), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    lines += [fmt(b) for b in body]
    return "\n".join(lines) + "\n"


def results_csv(results: Iterable[TrialResult], path: str | Path) -> int:
    """One row per waypoint per trial."""
    n = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["method", "seed", "trajectory", "noise_std", "step", "truth_x", "truth_y",
                    "est_x", "est_y", "error_m", "iter_time_s"])
        for r in results:
            for k, e in enumerate(r.estimates):
                ex, ey = ("", "") if e.estimate is None else (repr(e.estimate.x), repr(e.estimate.y))
                err = "" if e.estimate is None else repr(e.error)
                w.writerow([r.method, r.seed, r.tags.get("trajectory", ""), r.tags.get("noise_std", ""), k,
                            repr(e.truth.x), repr(e.truth.y), ex, ey, err, repr(e.iter_time)])
                n += 1
    return n


def rmse_table(results: Sequence[TrialResult], key: str) -> dict[tuple[str, object], float]:
    """Mean RMSE per (method, tag value), e.g. key='noise_std'."""
    acc: dict[tuple[str, object], list[float]] = {}
    for r in results:
        acc.setdefault((r.method, r.tags.get(key)), []).append(r.rmse)
    return {k: float(np.nanmean(v)) for k, v in acc.items()}


def pooled_std(a: Sequence[float], b: Sequence[float]) -> float:
    return math.sqrt(0.5 * (np.var(a, ddof=1) + np.var(b, ddof=1)))


def load_results_csv(path: str | Path) -> list[TrialResult]:
    """Rebuild trial results from a per-waypoint results CSV."""
    groups: dict[tuple, list[Estimate]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            key = (row["method"], int(row["seed"]), row["trajectory"], row["noise_std"])
            est = None if row["est_x"] == "" else Position(float(row["est_x"]), float(row["est_y"]))
            groups.setdefault(key, []).append(
                Estimate(Position(float(row["truth_x"]), float(row["truth_y"])), est, float(row["iter_time_s"])))
    out = []
    for (method, seed, traj, noise), ests in groups.items():
        r = TrialResult(method, ests, seed)
        r.tags.update(trajectory=traj, noise_std=float(noise) if noise else "")
        out.append(r)
    return out
