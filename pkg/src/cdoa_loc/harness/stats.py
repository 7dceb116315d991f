"""Trend and paired-comparison statistics for the evaluation protocol."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats
from scipy.optimize import isotonic_regression


@dataclass(frozen=True)
class TrendResult:
    tau: float
    p_value: float  # two-sided


def mann_kendall(y: Sequence[float]) -> TrendResult:
    """Mann-Kendall trend test: Kendall's tau of ``y`` against its index."""
    y = np.asarray(y, dtype=float)
    if len(y) < 3:
        raise ValueError("need at least 3 points for a trend test")
    tau, p = stats.kendalltau(np.arange(len(y)), y)
    return TrendResult(float(tau), float(p))


@dataclass(frozen=True)
class IsotonicFit:
    fitted: np.ndarray
    max_residual: float
    curve_range: float

    @property
    def relative_residual(self) -> float:
        return self.max_residual / self.curve_range if self.curve_range > 0 else 0.0


def decreasing_fit(y: Sequence[float]) -> IsotonicFit:
    """Best non-increasing fit; a small residual means the curve is non-increasing up to noise."""
    y = np.asarray(y, dtype=float)
    fit = isotonic_regression(y, increasing=False).x
    return IsotonicFit(fit, float(np.abs(fit - y).max()), float(np.ptp(y)))


@dataclass(frozen=True)
class BootstrapResult:
    mean_diff: float
    low: float
    high: float

    @property
    def positive(self) -> bool:
        return self.low > 0.0


def paired_bootstrap(a: Sequence[float], b: Sequence[float], rng: np.random.Generator,
                     n_boot: int = 10_000, confidence: float = 0.95) -> BootstrapResult:
    """Percentile CI of mean(b - a) over paired samples, two-sided at ``confidence``."""
    d = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
    if d.ndim != 1 or len(d) < 2:
        raise ValueError("need at least two paired samples")
    idx = rng.integers(0, len(d), size=(n_boot, len(d)))
    means = d[idx].mean(axis=1)
    tail = 0.5 * (1.0 - confidence)
    lo, hi = np.quantile(means, [tail, 1.0 - tail])
    return BootstrapResult(float(d.mean()), float(lo), float(hi))
