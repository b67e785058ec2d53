"""Statistics pooled over detected point samples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from ..errors import InsufficientData
from ..grid_calc.grid import GridFunction
from .detect import PointSample


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float


def estimate_intensity(samples: Sequence[PointSample]) -> Estimate:
    """Points per unit time; the stderr comes from the spread of per-path rates."""
    if len(samples) < 2:
        raise InsufficientData("need at least two samples")
    counts = np.array([s.count for s in samples], dtype=float)
    lengths = np.array([s.window_length for s in samples])
    mean = counts.sum() / lengths.sum()
    rates = counts / lengths
    # ratio estimator: per-path residuals weighted by window length
    w = lengths / lengths.mean()
    resid = w * (rates - mean)
    stderr = math.sqrt(np.sum(resid ** 2) / (len(samples) * (len(samples) - 1)))
    return Estimate(float(mean), float(stderr))


@dataclass(frozen=True, eq=False)
class PairCorrelation:
    """Binned estimate of ``h(r) = f_2(0, r) / c``."""

    grid: GridFunction      # bin centres as nodes
    stderr: np.ndarray
    counts: np.ndarray
    bin_width: float
    origin: float = 0.0

    @property
    def centers(self) -> np.ndarray:
        return self.grid.x

    def at(self, r: float) -> tuple[float, float, int]:
        """``(estimate, stderr, count)`` of the bin containing ``r``."""
        k = int(math.floor((r - self.origin) / self.bin_width))
        return float(self.grid.values[k]), float(self.stderr[k]), int(self.counts[k])


def pair_distances(times: np.ndarray, r_max: float) -> np.ndarray:
    """All ``t_j - t_i < r_max`` with ``i < j`` for sorted ``times``."""
    out = []
    for lag in range(1, times.size):
        d = times[lag:] - times[:-lag]
        d = d[d < r_max]
        if d.size == 0:
            break
        out.append(d)
    return np.concatenate(out) if out else np.empty(0)


def estimate_pair_correlation(samples: Sequence[PointSample], bin_width: float,
                              r_max: float, intensity: Estimate | None = None,
                              origin: float = 0.0) -> PairCorrelation:
    """Histogram of pair distances normalised to ``h``.

    Bins are ``[origin + k w, origin + (k+1) w)`` up to ``r_max``; shifting
    ``origin`` by half a bin puts centres on round distances.

    A pair at distance ``r`` is counted when both points lie in the valid
    window, so the exposure of a bin centred at ``r`` is
    ``sum_paths (|W| - r) * bin_width`` times the intensity.
    """
    if len(samples) < 2:
        raise InsufficientData("need at least two samples")
    dt = max(s.dt for s in samples)
    if bin_width < 2 * dt:
        raise InsufficientData(f"bin_width={bin_width} below 2*dt={2 * dt}")
    n_bins = int(math.floor((r_max - origin) / bin_width + 1e-9))
    edges = origin + bin_width * np.arange(n_bins + 1)
    counts = np.zeros(n_bins)
    for s in samples:
        counts += np.histogram(pair_distances(s.times, edges[-1]), bins=edges)[0]
    intensity = estimate_intensity(samples) if intensity is None else intensity
    centers = 0.5 * (edges[1:] + edges[:-1])
    total_len = sum(s.window_length for s in samples)
    exposure = (total_len - len(samples) * centers) * bin_width * intensity.mean
    est = counts / exposure
    rel_c = intensity.stderr / intensity.mean
    stderr = np.sqrt(counts + (counts * rel_c) ** 2) / exposure
    grid = GridFunction(centers[0], bin_width, est)
    return PairCorrelation(grid, stderr, counts, bin_width, origin)


@dataclass(frozen=True)
class GapStatistics:
    n: int
    mean: float
    mean_stderr: float
    lag1_corr: float
    lag1_stderr: float
    ks_distance: float
    ks_pvalue: float
    ks_critical_1pct: float


def pooled_gaps(samples: Sequence[PointSample]) -> np.ndarray:
    return np.concatenate([s.gaps for s in samples]) if samples else np.empty(0)


def reference_cdf(g_ref: GridFunction):
    cum = g_ref.cumulative_integral()
    x = g_ref.x

    def cdf(r):
        return np.interp(r, x, cum, left=0.0, right=cum[-1])

    return cdf


def gap_statistics(samples: Sequence[PointSample], g_ref: GridFunction) -> GapStatistics:
    """Mean, lag-1 autocorrelation and KS distance of gaps between detected points."""
    gaps = pooled_gaps(samples)
    pairs = [np.column_stack((s.gaps[:-1], s.gaps[1:])) for s in samples if s.count >= 3]
    if gaps.size < 10 or not pairs:
        raise InsufficientData("too few gaps")
    pairs = np.concatenate(pairs)
    lag1 = float(np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1])
    ks = stats.kstest(gaps, reference_cdf(g_ref))
    return GapStatistics(
        n=int(gaps.size),
        mean=float(gaps.mean()),
        mean_stderr=float(gaps.std(ddof=1) / math.sqrt(gaps.size)),
        lag1_corr=lag1,
        lag1_stderr=1.0 / math.sqrt(pairs.shape[0]),
        ks_distance=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
        ks_critical_1pct=float(stats.kstwo.ppf(0.99, gaps.size)),
    )


def tail_ratio(gap_lengths: np.ndarray, r1: float, r2: float) -> Estimate:
    """Fraction of gaps ``>= r1`` that are also ``>= r2`` (``r1 < r2``), binomial stderr."""
    n1 = np.count_nonzero(gap_lengths >= r1)
    n2 = np.count_nonzero(gap_lengths >= r2)
    if n1 == 0:
        raise InsufficientData(f"no gaps >= {r1}")
    p = n2 / n1
    return Estimate(float(p), float(math.sqrt(max(p * (1 - p), 1e-300) / n1)))
