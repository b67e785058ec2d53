"""Per-path simulation jobs and their order-insensitive reduction."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..grid_calc.kernels import ProcessParams
from .detect import PointSample, detect_m_ab, detect_r_a
from .paths import PathConfig, coarsen, gen_brownian

log = logging.getLogger(__name__)


def max_workers() -> int:
    cap = os.environ.get("MAXPROC_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            log.warning("ignoring non-integer MAXPROC_THREADS=%r", cap)
    return n


@dataclass(frozen=True, eq=False)
class PathResult:
    index: int
    sample: PointSample
    fine_sample: PointSample | None = None
    regen_gaps: np.ndarray | None = None
    correspondence_mismatches: int = 0
    correspondence_checked: int = 0


@dataclass(eq=False)
class SimulationRun:
    params: ProcessParams
    config: PathConfig
    results: list[PathResult] = field(default_factory=list)

    @property
    def samples(self) -> list[PointSample]:
        return [r.sample for r in self.results]

    @property
    def fine_samples(self) -> list[PointSample]:
        return [r.fine_sample for r in self.results if r.fine_sample is not None]

    @property
    def regen_gaps(self) -> np.ndarray:
        parts = [r.regen_gaps for r in self.results if r.regen_gaps is not None]
        return np.concatenate(parts) if parts else np.empty(0)

    @property
    def correspondence(self) -> tuple[int, int]:
        return (sum(r.correspondence_mismatches for r in self.results),
                sum(r.correspondence_checked for r in self.results))

    def write_gaps_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path", "gap"])
            for r in self.results:
                for g in r.sample.gaps:
                    w.writerow([r.index, repr(float(g))])


def match_within(a: np.ndarray, b: np.ndarray, tol: float) -> int:
    """Number of elements of either set without a partner in the other within ``tol``."""
    if a.size == 0 or b.size == 0:
        return int(a.size + b.size)

    def unmatched(x, y):
        j = np.searchsorted(y, x)
        below = np.abs(x - y[np.maximum(j - 1, 0)])
        above = np.abs(x - y[np.minimum(j, y.size - 1)])
        return int(np.count_nonzero(np.minimum(below, above) > tol))

    return unmatched(a, b) + unmatched(b, a)


def run_path(cfg: PathConfig, p: ProcessParams, index: int, *, refine: bool = False,
             regenerative: bool = False) -> PathResult:
    """Simulate one path and detect on it.

    With ``refine`` the path is drawn at ``dt/2`` and the primary sample is
    detected on its even nodes, so both resolutions see the same Brownian path.
    """
    if refine:
        fine = gen_brownian(cfg, index, dt=cfg.dt / 2)
        path = coarsen(fine, 2)
        fine_sample = detect_m_ab(fine, p)
    else:
        path = gen_brownian(cfg, index)
        fine_sample = None
    sample = detect_m_ab(path, p)
    regen_gaps = None
    mismatches = checked = 0
    if regenerative:
        reg = detect_r_a(path, p.a)
        regen_gaps = reg.gap_lengths
        # a gap still open at the end of the path has no verifiable length
        t_hi = sample.valid_window[1]
        if reg.runs.shape[0]:
            t_hi = min(t_hi, reg.runs[-1, 0] * reg.dt - 0.5 * reg.dt)
        from_r = reg.long_gap_starts(p.b, after=p.a)
        from_r = from_r[from_r <= t_hi]
        from_m = sample.times[(sample.times > p.a) & (sample.times <= t_hi)]
        mismatches = match_within(from_r, from_m, 1.01 * path.dt)
        checked = int(max(from_r.size, from_m.size))
    return PathResult(index, sample, fine_sample, regen_gaps, mismatches, checked)


def simulate(p: ProcessParams, cfg: PathConfig, *, refine: bool = False,
             regenerative: bool = False, workers: int | None = None) -> SimulationRun:
    """Run ``cfg.n_paths`` independent jobs; results are ordered by path index."""
    cfg.check_reaches(p.a, p.b)
    workers = max_workers() if workers is None else workers
    jobs = range(cfg.n_paths)

    def job(i):
        return run_path(cfg, p, i, refine=refine, regenerative=regenerative)

    if workers <= 1:
        results = [job(i) for i in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, jobs))
    results.sort(key=lambda r: r.index)
    return SimulationRun(p, cfg, results)
