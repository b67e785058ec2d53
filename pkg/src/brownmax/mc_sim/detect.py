"""Detection of ``M_{a,b}`` and ``R_a`` on a discretised path."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ResolutionTooCoarse
from ..grid_calc.kernels import ProcessParams
from .paths import BrownianPath
from .window import sliding_max

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PointSample:
    """Detected points of ``M_{a,b}`` on one path.

    ``valid_window`` is the set of times whose whole window ``[t-a, t+b]``
    fits inside the path; only those times are eligible.
    """

    times: np.ndarray
    valid_window: tuple[float, float]
    dt: float = 0.0

    @property
    def window_length(self) -> float:
        lo, hi = self.valid_window
        return hi - lo

    @property
    def count(self) -> int:
        return int(self.times.size)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(self.times)


def _steps(length: float, dt: float) -> int:
    return max(1, int(round(length / dt)))


def detect_m_ab_indices(x: np.ndarray, na: int, nb: int) -> np.ndarray:
    """Indices ``i`` with ``x[i] > max x[i-na : i]`` and ``x[i] >= max x[i+1 : i+nb+1]``.

    The asymmetric comparison resolves exact ties in favour of the earliest index.
    """
    n = x.size
    lo, hi = na, n - 1 - nb
    if hi < lo:
        return np.empty(0, dtype=np.intp)
    i = np.arange(lo, hi + 1)
    left = sliding_max(x, na)[i - na]
    right = sliding_max(x, nb)[i + 1]
    xi = x[i]
    hit = (xi > left) & (xi >= right)
    ties = np.count_nonzero(hit & (xi == right))
    if ties:
        log.warning("%d exact ties with the right window resolved to the earliest index", ties)
    return i[hit]


def detect_m_ab(path: BrownianPath, p: ProcessParams) -> PointSample:
    dt = path.dt
    if dt > p.b / 200 * (1 + 1e-12):
        raise ResolutionTooCoarse(f"dt={dt} exceeds b/200={p.b / 200}")
    na, nb = _steps(p.a, dt), _steps(p.b, dt)
    idx = detect_m_ab_indices(path.values, na, nb)
    times = (idx - path.origin) * dt
    n = path.values.size
    window = ((na - path.origin) * dt, (n - 1 - nb - path.origin) * dt)
    return PointSample(times, window, dt)


def detect_r_a_indices(y: np.ndarray, na: int) -> np.ndarray:
    """Indices where ``y`` equals its running maximum over the trailing ``na`` steps."""
    padded = np.concatenate((np.full(na, -np.inf), y))
    trailing = sliding_max(padded, na + 1)
    return np.flatnonzero(y >= trailing)


def runs(indices: np.ndarray) -> np.ndarray:
    """Maximal runs of consecutive integers as ``(first, last)`` rows."""
    if indices.size == 0:
        return np.empty((0, 2), dtype=np.intp)
    breaks = np.flatnonzero(np.diff(indices) > 1)
    starts = np.concatenate(([indices[0]], indices[breaks + 1]))
    ends = np.concatenate((indices[breaks], [indices[-1]]))
    return np.column_stack((starts, ends))


@dataclass(frozen=True, eq=False)
class RegenerativeSample:
    """``R_a`` on ``[0, T]`` as grid-index runs (relative to ``t = 0``)."""

    runs: np.ndarray
    dt: float

    @property
    def intervals(self) -> np.ndarray:
        return self.runs * self.dt

    @property
    def gap_starts(self) -> np.ndarray:
        return self.runs[:-1, 1] * self.dt

    @property
    def gap_lengths(self) -> np.ndarray:
        """Lengths of the bounded complementary intervals."""
        return (self.runs[1:, 0] - self.runs[:-1, 1]) * self.dt

    def long_gap_starts(self, b: float, after: float = 0.0) -> np.ndarray:
        """Starts of gaps longer than ``b`` (in whole steps) that begin after ``after``."""
        nb = _steps(b, self.dt)
        steps = self.runs[1:, 0] - self.runs[:-1, 1]
        starts = self.runs[:-1, 1]
        keep = (steps > nb) & (starts * self.dt > after)
        return starts[keep] * self.dt


def detect_r_a(path: BrownianPath, a: float) -> RegenerativeSample:
    dt = path.dt
    if dt > a / 200 * (1 + 1e-12):
        raise ResolutionTooCoarse(f"dt={dt} exceeds a/200={a / 200}")
    y = path.values[path.origin:]
    idx = detect_r_a_indices(y, _steps(a, dt))
    return RegenerativeSample(runs(idx), dt)
