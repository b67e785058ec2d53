"""Two-sided Brownian paths on a uniform grid with reproducible per-path streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParams


@dataclass(frozen=True)
class PathConfig:
    dt: float
    horizon: float
    seed: int = 0
    n_paths: int = 1

    def __post_init__(self):
        if not (self.dt > 0 and self.horizon > 0):
            raise InvalidParams("dt and horizon must be positive")
        if self.n_paths < 1:
            raise InvalidParams("n_paths must be >= 1")
        if not (0 <= self.seed < 2 ** 64):
            raise InvalidParams("seed must be a 64-bit unsigned integer")

    @property
    def n_side(self) -> int:
        """Steps on each side of 0."""
        return int(round(self.horizon / self.dt))

    def check_reaches(self, a: float, b: float) -> None:
        if self.dt > b / 200 * (1 + 1e-12):
            raise InvalidParams(f"dt={self.dt} exceeds b/200={b / 200}")
        if self.horizon < 10 * (a + b):
            raise InvalidParams(f"horizon={self.horizon} is shorter than 10(a+b)={10 * (a + b)}")


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """Samples of ``B`` at ``(k - origin) * dt``, ``k = 0..len-1``, with ``B_0 = 0``."""

    dt: float
    values: np.ndarray
    origin: int

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.values.size) - self.origin) * self.dt

    @property
    def horizon(self) -> float:
        return self.origin * self.dt

    def reversed(self) -> "BrownianPath":
        """Time-reversed path ``t -> B_{-t}``; the origin index is mirrored."""
        return BrownianPath(self.dt, self.values[::-1].copy(), self.values.size - 1 - self.origin)

    def shifted(self, c: float) -> "BrownianPath":
        return BrownianPath(self.dt, self.values + c, self.origin)


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Independent generator for path ``path_index`` under master ``seed``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(path_index,))
    return np.random.Generator(np.random.Philox(ss))


def gen_brownian(cfg: PathConfig, path_index: int, dt: float | None = None) -> BrownianPath:
    """Glue two independent one-sided walks at 0.

    ``dt`` overrides ``cfg.dt``; the stream depends only on ``(seed, path_index)``.
    """
    dt = cfg.dt if dt is None else dt
    n = int(round(cfg.horizon / dt))
    rng = path_rng(cfg.seed, path_index)
    steps = rng.standard_normal((2, n)) * np.sqrt(dt)
    right = np.cumsum(steps[0])
    left = np.cumsum(steps[1])
    values = np.concatenate((left[::-1], [0.0], right))
    return BrownianPath(dt, values, n)


def coarsen(path: BrownianPath, factor: int) -> BrownianPath:
    """Subsample every ``factor``-th node, keeping the node at 0."""
    start = path.origin % factor
    values = path.values[start::factor]
    return BrownianPath(path.dt * factor, values.copy(), (path.origin - start) // factor)
