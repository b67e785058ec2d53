"""Closed-form kernels of the local-maximum point process.

``h_{a,b}(r)`` is the conditional intensity of a point at distance ``r`` to the
right of a given point of ``M_{a,b}``; multiplied by the intensity
``1 / (pi sqrt(ab))`` it gives the pair correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidParams


@dataclass(frozen=True)
class ProcessParams:
    """Reach thresholds: left reach ``a`` and right reach ``b`` with ``a >= b > 0``."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.b > 0 and self.a >= self.b):
            raise InvalidParams(f"need a >= b > 0, got a={self.a}, b={self.b}")

    @property
    def intensity(self) -> float:
        return 1.0 / (math.pi * math.sqrt(self.a * self.b))


def eval_h(p: ProcessParams, r):
    """Piecewise kernel ``h_{a,b}``; vectorised over ``r``."""
    a, b = p.a, p.b
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    with np.errstate(invalid="ignore", divide="ignore"):
        left = np.sqrt(np.maximum(r - b, 0.0) / b)
        right = np.sqrt(np.maximum(r - a, 0.0) / a)
        mid = (left + right) / (math.pi * r)
    out = np.where((r > b) & (r < a + b), mid, out)
    out = np.where(r >= a + b, p.intensity, out)
    return out[()] if out.ndim == 0 else out


def eval_h_inf(a: float, r):
    """Limit kernel ``h_{inf,a}(r) = 1_{r>a} sqrt((r-a)/a) / (pi r)`` of the Lévy-tail series."""
    r = np.asarray(r, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(r > a, np.sqrt(np.maximum(r - a, 0.0) / a) / (math.pi * r), 0.0)
    return out[()] if out.ndim == 0 else out


def eval_abel_kernel(a: float, y):
    """``(y ^ a)**-1/2`` for ``y > 0``; the kernel of the Lévy-tail convolution equation."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        out = 1.0 / np.sqrt(np.minimum(y, a))
    return out[()] if out.ndim == 0 else out


def correlation_fn(p: ProcessParams, times: Sequence[float], kernel=None) -> float:
    """n-point correlation function at sorted ``times``."""
    times = np.asarray(times, dtype=float)
    if times.size < 1:
        raise InvalidParams("need at least one time")
    if np.any(np.diff(times) < 0):
        raise InvalidParams("times must be sorted")
    kernel = (lambda r: eval_h(p, r)) if kernel is None else kernel
    return float(p.intensity * np.prod(kernel(np.diff(times))))


def corollary_laplace(alpha: float, beta: float) -> float:
    """``E exp(-(alpha G^2 + beta D^2) / 2)`` for the max-location triplet on a unit interval."""
    if alpha < 0 or beta < 0:
        raise InvalidParams("alpha and beta must be non-negative")
    denom = alpha + beta + alpha * beta
    if denom == 0.0:
        return 1.0
    return (alpha / math.sqrt(1 + alpha) + beta / math.sqrt(1 + beta)) / denom


@dataclass(frozen=True)
class HMaxRegime:
    repulsive: bool
    argmax: float
    maxval: float


def check_h_max_regime(p: ProcessParams, n_scan: int = 20001) -> HMaxRegime:
    """Locate the supremum of ``h_{a,b}`` by scanning ``(b, a+b]``.

    When no interior value beats the plateau ``1/(pi sqrt(ab))`` the points
    repel each other and the supremum is only reached for ``r >= a + b``.
    Ties with the plateau (the boundary case ``a = 4b``) count as repulsive.
    """
    a, b = p.a, p.b
    r = np.linspace(b, a + b, n_scan)[1:]
    # the interior candidate 2b is where r**-1 sqrt(r - b) peaks
    if b < 2 * b <= a + b:
        r = np.union1d(r, [2 * b])
    vals = eval_h(p, r)
    i = int(np.argmax(vals))
    plateau = p.intensity
    if vals[i] > plateau * (1 + 1e-12):
        return HMaxRegime(False, float(r[i]), float(vals[i]))
    return HMaxRegime(True, a + b, plateau)
