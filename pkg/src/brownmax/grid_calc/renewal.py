"""Renewal structure of ``M_{a,b}``: gap density, first-point density, gap Laplace transform."""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError, InvalidParams, ResolutionTooCoarse
from ..special_fn import laplace_G_closed, tail_constants
from .grid import ExponentialTail, GridFunction, conv_grid, laplace_numeric
from .kernels import ProcessParams, eval_h
from .levy import LevyTail


def gap_density_series(p: ProcessParams, dx: float, r_max: float, kernel=None) -> GridFunction:
    """Gap density ``g = sum_{n>=1} (-1)^{n-1} h^{*n}`` on ``[0, r_max]``.

    Because ``h^{*n}`` vanishes below ``n b`` the truncated sum is exact on the
    window; only discretisation error remains.
    """
    if dx > p.b / 50 * (1 + 1e-12):
        raise ResolutionTooCoarse(f"dx={dx} exceeds b/50={p.b / 50}")
    if not r_max > 0:
        raise InvalidParams("r_max must be positive")
    n = int(round(r_max / dx)) + 1
    x = dx * np.arange(n)
    hv = eval_h(p, x) if kernel is None else np.asarray(kernel(x), dtype=float)
    h = GridFunction(0.0, dx, hv)
    n_terms = math.ceil(x[-1] / p.b) + 1
    nonzero = np.flatnonzero(hv)
    support = x[nonzero[0]] - dx if nonzero.size else x[-1]
    term = h
    total = h.values.copy()
    for k in range(2, n_terms + 1):
        term = conv_grid(term, h)
        # h^{*k} vanishes below k times the support start of h; drop FFT round-off there
        term = GridFunction(0.0, dx, np.where(x[:term.n] <= k * support, 0.0, term.values))
        total += (-1) ** (k - 1) * term.values
    return GridFunction(0.0, dx, total)


def exponential_tail_rate(p: ProcessParams) -> float:
    """Decay rate ``rho / a`` used to complete gap integrals beyond the grid."""
    return tail_constants().rate_for_a(p.a)


def density_moments(g: GridFunction, rate: float) -> tuple[float, float]:
    """Mass and mean of a grid density, completed with ``g(R) exp(-rate (r - R))`` beyond ``R``."""
    x = g.x
    v = g.values
    mass = np.trapezoid(v, x)
    mean = np.trapezoid(x * v, x)
    end, g_end = x[-1], v[-1]
    mass += g_end / rate
    mean += g_end * (end / rate + 1.0 / rate ** 2)
    return float(mass), float(mean)


def first_point_density(p: ProcessParams, g: GridFunction, t):
    """Density of the first point after 0: ``c (1 - int_0^t g)``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be non-negative")
    cdf = np.interp(t, g.x, g.cumulative_integral(), left=0.0, right=np.nan)
    out = p.intensity * np.clip(1.0 - cdf, 0.0, None)
    out = np.where(t <= p.b, p.intensity, out)
    return out[()] if out.ndim == 0 else out


def joint_T0_T1_density(p: ProcessParams, g: GridFunction, t0: float, t1: float) -> float:
    """Joint density of the last point ``T0 <= 0`` and first point ``T1 > 0``."""
    if not (t0 < 0 < t1):
        raise DomainError(f"need t0 < 0 < t1, got t0={t0}, t1={t1}")
    return float(p.intensity * max(float(g(t1 - t0)), 0.0))


def small_jump_integral(b: float, theta: float) -> float:
    """``int_0^b (1 - exp(-theta x)) x^{-3/2} dx`` in closed form."""
    return (-2.0 * (1.0 - math.exp(-theta * b)) / math.sqrt(b)
            + 2.0 * math.sqrt(math.pi * theta) * math.erf(math.sqrt(theta * b)))


def gap_laplace_via_levy(a: float, b: float, theta: float, G: LevyTail | None = None) -> float:
    """``E exp(-theta (T2 - T1))`` from the Lévy measure of ``sigma^a``.

    The Laplace transform of ``G_a`` is the Kummer closed form unless a solved
    tail ``G`` is supplied, in which case its numeric transform (with
    exponential tail completion) is used instead.
    """
    if not (0 < b <= a):
        raise DomainError(f"need 0 < b <= a, got a={a}, b={b}")
    if not theta > 0:
        raise InvalidParams("theta must be positive")
    if G is None:
        LG = laplace_G_closed(a, theta)
    else:
        LG = laplace_numeric(G.grid, theta, ExponentialTail(tail_constants().rate_for_a(a)))
    denom = (2.0 / math.sqrt(b) + small_jump_integral(b, theta)) / math.sqrt(2.0 * math.pi)
    return 1.0 - theta * LG / denom


def mean_gap_from_laplace(a: float, b: float, eps: float = 1e-4) -> float:
    """``-d/dtheta`` of the gap Laplace transform at 0, by a one-sided difference."""
    return (1.0 - gap_laplace_via_levy(a, b, eps)) / eps
