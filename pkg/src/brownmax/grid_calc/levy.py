"""Tail ``G_a(r) = nu_a(r, inf)`` of the Lévy measure of the subordinator whose range is ``R_a``.

Three independent routes produce ``G_a`` on a uniform grid:

``series``
    alternating series ``sum_n (-1)^n u * h_inf^{*n}`` with
    ``u(r) = sqrt(2 / (pi r))``;
``volterra_abel``
    forward marching of ``int_0^x (y ^ a)^{-1/2} G_a(x - y) dy = sqrt(2 pi)``;
``recursion_hb``
    forward marching of ``int_0^x h_{a,b}(y) G_a(x - y) dy = G_a(b) - G_a(x v b)``.

All three carry the ``sqrt(2/pi) r^{-1/2}`` singularity at 0 explicitly in
``GridFunction.singular_coeff`` and solve for the regular remainder, which is
identically zero on ``(0, a]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..errors import DomainError, InvalidParams, ResolutionTooCoarse, SingularStep
from .grid import GridFunction, cell_moments, conv_grid, singular_conv
from .kernels import ProcessParams, eval_h, eval_h_inf

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
SQRT_2PI = math.sqrt(2.0 * math.pi)

METHODS = ("series", "volterra_abel", "recursion_hb")


@dataclass(frozen=True)
class LevyTail:
    a: float
    grid: GridFunction
    method: str

    def __call__(self, r):
        return self.grid(r)


def levy_measure_tail_closed(a: float, r: float) -> float:
    """``nu_a[r, inf) = sqrt(2 / (pi r))``, valid for ``0 < r <= a``."""
    if not (0 < r <= a):
        raise DomainError(f"closed form only holds on (0, a]; got r={r}, a={a}")
    return math.sqrt(2.0 / (math.pi * r))


def _n_nodes(dx: float, r_max: float) -> int:
    if not (dx > 0 and r_max > 0):
        raise InvalidParams("dx and r_max must be positive")
    return int(round(r_max / dx)) + 1


def _check_resolution(dx: float, scale: float, ratio: int, name: str) -> None:
    if dx > scale / ratio * (1 + 1e-12):
        raise ResolutionTooCoarse(f"dx={dx} exceeds {name}/{ratio}={scale / ratio}")


def levy_tail_series(a: float, dx: float, r_max: float) -> LevyTail:
    _check_resolution(dx, a, 100, "a")
    n = _n_nodes(dx, r_max)
    x = dx * np.arange(n)
    u = GridFunction(0.0, dx, np.zeros(n), SQRT_2_OVER_PI)
    h = GridFunction(0.0, dx, eval_h_inf(a, x))
    n_terms = math.ceil(x[-1] / a) + 1
    term = conv_grid(u, h)
    regular = -term.values
    for k in range(2, n_terms + 1):
        term = conv_grid(term, h)
        regular = regular + (-1) ** k * term.values
    return LevyTail(a, GridFunction(0.0, dx, regular, SQRT_2_OVER_PI), "series")


# -- Volterra equation with the (y ^ a)^{-1/2} kernel ----------------------------------

def abel_kernel_moments(a: float, dx: float, n_cells: int):
    """Cell weights for ``k(y) = (y ^ a)^{-1/2}`` against piecewise-linear data."""
    sa = math.sqrt(a)

    def cum0(y):
        return np.where(y <= a, 2.0 * np.sqrt(np.minimum(y, a)), 2.0 * sa + (y - a) / sa)

    def cum1(y):
        return np.where(y <= a, (2.0 / 3.0) * np.minimum(y, a) ** 1.5,
                        (2.0 / 3.0) * a * sa + (y * y - a * a) / (2.0 * sa))

    return cell_moments(cum0, cum1, dx, n_cells)


def abel_singular_part(a: float, x) -> np.ndarray:
    """``int_0^x (y ^ a)^{-1/2} (x - y)^{-1/2} dy`` in closed form."""
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        beyond = 2.0 * np.arcsin(np.sqrt(a / np.maximum(x, a))) + 2.0 * np.sqrt(np.maximum(x - a, 0.0) / a)
    return np.where(x <= a, math.pi, beyond)


def abel_residual(G: GridFunction, a: float) -> np.ndarray:
    """``int_0^x (y ^ a)^{-1/2} G(x - y) dy - sqrt(2 pi)`` at every node ``x > 0``.

    Entry 0 (``x = 0``) is set to 0; the equation is only meaningful for ``x > 0``.
    """
    n = G.n
    left, right = abel_kernel_moments(a, G.dx, n - 1)
    rv = G.values
    reg = fftconvolve(rv, left)[:n]
    reg[:n - 1] -= left * rv[0]
    reg[1:] += fftconvolve(rv, right)[:n - 1]
    total = G.singular_coeff * abel_singular_part(a, G.x) + reg - SQRT_2PI
    total[0] = 0.0
    return total


def levy_tail_volterra_abel(a: float, dx: float, r_max: float) -> LevyTail:
    """March the first-kind Abel-type equation node by node.

    The newest unknown enters only through the first cell, whose exact
    kernel moment ``(4/3) sqrt(dx)`` is the pivot of each step.
    """
    _check_resolution(dx, a, 100, "a")
    n = _n_nodes(dx, r_max)
    x = dx * np.arange(n)
    left, right = abel_kernel_moments(a, dx, n - 1)
    pivot = left[0]
    if not pivot > np.finfo(float).tiny:
        raise SingularStep(f"leading kernel moment underflows at dx={dx}")
    rhs = SQRT_2PI - SQRT_2_OVER_PI * abel_singular_part(a, x)
    R = np.zeros(n)
    start = int(np.searchsorted(x, a, side="right"))
    for m in range(start, n):
        # cells j = 0..m-1 : left[j] R[m-j] + right[j] R[m-1-j]
        known = left[1:m] @ R[m - 1:0:-1] + right[:m] @ R[m - 1::-1]
        R[m] = (rhs[m] - known) / pivot
    return LevyTail(a, GridFunction(0.0, dx, R, SQRT_2_OVER_PI), "volterra_abel")


def levy_tail_recursion(p: ProcessParams, dx: float, r_max: float, kernel=None) -> LevyTail:
    """March ``G_a(x) = G_a(b) - int_b^x h_{a,b}(y) G_a(x - y) dy`` for ``x >= b``.

    ``kernel`` replaces ``h_{a,b}`` (vectorised callable); used for negative controls.
    """
    _check_resolution(dx, p.b, 50, "b")
    a, b = p.a, p.b
    n = _n_nodes(dx, r_max)
    x = dx * np.arange(n)
    hv = eval_h(p, x) if kernel is None else np.asarray(kernel(x), dtype=float)
    h = GridFunction(0.0, dx, hv)
    # h * (C s^{-1/2}) at every node, by product integration
    sing = singular_conv(SQRT_2_OVER_PI, h)
    with np.errstate(divide="ignore"):
        closed = np.where(x > 0, SQRT_2_OVER_PI / np.sqrt(x), 0.0)
    G_b = SQRT_2_OVER_PI / math.sqrt(b)
    rhs = G_b - closed - sing
    R = np.zeros(n)
    start = int(np.searchsorted(x, b, side="right"))
    for m in range(start, n):
        # trapezoid over y = k dx, k = 1..m-1 (h(0) = 0 and R(0) = 0 drop the ends)
        R[m] = rhs[m] - dx * (hv[1:m] @ R[m - 1:0:-1])
    return LevyTail(a, GridFunction(0.0, dx, R, SQRT_2_OVER_PI), "recursion_hb")


def solve_levy_tail(a: float, method: str, dx: float, r_max: float, b: float | None = None) -> LevyTail:
    if method == "series":
        return levy_tail_series(a, dx, r_max)
    if method in ("volterra", "volterra_abel"):
        return levy_tail_volterra_abel(a, dx, r_max)
    if method in ("recursion", "recursion_hb"):
        return levy_tail_recursion(ProcessParams(a, a if b is None else b), dx, r_max)
    raise InvalidParams(f"unknown method {method!r}")


def closed_form_G(a: float, r):
    """Known closed form of ``G_a`` on ``(0, 2a]``; ``nan`` beyond."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.sqrt(2.0 / (math.pi * r))
        out = np.where(r <= a, u, 2.0 * u - math.sqrt(2.0 / (math.pi * a)))
    out = np.where((r > 0) & (r <= 2 * a), out, np.nan)
    return out[()] if out.ndim == 0 else out
