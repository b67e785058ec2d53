"""Uniform-grid carrier for densities with an optional ``r**-1/2`` singularity.

A :class:`GridFunction` represents

.. math::

    f(x) = C\\, x^{-1/2}\\, 1_{x > 0} + \\mathrm{reg}(x)

where ``reg`` is sampled at ``x0 + k*dx`` and ``C`` is ``singular_coeff``.
Functions are taken to vanish to the left of ``x0``.

Convolutions integrate the singular factor exactly on each cell against the
piecewise-linear interpolant of the other operand (product integration);
regular-regular products use the trapezoidal rule.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.signal import fftconvolve

from ..errors import DoubleSingularity, GridMismatch, InvalidParams

# relative tolerance when comparing grid steps
_DX_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridFunction:
    x0: float
    dx: float
    values: np.ndarray
    singular_coeff: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if not self.dx > 0:
            raise InvalidParams("dx must be positive")
        if values.ndim != 1 or values.size == 0:
            raise InvalidParams("values must be a non-empty 1-D array")
        if not np.all(np.isfinite(values)):
            raise InvalidParams("values must be finite")
        if self.singular_coeff != 0.0 and self.x0 != 0.0:
            raise InvalidParams("a singular part is only allowed with x0 == 0")

    @classmethod
    def sample(cls, func: Callable, dx: float, r_max: float, x0: float = 0.0,
               singular_coeff: float = 0.0) -> "GridFunction":
        """Sample a vectorised callable on ``[x0, x0 + r_max]``."""
        n = int(round(r_max / dx))
        x = x0 + dx * np.arange(n + 1)
        return cls(x0, dx, func(x), singular_coeff)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def x_end(self) -> float:
        return self.x0 + self.dx * (self.n - 1)

    def full_values(self) -> np.ndarray:
        """Values including the singular part; ``inf`` at ``x == 0`` when singular."""
        if self.singular_coeff == 0.0:
            return self.values.copy()
        x = self.x
        out = self.values.copy()
        with np.errstate(divide="ignore"):
            out += self.singular_coeff / np.sqrt(x)
        return out

    def __call__(self, x):
        """Piecewise-linear evaluation of the regular part plus the exact singular part.

        Outside the sampled range the regular part is 0 on the left and
        undefined (``nan``) on the right.
        """
        x = np.asarray(x, dtype=float)
        reg = np.interp(x, self.x, self.values, left=0.0, right=np.nan)
        reg = np.where(x < self.x0, 0.0, reg)
        if self.singular_coeff != 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                sing = np.where(x > 0, self.singular_coeff / np.sqrt(np.maximum(x, 0)), 0.0)
            reg = reg + sing
        return reg[()] if reg.ndim == 0 else reg

    def scaled(self, factor: float) -> "GridFunction":
        return GridFunction(self.x0, self.dx, factor * self.values,
                            factor * self.singular_coeff)

    def truncated(self, n: int) -> "GridFunction":
        return GridFunction(self.x0, self.dx, self.values[:n], self.singular_coeff)

    def cumulative_integral(self) -> np.ndarray:
        """``int_{x0}^{x_k} f`` at every node (trapezoid + exact singular part)."""
        reg = np.concatenate(([0.0], np.cumsum(0.5 * self.dx * (self.values[1:] + self.values[:-1]))))
        if self.singular_coeff != 0.0:
            reg = reg + 2.0 * self.singular_coeff * np.sqrt(self.x)
        return reg

    # -- serialisation -----------------------------------------------------

    def metadata(self) -> dict:
        return {"x0": self.x0, "dx": self.dx, "n": self.n,
                "singular_coeff": self.singular_coeff}

    def to_csv(self, path) -> None:
        """Write ``x,value`` rows (regular part) and a ``.json`` metadata sidecar."""
        path = os.fspath(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x", "value"])
            for xi, vi in zip(self.x, self.values):
                writer.writerow([repr(float(xi)), repr(float(vi))])
        with open(sidecar_path(path), "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_csv(cls, path) -> "GridFunction":
        path = os.fspath(path)
        with open(sidecar_path(path)) as fh:
            meta = json.load(fh)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        values = np.array([float(r["value"]) for r in rows])
        if values.size != meta["n"]:
            raise InvalidParams(f"{path}: expected {meta['n']} rows, found {values.size}")
        return cls(float(meta["x0"]), float(meta["dx"]), values, float(meta["singular_coeff"]))


def sidecar_path(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root + ".json"


def zeros_like(f: GridFunction) -> GridFunction:
    return GridFunction(f.x0, f.dx, np.zeros(f.n))


# -- product-integration weights -----------------------------------------------

def cell_moments(cum0: Callable, cum1: Callable, dx: float, n_cells: int):
    """Per-cell weights of ``int k(y) phi(y) dy`` for piecewise-linear ``phi``.

    ``cum0(y) = int_0^y k`` and ``cum1(y) = int_0^y s k(s) ds`` must be exact.
    On cell ``j`` (``[j dx, (j+1) dx]``) the integral equals
    ``left[j] * phi(j dx) + right[j] * phi((j+1) dx)``.
    """
    y = dx * np.arange(n_cells + 1)
    c0 = cum0(y)
    c1 = cum1(y)
    m0 = np.diff(c0)
    # first moment about the left node, scaled to the hat function rising on the cell
    m1 = (np.diff(c1) - y[:-1] * m0) / dx
    left = m0 - m1
    right = m1
    return left, right


def sqrt_kernel_moments(dx: float, n_cells: int):
    """Cell weights for the kernel ``y**-1/2``."""
    return cell_moments(lambda y: 2.0 * np.sqrt(y),
                        lambda y: (2.0 / 3.0) * y ** 1.5, dx, n_cells)


# -- convolution -----------------------------------------------------------------

def _check_same_dx(f: GridFunction, g: GridFunction) -> None:
    if abs(f.dx - g.dx) > _DX_RTOL * max(f.dx, g.dx):
        raise GridMismatch(f"grid steps differ: {f.dx} vs {g.dx}")


def _trapezoid_conv(fv: np.ndarray, gv: np.ndarray, dx: float, n: int) -> np.ndarray:
    full = fftconvolve(fv[:n], gv[:n])[:n]
    # trapezoid end corrections: halve the k = 0 and k = m terms
    m = np.arange(n)
    full = full - 0.5 * (fv[0] * gv[m] + fv[m] * gv[0])
    return dx * full


def singular_conv(coeff: float, g: GridFunction, n: int | None = None) -> np.ndarray:
    """``coeff * int_0^x s**-1/2 g(x - s) ds`` at the nodes of ``g``.

    ``g`` is linearly interpolated on each cell and the weight ``s**-1/2`` is
    integrated exactly.
    """
    n = g.n if n is None else n
    if n == 1:
        return np.zeros(1)
    left, right = sqrt_kernel_moments(g.dx, n - 1)
    gv = g.values[:n]
    # node m: sum over cells j < m of left[j] g[m-j] + right[j] g[m-1-j]
    out = fftconvolve(gv, left)[:n]
    out[:n - 1] -= left * gv[0]  # drop the j == m term
    out[1:] += fftconvolve(gv, right)[:n - 1]
    return coeff * out


def conv_grid(f: GridFunction, g: GridFunction) -> GridFunction:
    """Convolution ``(f*g)(x) = int f(y) g(x - y) dy`` on a shared step.

    The result lives on ``[f.x0 + g.x0, ...]`` with ``min(f.n, g.n)`` nodes,
    which is the range fully determined by the sampled data.
    """
    _check_same_dx(f, g)
    if f.singular_coeff != 0.0 and g.singular_coeff != 0.0:
        raise DoubleSingularity("both operands carry an r**-1/2 part")
    if g.singular_coeff != 0.0:
        f, g = g, f
    dx = f.dx
    n = min(f.n, g.n)
    out = _trapezoid_conv(f.values, g.values, dx, n)
    if f.singular_coeff != 0.0:
        out = out + singular_conv(f.singular_coeff, g, n)
    return GridFunction(f.x0 + g.x0, dx, out)


# -- Laplace transform -------------------------------------------------------------

@dataclass(frozen=True)
class ExponentialTail:
    """Tail model ``A exp(-rate r)`` beyond the grid; ``A`` fitted at the last node if None."""

    rate: float
    amplitude: float | None = None


def laplace_numeric(f: GridFunction, theta: float, tail="truncate",
                    refine: int = 16) -> float:
    """``int_0^inf exp(-theta r) f(r) dr`` from grid data plus a tail completion.

    The regular part uses the trapezoidal rule. The singular part
    ``C r**-1/2`` is integrated by product integration against a
    piecewise-linear interpolant of ``exp(-theta r)`` on a grid ``refine``
    times finer.
    """
    if not theta > 0:
        raise InvalidParams("theta must be positive")
    x = f.x
    weights = np.exp(-theta * x)
    reg = f.values * weights
    total = f.dx * (reg.sum() - 0.5 * (reg[0] + reg[-1]))
    if f.singular_coeff != 0.0:
        fine_dx = f.dx / refine
        n_cells = (f.n - 1) * refine
        left, right = sqrt_kernel_moments(fine_dx, n_cells)
        e = np.exp(-theta * fine_dx * np.arange(n_cells + 1))
        total += f.singular_coeff * float(left @ e[:-1] + right @ e[1:])
    if isinstance(tail, ExponentialTail):
        end = f.x_end
        value_end = float(f(end))
        amp = value_end * math.exp(tail.rate * end) if tail.amplitude is None else tail.amplitude
        total += amp * math.exp(-(tail.rate + theta) * end) / (tail.rate + theta)
    elif tail != "truncate":
        raise InvalidParams(f"unknown tail model {tail!r}")
    return float(total)
