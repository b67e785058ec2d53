"""SVG line plots of the tabulated quantities.

Figures are rendered with the Agg backend and saved with a fixed hash salt
and no date stamp, so the same inputs give byte-identical files.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .grid_calc.kernels import ProcessParams, eval_h  # noqa: E402
from .grid_calc.levy import SQRT_2PI, levy_tail_series  # noqa: E402
from .special_fn import tail_constants  # noqa: E402

TARGETS = ("G1", "lnG1", "h", "gap_density", "pair_corr_overlay")

_RC = {"svg.hashsalt": "brownmax", "svg.fonttype": "path", "path.simplify": False}


def save_svg(fig, path) -> None:
    """Write ``fig`` to ``path`` atomically and close it."""
    tmp = f"{path}.tmp"
    try:
        with matplotlib.rc_context(_RC):
            fig.savefig(tmp, format="svg", metadata={"Date": None})
        os.replace(tmp, path)
    finally:
        plt.close(fig)
        if os.path.exists(tmp):
            os.remove(tmp)


def _axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def figure_G1(r_max: float = 5.0, dx: float = 1 / 400, log: bool = False):
    """``G_1`` on ``(0, r_max]``; with ``log`` the tail asymptote is overlaid."""
    tail = levy_tail_series(1.0, dx, r_max)
    x = tail.grid.x[1:]
    y = tail.grid.full_values()[1:]
    if not log:
        fig, ax = _axes("Lévy measure tail $G_1$", "$r$", "$G_1(r)$")
        ax.plot(x, y, lw=1.5)
        ax.set_ylim(0, min(float(y.max()), 4.0))
        return fig
    tc = tail_constants()
    fig, ax = _axes("$\\ln G_1$ and its exponential asymptote", "$r$", "$\\ln G_1(r)$")
    ax.plot(x, np.log(y), lw=1.5, label="$\\ln G_1$")
    ax.plot(x, -tc.rho * x + math.log(SQRT_2PI / tc.lam), "--", lw=1.0,
            label=f"$-\\rho r + \\ln(\\sqrt{{2\\pi}}/\\lambda)$, $\\rho={tc.rho:.5f}$")
    ax.legend()
    return fig


def figure_h(p: ProcessParams, r_max: float | None = None, dx: float | None = None):
    r_max = 4 * (p.a + p.b) if r_max is None else r_max
    dx = p.b / 400 if dx is None else dx
    r = dx * np.arange(int(round(r_max / dx)) + 1)
    fig, ax = _axes(f"Pair correlation $h_{{a,b}}$, a={p.a:g}, b={p.b:g}", "$r$", "$h(r)$")
    ax.plot(r, eval_h(p, r), lw=1.5)
    ax.axhline(p.intensity, ls=":", lw=1.0, color="gray")
    return fig


def figure_gap_density(g, p: ProcessParams, first_point=None):
    fig, ax = _axes(f"Gap density, a={p.a:g}, b={p.b:g}", "$r$", "density")
    ax.plot(g.x, g.full_values(), lw=1.5, label="gap density")
    if first_point is not None:
        ax.plot(first_point.x, first_point.full_values(), lw=1.0, label="first-point density")
    ax.legend()
    return fig


def figure_pair_corr_overlay(pc, p: ProcessParams):
    fig, ax = _axes(f"Monte Carlo pair correlation, a={p.a:g}, b={p.b:g}", "$r$", "$h(r)$")
    c = pc.centers
    ax.bar(c, pc.grid.values, width=pc.bin_width, alpha=0.4, label="Monte Carlo")
    ax.errorbar(c, pc.grid.values, yerr=pc.stderr, fmt="none", lw=0.6, color="k")
    fine = np.linspace(0, c[-1] + pc.bin_width / 2, 2001)
    ax.plot(fine, eval_h(p, fine), lw=1.5, color="C1", label="$h_{a,b}$")
    ax.legend()
    return fig
