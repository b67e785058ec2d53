"""Law of the argmax of Brownian motion on an interval together with the two drops.

For ``s < t`` let ``rho`` be the (first) argmax of ``B`` on ``[s, t]``,
``G = B_rho - B_s`` and ``D = B_rho - B_t``. Then

    (rho, G, D) ~ (s cos^2 T + t sin^2 T, sqrt(2X (t-s)) sin T, sqrt(2Y (t-s)) cos T)

with ``T`` uniform on ``[0, pi/2]`` and ``X, Y`` standard exponentials.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParams


def sample_triplet(s: float, t: float, rng: np.random.Generator, size=None):
    """Draw ``(rho, G, D)``; arrays when ``size`` is given."""
    if not s < t:
        raise InvalidParams("need s < t")
    theta = rng.uniform(0.0, np.pi / 2, size)
    x = rng.standard_exponential(size)
    y = rng.standard_exponential(size)
    span = t - s
    rho = s * np.cos(theta) ** 2 + t * np.sin(theta) ** 2
    g = np.sqrt(2 * x * span) * np.sin(theta)
    d = np.sqrt(2 * y * span) * np.cos(theta)
    return rho, g, d


def triplet_density(t: float, r, g_val, d_val):
    """Density of ``(rho(0,t), G, D)`` at ``(r, g_val, d_val)``.

    Written in the coordinates ``(r, S_t, B_t) = (r, g, g - d)`` of the
    classical joint law of argmax, maximum and endpoint; the change of
    variables has unit Jacobian. Zero outside ``0 < r < t``, ``g > 0``, ``d > 0``.
    """
    r = np.asarray(r, dtype=float)
    a = np.asarray(g_val, dtype=float)
    b = a - np.asarray(d_val, dtype=float)
    inside = (r > 0) & (r < t) & (a > 0) & (a > b)
    rr = np.where(inside, r, 0.5 * t)
    dens = (a * (a - b) / (np.pi * rr ** 1.5 * (t - rr) ** 1.5)
            * np.exp(-a ** 2 / (2 * rr)) * np.exp(-(a - b) ** 2 / (2 * (t - rr))))
    out = np.where(inside, dens, 0.0)
    return out[()] if out.ndim == 0 else out
