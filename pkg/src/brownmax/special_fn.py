"""Kummer's confluent hypergeometric function and the constants derived from it.

Only the two parameter pairs ``(-1/2, 1/2)`` and ``(1/2, 3/2)`` matter for the
Lévy tail, but :func:`kummer_m` accepts any real pair with a valid denominator.

The Laplace transform of the Lévy tail is

.. math::

    \\mathcal{L}G_a(\\theta) = \\sqrt{2\\pi a}\\, / \\, M(-\\tfrac12; \\tfrac12; -\\theta a)

and ``rho`` is the positive zero of ``M(-1/2; 1/2; .)``, which sets the
exponential decay rate ``rho / a`` of ``G_a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BracketFailure, InvalidParams, NonConvergence, PoleRegion

RHO_BRACKET = (0.0, 2.0)


@dataclass(frozen=True)
class KummerParams:
    a_param: float
    b_param: float
    tol: float = 1e-16
    max_terms: int = 1000

    def __post_init__(self):
        b = self.b_param
        if b <= 0 and float(b).is_integer():
            raise InvalidParams(f"b_param must not be a non-positive integer, got {b}")
        if not self.tol > 0:
            raise InvalidParams("tol must be positive")
        if self.max_terms < 1:
            raise InvalidParams("max_terms must be >= 1")


SHIFTED = KummerParams(-0.5, 0.5)
DERIVED = KummerParams(0.5, 1.5)


def _series(a: float, b: float, x: float, p: KummerParams, x_orig: float) -> tuple[float, float]:
    """Sum the series as ``(total, log_scale)`` with the value ``total * exp(log_scale)``.

    Summation stops once two consecutive terms are both negligible against
    the partial sum, so an isolated vanishing term cannot end it early.
    Large partial sums are rescaled to stay clear of overflow.
    """
    term = 1.0
    total = 1.0
    log_scale = 0.0
    quiet = 0
    for n in range(p.max_terms):
        term *= (a + n) / ((b + n) * (n + 1)) * x
        total += term
        if abs(term) <= p.tol * abs(total) or term == 0.0:
            quiet += 1
            if quiet == 2:
                return total, log_scale
        else:
            quiet = 0
        if abs(total) > 1e250:
            total *= 1e-250
            term *= 1e-250
            log_scale += 250 * math.log(10)
    raise NonConvergence(
        f"M({p.a_param}; {p.b_param}; {x_orig}) did not converge within {p.max_terms} terms"
    )


def kummer_m(p: KummerParams, x: float) -> float:
    """Evaluate ``M(a; b; x) = sum (a)_n / (b)_n * x**n / n!``.

    Terms are generated by the ratio recurrence. For ``x < 0`` with
    ``b > 0`` and ``b > a`` the alternating series loses every digit to
    cancellation once ``|x|`` reaches a few tens, so Kummer's transformation
    ``M(a; b; x) = e^x M(b - a; b; -x)`` is summed instead; its terms are all
    positive.
    """
    a, b = p.a_param, p.b_param
    if x < 0 and b > 0 and b - a > 0:
        total, log_scale = _series(b - a, b, -x, p, x)
        return total * math.exp(x + log_scale)
    total, log_scale = _series(a, b, x, p, x)
    return total * math.exp(log_scale) if log_scale else total


def find_rho(tol: float = 1e-10, params: KummerParams = SHIFTED) -> float:
    """Positive zero of ``M(-1/2; 1/2; .)`` by bisection on ``[0, 2]``."""
    if not tol > 0:
        raise InvalidParams("tol must be positive")
    lo, hi = RHO_BRACKET
    f_lo = kummer_m(params, lo)
    f_hi = kummer_m(params, hi)
    if not (f_lo > 0 > f_hi):
        raise BracketFailure(
            f"no sign change of M(-1/2; 1/2; .) on [{lo}, {hi}]: "
            f"values {f_lo:.6g}, {f_hi:.6g}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if kummer_m(params, mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class TailConstants:
    """Decay constants of the conjectured tail ``G_a(r) ~ A e^{-rho r / a}``."""

    rho: float
    lam: float

    @classmethod
    def compute(cls, tol: float = 1e-12) -> "TailConstants":
        rho = find_rho(tol)
        # positive by construction; the derivative of M(-1/2; 1/2; .) at rho is -lam
        lam = kummer_m(DERIVED, rho)
        return cls(rho, lam)

    def amplitude_for_a(self, a: float) -> float:
        return math.sqrt(2 * math.pi) / (self.lam * math.sqrt(a))

    def rate_for_a(self, a: float) -> float:
        return self.rho / a


_TAIL_CACHE: dict[str, TailConstants] = {}


def tail_constants() -> TailConstants:
    if "default" not in _TAIL_CACHE:
        _TAIL_CACHE["default"] = TailConstants.compute()
    return _TAIL_CACHE["default"]


def laplace_G_closed(a: float, theta: float) -> float:
    """Closed-form Laplace transform of ``G_a`` at ``theta``.

    Negative ``theta`` is accepted down to (but excluding) the pole at
    ``theta = -rho / a``.
    """
    if not a > 0:
        raise InvalidParams("a must be positive")
    x = -theta * a
    if x >= tail_constants().rho:
        raise PoleRegion(
            f"-theta*a = {x:.6g} is at or beyond the pole rho = {tail_constants().rho:.6g}"
        )
    return math.sqrt(2 * math.pi * a) / kummer_m(SHIFTED, x)
