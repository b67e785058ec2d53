import itertools
import math

import numpy as np
import pytest

from brownmax.errors import DomainError, InvalidParams, ResolutionTooCoarse
from brownmax.grid_calc.kernels import ProcessParams
from brownmax.grid_calc.levy import (
    SQRT_2PI,
    abel_residual,
    closed_form_G,
    levy_measure_tail_closed,
    levy_tail_recursion,
    levy_tail_series,
    levy_tail_volterra_abel,
    solve_levy_tail,
)
from brownmax.special_fn import tail_constants

DX = 1 / 400


@pytest.fixture(scope="module")
def tails():
    return {
        "series": levy_tail_series(1.0, DX, 8.0),
        "volterra_abel": levy_tail_volterra_abel(1.0, DX, 8.0),
        "recursion_hb": levy_tail_recursion(ProcessParams(1.0, 1.0), DX, 8.0),
        "recursion_half": levy_tail_recursion(ProcessParams(1.0, 0.5), DX, 8.0),
    }


def test_closed_form_pieces():
    assert levy_measure_tail_closed(1.0, 0.5) == pytest.approx(math.sqrt(4 / math.pi))
    assert closed_form_G(1.0, 1.5) == pytest.approx(2 * math.sqrt(2 / (1.5 * math.pi)) - math.sqrt(2 / math.pi))
    assert closed_form_G(1.0, 1.5) == pytest.approx(0.505055, abs=1e-6)
    assert math.isnan(closed_form_G(1.0, 2.5))


@pytest.mark.parametrize("r", [0.0, -1.0, 1.5])
def test_closed_form_domain(r):
    with pytest.raises(DomainError):
        levy_measure_tail_closed(1.0, r)


@pytest.mark.parametrize("name", ["series", "volterra_abel", "recursion_hb", "recursion_half"])
def test_anchor_on_first_two_intervals(tails, name):
    g = tails[name].grid
    x = g.x
    mask = (x >= 0.05) & (x <= 2.0)
    err = np.abs(g.full_values()[mask] - closed_form_G(1.0, x[mask]))
    assert err.max() < 1e-3
    assert float(tails[name](1.5)) == pytest.approx(0.505055, abs=1e-3)


def test_methods_agree(tails):
    window = tails["series"].grid.x <= 5.0
    for t1, t2 in itertools.combinations(tails.values(), 2):
        assert np.max(np.abs(t1.grid.values - t2.grid.values)[window]) < 2e-3


@pytest.mark.parametrize("name", ["series", "volterra_abel", "recursion_hb", "recursion_half"])
def test_convolution_equation_residual(tails, name):
    assert np.max(np.abs(abel_residual(tails[name].grid, 1.0))) < 1e-3 * SQRT_2PI


def test_closed_form_satisfies_equation_on_first_interval():
    # on [0, 2a] the exact G is known; its residual is discretisation error only
    g = levy_tail_volterra_abel(1.0, DX, 2.0).grid
    assert np.max(np.abs(abel_residual(g, 1.0))) < 1e-10


def test_tail_is_positive_and_decreasing(tails):
    v = tails["series"].grid.full_values()[1:]
    assert np.all(v > 0)
    assert np.all(np.diff(v) < 0)


def test_exponential_tail_slope(tails):
    g = tails["volterra_abel"].grid
    x = g.x
    mask = (x >= 3) & (x <= 5)
    slope, intercept = np.polyfit(x[mask], np.log(g.full_values()[mask]), 1)
    tc = tail_constants()
    assert slope == pytest.approx(-tc.rho, abs=0.01)
    assert intercept == pytest.approx(math.log(tc.amplitude_for_a(1.0)), abs=0.01)


@pytest.mark.parametrize("method", ["series", "volterra_abel", "recursion_hb"])
def test_scaling_in_a(method):
    a = 2.0
    ga = solve_levy_tail(a, method, a * DX, 8.0 * a).grid
    g1 = solve_levy_tail(1.0, method, DX, 8.0).grid
    assert np.allclose(ga.full_values()[1:], g1.full_values()[1:] / math.sqrt(a), atol=1e-10)


def test_singular_coefficient(tails):
    for t in tails.values():
        assert t.grid.singular_coeff == pytest.approx(math.sqrt(2 / math.pi))


def test_resolution_guards():
    with pytest.raises(ResolutionTooCoarse):
        levy_tail_series(1.0, 1 / 50, 4.0)
    with pytest.raises(ResolutionTooCoarse):
        levy_tail_recursion(ProcessParams(1.0, 0.1), 1 / 400, 4.0)


def test_unknown_method():
    with pytest.raises(InvalidParams):
        solve_levy_tail(1.0, "spectral", DX, 4.0)


def test_recursion_rejects_b_above_a():
    with pytest.raises(InvalidParams):
        solve_levy_tail(1.0, "recursion", DX, 4.0, b=2.0)
