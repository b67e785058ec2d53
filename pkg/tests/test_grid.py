import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate

from brownmax.errors import DoubleSingularity, GridMismatch, InvalidParams
from brownmax.grid_calc.grid import (
    ExponentialTail,
    GridFunction,
    conv_grid,
    laplace_numeric,
    sidecar_path,
    zeros_like,
)
from brownmax.grid_calc.kernels import eval_h_inf

DX = 1 / 200


def ramp(n=401, dx=DX):
    return GridFunction(0.0, dx, dx * np.arange(n))


def test_regular_convolution_of_ramps():
    f = ramp()
    out = conv_grid(f, f)
    # (x * x)(t) = t^3 / 6
    assert np.allclose(out.values, out.x ** 3 / 6, atol=1e-4)


def test_linear_times_constant_is_exact():
    f = ramp()
    one = GridFunction(0.0, DX, np.ones(f.n))
    out = conv_grid(f, one)
    assert np.allclose(out.values, out.x ** 2 / 2, atol=1e-13)


def test_singular_against_linear_is_exact():
    u = GridFunction(0.0, DX, np.zeros(401), 1.5)
    one = GridFunction(0.0, DX, np.ones(401))
    x = one.x
    assert np.allclose(conv_grid(u, one).values, 1.5 * 2 * np.sqrt(x), atol=1e-12)
    assert np.allclose(conv_grid(one, u).values, 1.5 * 2 * np.sqrt(x), atol=1e-12)
    assert np.allclose(conv_grid(u, ramp()).values, 1.5 * 4 / 3 * x ** 1.5, atol=1e-12)


def test_singular_against_h_inf_matches_quadrature():
    a = 1.0
    dx = a / 400
    n = int(3 / dx) + 1
    u = GridFunction(0.0, dx, np.zeros(n), math.sqrt(2 / math.pi))
    h = GridFunction(0.0, dx, eval_h_inf(a, dx * np.arange(n)))
    out = conv_grid(u, h)
    for x in (1.2, 1.5, 2.0, 3.0):
        # y^{-1/2} weight handled by the 'alg' rule on (x - y)
        ref, _ = integrate.quad(lambda y: eval_h_inf(a, y) * math.sqrt(2 / math.pi), a, x,
                                weight="alg", wvar=(0.0, -0.5))
        assert float(out(x)) == pytest.approx(ref, abs=2e-4)
    assert np.max(np.abs(out.values[out.x <= a])) < 1e-14


def test_convolution_with_zero():
    f = ramp()
    z = zeros_like(f)
    assert np.all(conv_grid(f, z).values == 0.0)


def test_offsets_add_and_length_is_shorter():
    f = GridFunction(0.5, DX, np.ones(100))
    g = GridFunction(0.25, DX, np.ones(80))
    out = conv_grid(f, g)
    assert out.x0 == 0.75
    assert out.n == 80


@given(arrays(np.float64, 30, elements=st.floats(-5, 5)),
       arrays(np.float64, 30, elements=st.floats(-5, 5)))
def test_regular_convolution_commutes(u, v):
    f = GridFunction(0.0, 0.1, u)
    g = GridFunction(0.0, 0.1, v)
    assert np.allclose(conv_grid(f, g).values, conv_grid(g, f).values, atol=1e-10)


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        conv_grid(GridFunction(0, 0.1, np.ones(5)), GridFunction(0, 0.2, np.ones(5)))


def test_double_singularity():
    u = GridFunction(0.0, DX, np.zeros(10), 1.0)
    with pytest.raises(DoubleSingularity):
        conv_grid(u, u)


def test_values_are_read_only():
    f = ramp()
    with pytest.raises(ValueError):
        f.values[0] = 1.0


@pytest.mark.parametrize("kwargs", [
    dict(x0=0.0, dx=0.0, values=[1.0]),
    dict(x0=0.0, dx=0.1, values=[]),
    dict(x0=0.0, dx=0.1, values=[1.0, np.nan]),
    dict(x0=0.5, dx=0.1, values=[1.0], singular_coeff=1.0),
])
def test_invalid_grid(kwargs):
    with pytest.raises(InvalidParams):
        GridFunction(**kwargs)


def test_evaluation_outside_range():
    f = GridFunction(1.0, 0.5, [1.0, 2.0, 3.0])
    assert f(0.5) == 0.0
    assert f(1.25) == pytest.approx(1.5)
    assert math.isnan(f(3.0))


def test_cumulative_integral_of_singular_part():
    u = GridFunction(0.0, DX, np.zeros(101), 2.0)
    assert np.allclose(u.cumulative_integral(), 4.0 * np.sqrt(u.x))


def test_csv_round_trip(tmp_path):
    f = GridFunction(0.0, 1 / 3, np.linspace(-1, 1, 7) ** 3, 0.25)
    path = tmp_path / "f.csv"
    f.to_csv(path)
    assert (tmp_path / "f.json").exists()
    assert sidecar_path(str(path)) == str(tmp_path / "f.json")
    g = GridFunction.from_csv(path)
    assert np.array_equal(f.values, g.values)
    assert (g.x0, g.dx, g.singular_coeff) == (f.x0, f.dx, f.singular_coeff)


def test_csv_row_count_is_checked(tmp_path):
    path = tmp_path / "f.csv"
    GridFunction(0.0, 0.1, np.ones(4)).to_csv(path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(InvalidParams):
        GridFunction.from_csv(path)


def test_laplace_of_exponential():
    f = GridFunction.sample(lambda x: np.exp(-x), 1 / 400, 10.0)
    for theta in (0.5, 1.0, 3.0):
        got = laplace_numeric(f, theta, ExponentialTail(1.0))
        assert got == pytest.approx(1 / (1 + theta), rel=1e-5)


def test_laplace_of_singular_part():
    u = GridFunction(0.0, 1 / 200, np.zeros(2001), 1.0)
    theta = 2.0
    # truncated at R = 10
    ref = math.sqrt(math.pi / theta) * math.erf(math.sqrt(theta * 10.0))
    assert laplace_numeric(u, theta) == pytest.approx(ref, rel=1e-6)


def test_laplace_rejects_bad_input():
    f = ramp()
    with pytest.raises(InvalidParams):
        laplace_numeric(f, 0.0)
    with pytest.raises(InvalidParams):
        laplace_numeric(f, 1.0, tail="pareto")
