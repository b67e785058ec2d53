import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from brownmax.errors import InsufficientData, InvalidParams, ResolutionTooCoarse
from brownmax.grid_calc.kernels import ProcessParams, corollary_laplace
from brownmax.mc_sim.detect import (
    PointSample,
    detect_m_ab,
    detect_m_ab_indices,
    detect_r_a,
    detect_r_a_indices,
    runs,
)
from brownmax.mc_sim.estimators import (
    estimate_intensity,
    estimate_pair_correlation,
    pair_distances,
    tail_ratio,
)
from brownmax.mc_sim.paths import PathConfig, coarsen, gen_brownian
from brownmax.mc_sim.runner import match_within, max_workers, simulate
from brownmax.mc_sim.triplet import sample_triplet, triplet_density
from brownmax.mc_sim.window import sliding_max, sliding_max_deque
from brownmax.verification import triplet_cell_probabilities

CFG = PathConfig(dt=1 / 512, horizon=60.0, seed=11, n_paths=12)


@pytest.fixture(scope="module")
def run11():
    return simulate(ProcessParams(1.0, 1.0), CFG, regenerative=True, workers=1)


# -- paths -------------------------------------------------------------------------

def test_paths_are_reproducible():
    a = gen_brownian(CFG, 3)
    b = gen_brownian(CFG, 3)
    c = gen_brownian(CFG, 4)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.values[a.origin] == 0.0
    assert a.times[a.origin] == 0.0
    assert a.horizon == pytest.approx(60.0)


def test_endpoint_variance():
    cfg = PathConfig(dt=0.01, horizon=1.0, seed=5, n_paths=1)
    ends = np.array([gen_brownian(cfg, i).values[[0, -1]] for i in range(3000)])
    # each side is an independent B_1
    for col in ends.T:
        assert col.var() == pytest.approx(1.0, abs=3 * math.sqrt(2 / col.size))
    assert abs(np.corrcoef(ends.T)[0, 1]) < 3 / math.sqrt(ends.shape[0])


def test_coarsen_keeps_the_origin():
    fine = gen_brownian(CFG, 0, dt=CFG.dt / 2)
    coarse = coarsen(fine, 2)
    assert coarse.dt == CFG.dt
    assert coarse.values[coarse.origin] == 0.0
    assert np.array_equal(coarse.values, fine.values[::2])


def test_path_config_validation():
    with pytest.raises(InvalidParams):
        PathConfig(dt=0.0, horizon=1.0)
    with pytest.raises(InvalidParams):
        PathConfig(dt=0.1, horizon=1.0, n_paths=0)
    with pytest.raises(InvalidParams):
        PathConfig(dt=0.1, horizon=1.0, seed=-1)
    with pytest.raises(InvalidParams):
        PathConfig(dt=0.1, horizon=100.0).check_reaches(1.0, 1.0)
    with pytest.raises(InvalidParams):
        PathConfig(dt=1 / 512, horizon=5.0).check_reaches(1.0, 1.0)


def test_max_workers_env(monkeypatch):
    monkeypatch.setenv("MAXPROC_THREADS", "1")
    assert max_workers() == 1
    monkeypatch.setenv("MAXPROC_THREADS", "lots")
    assert max_workers() >= 1


# -- sliding maximum ---------------------------------------------------------------

@given(arrays(np.float64, st.integers(1, 200), elements=st.floats(-1e6, 1e6)), st.integers(1, 50))
def test_sliding_max_matches_deque(x, w):
    w = min(w, x.size)
    expect = np.array([x[i:i + w].max() for i in range(x.size - w + 1)])
    assert np.array_equal(sliding_max(x, w), expect)
    assert np.array_equal(sliding_max_deque(x, w), expect)


# -- detection on synthetic paths --------------------------------------------------

def test_tent_has_one_maximum():
    x = -np.abs(np.arange(201) - 100.0)
    assert detect_m_ab_indices(x, 30, 20).tolist() == [100]


def test_monotone_path_has_no_maxima():
    x = np.arange(500, dtype=float)
    assert detect_m_ab_indices(x, 10, 10).size == 0
    assert detect_m_ab_indices(-x, 10, 10).size == 0


def test_ties_go_to_the_earliest_index(caplog):
    x = np.zeros(40)
    x[20] = x[21] = 1.0
    assert detect_m_ab_indices(x, 5, 5).tolist() == [20]
    assert "ties" in caplog.text


def test_short_path_yields_nothing():
    assert detect_m_ab_indices(np.zeros(5), 3, 3).size == 0


def test_window_bounds_are_valid(run11):
    for s in run11.samples:
        lo, hi = s.valid_window
        assert lo == pytest.approx(-CFG.horizon + 1.0)
        assert hi == pytest.approx(CFG.horizon - 1.0)
        assert np.all((s.times >= lo) & (s.times <= hi))


def test_minimal_spacing(run11):
    for s in run11.samples:
        assert np.all(s.gaps >= 1.0 - 2 * CFG.dt)


@pytest.mark.parametrize("c", [-3.5, 0.25, 100.0])
def test_shift_invariance(c):
    p = ProcessParams(1.0, 1.0)
    path = gen_brownian(CFG, 2)
    assert np.array_equal(detect_m_ab(path, p).times, detect_m_ab(path.shifted(c), p).times)


@pytest.mark.parametrize("idx", range(4))
def test_reflection_symmetry(idx):
    # reversing time swaps the roles of the left and right reach
    x = gen_brownian(CFG, idx).values
    na, nb = 1024, 512
    fwd = detect_m_ab_indices(x, na, nb)
    rev = detect_m_ab_indices(x[::-1], nb, na)
    assert np.array_equal(np.sort(x.size - 1 - rev), fwd)


def test_reflection_on_path_objects():
    p = ProcessParams(1.0, 1.0)
    path = gen_brownian(CFG, 5)
    fwd = detect_m_ab(path, p).times
    rev = detect_m_ab(path.reversed(), p).times
    assert np.allclose(np.sort(-rev), fwd, atol=1e-12)


def test_coarse_resolution_is_rejected():
    path = gen_brownian(PathConfig(dt=0.01, horizon=20.0), 0)
    with pytest.raises(ResolutionTooCoarse):
        detect_m_ab(path, ProcessParams(1.0, 1.0))
    with pytest.raises(ResolutionTooCoarse):
        detect_r_a(path, 1.0)


# -- regenerative set ---------------------------------------------------------------

def test_runs():
    assert runs(np.array([1, 2, 3, 7, 9, 10])).tolist() == [[1, 3], [7, 7], [9, 10]]
    assert runs(np.array([], dtype=int)).shape == (0, 2)


def test_regenerative_set_on_synthetic_path():
    y = np.array([0.0, 1.0, 0.5, 0.2, 0.3, 2.0, 2.5, 1.0])
    # trailing window of 2 steps
    # index 4 is beaten by y[2] inside its window [2, 4]
    assert detect_r_a_indices(y, 2).tolist() == [0, 1, 5, 6]


def test_regenerative_set_starts_at_zero():
    path = gen_brownian(CFG, 1)
    reg = detect_r_a(path, 1.0)
    assert reg.runs[0, 0] == 0
    assert np.all(reg.gap_lengths > 0)


def test_correspondence_with_regenerative_set(run11):
    mismatches, checked = run11.correspondence
    assert checked > 100
    assert mismatches == 0


def test_match_within():
    a = np.array([1.0, 2.0, 5.0])
    assert match_within(a, a + 0.001, 0.01) == 0
    assert match_within(a, np.array([1.0, 2.0]), 0.01) == 1
    assert match_within(np.array([3.0]), np.array([3.0]), 0.0) == 0
    assert match_within(np.empty(0), a, 1.0) == 3


# -- simulation runner ---------------------------------------------------------------

def test_parallel_run_is_identical(run11):
    other = simulate(ProcessParams(1.0, 1.0), CFG, regenerative=True, workers=3)
    for r1, r2 in zip(run11.results, other.results):
        assert r1.index == r2.index
        assert np.array_equal(r1.sample.times, r2.sample.times)
        assert np.array_equal(r1.regen_gaps, r2.regen_gaps)


def test_gaps_csv(run11, tmp_path):
    path = tmp_path / "gaps.csv"
    run11.write_gaps_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "path,gap"
    assert len(lines) - 1 == sum(s.gaps.size for s in run11.samples)


@pytest.mark.slow
def test_intensity_for_unequal_reach():
    p = ProcessParams(4.0, 1.0)
    run = simulate(p, PathConfig(dt=1 / 512, horizon=150.0, seed=99, n_paths=60))
    est = estimate_intensity(run.samples)
    assert abs(est.mean - 1 / (2 * math.pi)) <= 3 * est.stderr + 0.02 / (2 * math.pi)


# -- estimators -------------------------------------------------------------------

@given(st.lists(st.floats(0, 100), min_size=2, max_size=40, unique=True), st.floats(0.5, 50))
def test_pair_distances_brute_force(times, r_max):
    t = np.sort(np.array(times))
    brute = sorted(t[j] - t[i] for i in range(t.size) for j in range(i + 1, t.size) if t[j] - t[i] < r_max)
    assert np.allclose(np.sort(pair_distances(t, r_max)), brute)


def test_pair_correlation_bins(run11):
    pc = estimate_pair_correlation(run11.samples, 0.05, 4.0, origin=0.025)
    assert pc.centers[0] == pytest.approx(0.05)
    est, se, n = pc.at(3.0)
    assert n > 0 and se > 0
    assert pc.centers[int(round((3.0 - 0.05) / 0.05))] == pytest.approx(3.0)
    assert np.all(pc.counts[pc.centers < 1.0 - 0.025] == 0)


def test_estimators_need_data():
    one = [PointSample(np.array([0.0, 2.0]), (-5.0, 5.0), 0.01)]
    with pytest.raises(InsufficientData):
        estimate_intensity(one)
    with pytest.raises(InsufficientData):
        estimate_pair_correlation(one * 2, 0.01, 1.0)
    with pytest.raises(InsufficientData):
        tail_ratio(np.array([0.1]), 0.5, 1.0)


def test_tail_ratio_on_stable_sample():
    rng = np.random.default_rng(0)
    # P(X >= r) = sqrt(r0 / r) for X = r0 / U^2
    x = 0.01 / rng.uniform(size=200_000) ** 2
    est = tail_ratio(x, 0.25, 1.0)
    assert abs(est.mean - 0.5) <= 3 * est.stderr


# -- triplet -------------------------------------------------------------------------

def test_triplet_ranges_and_symmetry():
    rng = np.random.default_rng(1)
    rho, g, d = sample_triplet(2.0, 5.0, rng, 100_000)
    assert np.all((rho >= 2.0) & (rho <= 5.0))
    assert np.all(g >= 0) and np.all(d >= 0)
    frac = np.mean(rho <= 3.5)
    assert abs(frac - 0.5) <= 3 * math.sqrt(0.25 / rho.size)


def test_triplet_scalar_draw():
    rho, g, d = sample_triplet(0.0, 1.0, np.random.default_rng(2))
    assert np.ndim(rho) == 0 and 0 <= rho <= 1


def test_triplet_functional():
    rng = np.random.default_rng(3)
    _, g, d = sample_triplet(0.0, 1.0, rng, 200_000)
    f = np.exp(-(2.0 * g ** 2 + 3.0 * d ** 2) / 2)
    assert abs(f.mean() - corollary_laplace(2.0, 3.0)) <= 3 * f.std() / math.sqrt(f.size)


def test_triplet_density_integrates_to_one():
    edges = np.linspace(0, np.pi / 2, 5)
    rad = np.array([0.0, 1.0, 2.0, 3.0, np.inf])
    probs = triplet_cell_probabilities(edges, rad, rad, order=20)
    assert probs.sum() == pytest.approx(1.0, abs=1e-2)
    # the angle is uniform
    assert np.allclose(probs.sum(axis=(1, 2)), 0.25, atol=1e-6)


@pytest.mark.parametrize("r", [0.1, 0.3, 0.5, 0.9])
def test_triplet_marginal_is_arcsine(r):
    from scipy import integrate
    val, _ = integrate.dblquad(lambda d, g: triplet_density(1.0, r, g, d), 0, 12, 0, 12)
    assert val == pytest.approx(1 / (math.pi * math.sqrt(r * (1 - r))), rel=1e-6)


def test_triplet_density_domain():
    assert triplet_density(1.0, 1.2, 1.0, 1.0) == 0.0
    assert triplet_density(1.0, 0.5, -1.0, 1.0) == 0.0
    assert triplet_density(1.0, 0.5, 1.0, -0.5) == 0.0
    assert triplet_density(1.0, 0.5, 1.0, 0.5) > 0.0


def test_triplet_rejects_empty_interval():
    with pytest.raises(InvalidParams):
        sample_triplet(1.0, 1.0, np.random.default_rng(0))
