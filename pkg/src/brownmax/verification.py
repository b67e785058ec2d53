"""End-to-end verification checks and the JSON report they produce.

Each ``check_*`` function evaluates one acceptance criterion at its pinned
tolerance and returns one or more :class:`Check` records. ``run_verification``
orchestrates them; the ``fast`` profile covers the deterministic analytics and
``full`` adds the Monte Carlo criteria.

Every check that depends on ``h_{a,b}`` accepts a ``kernel`` override so that
a deliberately corrupted kernel can be pushed through the same pipeline.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .grid_calc.grid import ExponentialTail, laplace_numeric
from .grid_calc.kernels import ProcessParams, corollary_laplace, eval_h
from .grid_calc.levy import (
    SQRT_2PI,
    abel_residual,
    closed_form_G,
    levy_tail_recursion,
    levy_tail_series,
    levy_tail_volterra_abel,
)
from .grid_calc.renewal import density_moments, exponential_tail_rate, gap_density_series, mean_gap_from_laplace
from .mc_sim.estimators import estimate_intensity, estimate_pair_correlation, gap_statistics, tail_ratio
from .mc_sim.paths import PathConfig
from .mc_sim.runner import SimulationRun, simulate
from .mc_sim.triplet import sample_triplet, triplet_density
from .special_fn import find_rho, kummer_m, laplace_G_closed, tail_constants, SHIFTED

# pinned tolerances
DX = 1.0 / 400
R_MAX = 8.0
ANCHOR_TOL = 1e-3
CROSS_TOL = 2e-3
RESIDUAL_TOL = 1e-3 * SQRT_2PI
LAPLACE_RTOL = 5e-3
LAPLACE_THETAS = (0.5, 1.0, 2.0, 5.0)
RHO_REF = 0.85403
RHO_TOL = 1e-4
SLOPE_TOL = 0.09
MEAN_RTOL = 1e-2
N_SIGMA = 3.0
SYSTEMATIC = 0.02
PAIR_CORR_R = (1.25, 1.5, 1.75, 3.0)
PAIR_BIN = 0.05
TAIL_R = (0.25, 1.0)
CHI2_PMIN = 0.01

MC_CONFIG = PathConfig(dt=1.0 / 512, horizon=200.0, seed=20240611, n_paths=200)
MC_PARAMS = (1.0, 1.0)
TRIPLET_SEED = 7
TRIPLET_DRAWS = 200_000


@dataclass
class Check:
    id: str
    name: str
    value: object
    target: object
    tolerance: object
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.id} {self.name}: value={_fmt(self.value)} target={_fmt(self.target)} tol={_fmt(self.tolerance)}"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


@dataclass
class VerificationReport:
    profile: str
    checks: list[Check] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def first_failure(self) -> Check | None:
        return next((c for c in self.checks if not c.passed), None)

    def to_dict(self) -> dict:
        return _jsonable({"profile": self.profile, "passed": self.passed,
                          "config": self.config,
                          "checks": [asdict(c) for c in self.checks]})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# -- deterministic analytics --------------------------------------------------------

def solve_all_methods(a: float = 1.0, dx: float = DX, r_max: float = R_MAX, kernel=None) -> dict:
    """Solve ``G_a`` by the three routes; the recursion uses ``b = a``."""
    return {
        "series": levy_tail_series(a, dx, r_max),
        "volterra_abel": levy_tail_volterra_abel(a, dx, r_max),
        "recursion_hb": levy_tail_recursion(ProcessParams(a, a), dx, r_max, kernel=kernel),
    }


def check_closed_form_anchor(dx: float = DX) -> Check:
    start = time.perf_counter()
    tails = solve_all_methods(1.0, dx, 2.0 + 10 * dx)
    elapsed = time.perf_counter() - start
    errors = {}
    for name, tail in tails.items():
        x = tail.grid.x
        mask = (x >= 0.05 - 1e-12) & (x <= 2.0 + 1e-12)
        errors[name] = float(np.max(np.abs(tail.grid.full_values()[mask] - closed_form_G(1.0, x[mask]))))
    worst = max(errors.values())
    return Check("C1", "closed-form anchor of G_1 on [0.05, 2]", worst, 0.0, ANCHOR_TOL,
                 worst <= ANCHOR_TOL and elapsed < 5.0,
                 {"max_abs_error": errors, "runtime_s": elapsed, "runtime_limit_s": 5.0})


def check_cross_method(dx: float = DX, kernel=None) -> list[Check]:
    start = time.perf_counter()
    tails = solve_all_methods(1.0, dx, R_MAX, kernel=kernel)
    x = tails["series"].grid.x
    window = x <= 5.0 + 1e-12
    pairs = {}
    for (n1, t1), (n2, t2) in itertools.combinations(tails.items(), 2):
        diff = np.abs(t1.grid.values - t2.grid.values)[window]
        pairs[f"{n1}-{n2}"] = float(diff.max())
    residuals = {name: float(np.max(np.abs(abel_residual(t.grid, 1.0)))) for name, t in tails.items()}
    elapsed = time.perf_counter() - start
    worst_pair = max(pairs.values())
    worst_res = max(residuals.values())
    return [
        Check("C2a", "pairwise |G_1| discrepancy on [0, 5]", worst_pair, 0.0, CROSS_TOL,
              worst_pair <= CROSS_TOL and elapsed < 10.0,
              {"pairs": pairs, "runtime_s": elapsed, "runtime_limit_s": 10.0}),
        Check("C2b", "convolution-equation residual of every G_1", worst_res, 0.0, RESIDUAL_TOL,
              worst_res <= RESIDUAL_TOL, {"residuals": residuals}),
    ]


def check_kummer_transform(dx: float = DX) -> Check:
    tail = levy_tail_series(1.0, dx, R_MAX)
    rate = tail_constants().rate_for_a(1.0)
    rel = {}
    for theta in LAPLACE_THETAS:
        num = laplace_numeric(tail.grid, theta, ExponentialTail(rate))
        ref = laplace_G_closed(1.0, theta)
        rel[theta] = abs(num - ref) / ref
    worst = max(rel.values())
    return Check("C3", "numeric Laplace of G_1 vs Kummer closed form", worst, 0.0, LAPLACE_RTOL,
                 worst <= LAPLACE_RTOL, {"relative_error": rel})


def check_root_and_slope(dx: float = DX) -> list[Check]:
    rho = find_rho(1e-10)
    tail = levy_tail_series(1.0, dx, R_MAX)
    x = tail.grid.x
    mask = (x >= 3.0 - 1e-12) & (x <= 5.0 + 1e-12)
    slope, intercept = np.polyfit(x[mask], np.log(tail.grid.full_values()[mask]), 1)
    return [
        Check("C4a", "positive zero rho of M(-1/2; 1/2; .)", rho, RHO_REF, RHO_TOL,
              abs(rho - RHO_REF) <= RHO_TOL, {"M_at_rho": kummer_m(SHIFTED, rho)}),
        Check("C4b", "least-squares slope of ln G_1 on [3, 5]", float(slope), -rho, SLOPE_TOL,
              abs(slope + rho) <= SLOPE_TOL,
              {"intercept": float(intercept),
               "conjectured_intercept": math.log(tail_constants().amplitude_for_a(1.0))}),
    ]


def check_renewal_mean(dx: float = DX) -> list[Check]:
    p = ProcessParams(1.0, 1.0)
    g = gap_density_series(p, dx, 30.0)
    mass, mean = density_moments(g, exponential_tail_rate(p))
    out = [Check("C5a", "mean of the series gap density g_{1,1}", mean, math.pi, MEAN_RTOL * math.pi,
                 abs(mean - math.pi) <= MEAN_RTOL * math.pi, {"mass": mass})]
    fd = {}
    for a, b in ((1.0, 1.0), (4.0, 1.0)):
        target = math.pi * math.sqrt(a * b)
        fd[(a, b)] = (mean_gap_from_laplace(a, b), target)
    worst = max(abs(v - t) / t for v, t in fd.values())
    out.append(Check("C5b", "mean gap from the Lévy-measure Laplace transform", worst, 0.0, MEAN_RTOL,
                     worst <= MEAN_RTOL,
                     {f"a={a},b={b}": {"value": v, "target": t} for (a, b), (v, t) in fd.items()}))
    return out


# -- Monte Carlo --------------------------------------------------------------------

def run_mc(cfg: PathConfig = MC_CONFIG, workers: int | None = None) -> SimulationRun:
    return simulate(ProcessParams(*MC_PARAMS), cfg, refine=True, regenerative=True, workers=workers)


def _band(est: float, se: float, target: float) -> tuple[bool, float]:
    tol = N_SIGMA * se + SYSTEMATIC * abs(target)
    return abs(est - target) <= tol, tol


def check_mc_intensity(run: SimulationRun) -> list[Check]:
    c = run.params.intensity
    est = estimate_intensity(run.samples)
    ok, tol = _band(est.mean, est.stderr, c)
    fine = estimate_intensity(run.fine_samples)
    # paired drift between resolutions on the same paths
    diffs = np.array([f.count / f.window_length - s.count / s.window_length
                      for f, s in zip(run.fine_samples, run.samples)])
    drift_se = float(diffs.std(ddof=1) / math.sqrt(diffs.size))
    bias_coarse = abs(est.mean - c)
    bias_fine = abs(fine.mean - c)
    trend_ok = bias_fine <= bias_coarse + N_SIGMA * drift_se
    return [
        Check("C6a", "MC intensity of M_{1,1} at dt=1/512", est.mean, c, tol, ok,
              {"stderr": est.stderr, "n_paths": len(run.samples)}),
        Check("C6b", "halving dt does not move the intensity away from 1/pi", bias_fine,
              bias_coarse, N_SIGMA * drift_se, trend_ok,
              {"estimate_dt": est.mean, "estimate_dt_half": fine.mean,
               "paired_drift_stderr": drift_se}),
    ]


def check_mc_pair_correlation(run: SimulationRun, kernel=None) -> list[Check]:
    p = run.params
    kernel = (lambda r: eval_h(p, r)) if kernel is None else kernel
    pc = estimate_pair_correlation(run.samples, PAIR_BIN, 4.0 + PAIR_BIN, origin=PAIR_BIN / 2)
    detail, ok_all, worst = {}, True, 0.0
    for r in PAIR_CORR_R:
        est, se, n = pc.at(r)
        target = float(kernel(r))
        ok, tol = _band(est, se, target)
        ok_all &= ok
        worst = max(worst, abs(est - target) / tol)
        detail[r] = {"estimate": est, "stderr": se, "count": n, "target": target, "tol": tol}
    close_pairs = sum(int(np.count_nonzero(np.diff(s.times) < p.b)) for s in run.samples)
    return [
        Check("C7a", "MC pair correlation vs h_{1,1} at bin centres", worst, 0.0, 1.0, ok_all, detail),
        Check("C7b", "no pairs closer than b", close_pairs, 0, 0, close_pairs == 0),
    ]


def check_gap_law(run: SimulationRun, dx: float = DX) -> list[Check]:
    g = gap_density_series(run.params, dx, 40.0)
    gs = gap_statistics(run.samples, g)
    return [
        Check("C8a", "KS distance of pooled gaps to the series CDF", gs.ks_distance, 0.0,
              gs.ks_critical_1pct, gs.ks_distance < gs.ks_critical_1pct,
              {"n": gs.n, "p_value": gs.ks_pvalue, "mean": gs.mean, "mean_stderr": gs.mean_stderr}),
        Check("C8b", "lag-1 autocorrelation of gaps", gs.lag1_corr, 0.0, N_SIGMA * gs.lag1_stderr,
              abs(gs.lag1_corr) <= N_SIGMA * gs.lag1_stderr),
    ]


def check_structure(run: SimulationRun) -> list[Check]:
    mism, checked = run.correspondence
    r1, r2 = TAIL_R
    ratio = tail_ratio(run.regen_gaps, r1, r2)
    target = math.sqrt(r1 / r2)
    return [
        Check("C10a", "M_{a,b} points equal starts of long R_a gaps", mism, 0, 0,
              mism == 0 and checked > 0, {"points_checked": checked}),
        Check("C10b", "Lévy tail ratio of R_a gap lengths", ratio.mean, target, N_SIGMA * ratio.stderr,
              abs(ratio.mean - target) <= N_SIGMA * ratio.stderr,
              {"r1": r1, "r2": r2, "stderr": ratio.stderr}),
    ]


def triplet_cell_probabilities(phi_edges, gamma_edges, delta_edges, order: int = 16,
                               cap: float = 12.0) -> np.ndarray:
    """Probabilities of cells in ``(arcsin sqrt(r), g / sqrt(r), d / sqrt(1 - r))`` for ``t = 1``.

    Computed by tensor Gauss-Legendre quadrature of :func:`triplet_density`
    after the change of variables, whose integrand is smooth in every cell.
    Infinite upper edges are truncated at ``cap``.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)

    def rule(edges):
        edges = np.minimum(np.asarray(edges, dtype=float), cap)
        lo, hi = edges[:-1, None], edges[1:, None]
        pts = 0.5 * (hi - lo) * nodes + 0.5 * (hi + lo)
        wts = 0.5 * (hi - lo) * weights
        return pts, wts

    pp, pw = rule(phi_edges)
    gp, gw = rule(gamma_edges)
    dp, dw = rule(delta_edges)
    phi = pp[:, None, None, :, None, None]
    gam = gp[None, :, None, None, :, None]
    dlt = dp[None, None, :, None, None, :]
    r = np.sin(phi) ** 2
    g = gam * np.sqrt(r)
    d = dlt * np.sqrt(1 - r)
    jac = 2 * np.sin(phi) * np.cos(phi) * np.sqrt(r) * np.sqrt(1 - r)
    f = triplet_density(1.0, r, g, d) * jac
    w = pw[:, None, None, :, None, None] * gw[None, :, None, None, :, None] * dw[None, None, :, None, None, :]
    return (f * w).sum(axis=(3, 4, 5))


def check_triplet(seed: int = TRIPLET_SEED, n: int = TRIPLET_DRAWS) -> list[Check]:
    rng = np.random.default_rng(seed)
    rho, g, d = sample_triplet(0.0, 1.0, rng, n)
    phi_edges = np.linspace(0, np.pi / 2, 11)
    # deciles of the Rayleigh law give cells of comparable mass
    q = np.arange(11) / 10
    ray = np.sqrt(-2 * np.log1p(-q[:-1]))
    rad_edges = np.append(ray, np.inf)
    probs = triplet_cell_probabilities(phi_edges, rad_edges, rad_edges)
    phi = np.arcsin(np.sqrt(rho))
    gam = g / np.sqrt(rho)
    dlt = d / np.sqrt(1 - rho)
    counts, _ = np.histogramdd(np.column_stack((phi, gam, dlt)),
                               bins=(phi_edges, np.append(ray, 1e9), np.append(ray, 1e9)))
    expected = probs * n
    chi2 = float(np.sum((counts - expected) ** 2 / expected))
    dof = counts.size - 1
    pval = float(stats.chi2.sf(chi2, dof))
    functional = np.exp(-(g ** 2 + d ** 2) / 2)
    m, se = float(functional.mean()), float(functional.std(ddof=1) / math.sqrt(n))
    target = corollary_laplace(1.0, 1.0)
    betas = (0.0, 0.5, 1.0, 3.0, 10.0)
    red = max(abs(corollary_laplace(0.0, b) - 1 / math.sqrt(1 + b)) for b in betas)
    return [
        Check("C9a", "chi-square of sampled triplets vs the joint density", pval, CHI2_PMIN, None,
              pval > CHI2_PMIN, {"chi2": chi2, "dof": dof, "prob_mass": float(probs.sum())}),
        Check("C9b", "MC of E exp(-(G^2+D^2)/2) on [0,1]", m, target, N_SIGMA * se,
              abs(m - target) <= N_SIGMA * se, {"stderr": se}),
        Check("C9c", "alpha=0 reduction to 1/sqrt(1+beta)", red, 0.0, 1e-15, red <= 1e-15),
    ]


def corrupted_plateau_kernel(p: ProcessParams, factor: float = 1.5) -> Callable:
    """``h_{a,b}`` with its plateau beyond ``a + b`` scaled by ``factor``; a negative-control fixture."""
    def kernel(r):
        r = np.asarray(r, dtype=float)
        return np.where(r >= p.a + p.b, factor * p.intensity, eval_h(p, r))
    return kernel


def check_negative_control(run: SimulationRun | None) -> Check:
    p = ProcessParams(*MC_PARAMS)
    bad = corrupted_plateau_kernel(p)
    c2 = check_cross_method(kernel=bad)
    failed = {"C2": not all(c.passed for c in c2)}
    if run is not None:
        c7 = check_mc_pair_correlation(run, kernel=bad)
        failed["C7"] = not all(c.passed for c in c7)
    return Check("C11", "corrupted h plateau is rejected", failed, "all True", None,
                 all(failed.values()))


def run_verification(profile: str = "fast", kernel=None, workers: int | None = None,
                     mc_config: PathConfig = MC_CONFIG) -> VerificationReport:
    """Run the acceptance suite; ``kernel`` substitutes ``h_{1,1}`` in every kernel-dependent check."""
    if profile not in ("fast", "full"):
        raise ValueError(f"unknown profile {profile!r}")
    report = VerificationReport(profile, config={"dx": DX, "r_max": R_MAX})
    report.checks.append(check_closed_form_anchor())
    report.checks.extend(check_cross_method(kernel=kernel))
    report.checks.append(check_kummer_transform())
    report.checks.extend(check_root_and_slope())
    report.checks.extend(check_renewal_mean())
    report.checks.extend(check_triplet())
    run = None
    if profile == "full":
        run = run_mc(mc_config, workers)
        report.config["mc"] = asdict(mc_config)
        report.checks.extend(check_mc_intensity(run))
        report.checks.extend(check_mc_pair_correlation(run, kernel=kernel))
        report.checks.extend(check_gap_law(run))
        report.checks.extend(check_structure(run))
    if kernel is None:
        report.checks.append(check_negative_control(run))
    return report
