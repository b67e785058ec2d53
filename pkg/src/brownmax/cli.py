"""Command-line front end.

Exit codes: 0 success, 2 invalid parameters, 3 verification failure, 4 I/O error.
Every command computes its full output before touching the filesystem and
writes each file through a temporary name, so a failed run leaves nothing behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys

import numpy as np

from .errors import BrownmaxError
from .grid_calc.grid import ExponentialTail, laplace_numeric, sidecar_path
from .grid_calc.kernels import ProcessParams, eval_h
from .grid_calc.levy import abel_residual, solve_levy_tail
from .grid_calc.renewal import density_moments, exponential_tail_rate, first_point_density, gap_density_series
from .special_fn import SHIFTED, kummer_m, laplace_G_closed, tail_constants

EXIT_OK, EXIT_INVALID, EXIT_VERIFY, EXIT_IO = 0, 2, 3, 4

METHODS = {"series": "series", "volterra": "volterra_abel", "recursion": "recursion_hb"}
CROSS_TOL = 2e-3

log = logging.getLogger("brownmax")


class UsageError(ValueError):
    pass


# -- output helpers -------------------------------------------------------------------

def _node(k: int, dx: float) -> float:
    # strip the last-bit noise of k * dx so rows like r=3.0 read cleanly
    return float(round(k * dx, 12))


def _csv_text(header, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([int(v) if isinstance(v, (int, np.integer)) else repr(float(v)) for v in row])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_atomic(files: dict[str, str]) -> None:
    """Write every ``path -> text`` pair via temporary files, then rename them all."""
    tmps = []
    try:
        for path, text in files.items():
            tmp = f"{path}.tmp"
            with open(tmp, "w", newline="") as fh:
                fh.write(text)
            tmps.append((tmp, path))
        for tmp, path in tmps:
            os.replace(tmp, path)
    finally:
        for tmp, _ in tmps:
            if os.path.exists(tmp):
                os.remove(tmp)


def _figure_path(out: str) -> str:
    return os.path.splitext(out)[0] + ".svg"


def _positive(name, v):
    if v is None or not (v > 0 and math.isfinite(v)):
        raise UsageError(f"--{name} must be positive and finite, got {v}")
    return v


def _params(args) -> ProcessParams:
    _positive("a", args.a)
    b = args.a if args.b is None else args.b
    _positive("b", b)
    return ProcessParams(args.a, b)


def _emit(args, files: dict[str, str], summary: dict | None = None) -> None:
    if args.out:
        write_atomic(files)
    elif summary is not None:
        sys.stdout.write(_json_text(_clean(summary)))
    else:
        sys.stdout.write(next(iter(files.values())))


# -- commands -------------------------------------------------------------------------

def cmd_tabulate_h(args) -> int:
    p = _params(args)
    dx = _positive("dx", args.dx if args.dx is not None else p.b / 400)
    r_max = _positive("rmax", args.rmax if args.rmax is not None else 8 * p.a)
    n = int(math.floor(r_max / dx + 1e-9)) + 1
    r = np.array([_node(k, dx) for k in range(n)])
    out = args.out or "h.csv"
    _emit(args, {out: _csv_text(["r", "h"], [r, eval_h(p, r)])})
    if args.out and args.plot:
        from .plotting import figure_h, save_svg
        save_svg(figure_h(p, r_max=r_max, dx=dx), _figure_path(args.out))
    return EXIT_OK


def _solve(a, method, dx, r_max, b):
    return solve_levy_tail(a, METHODS[method], dx, r_max, b=b)


def cmd_solve_g(args) -> int:
    a = _positive("a", args.a)
    dx = _positive("dx", args.dx if args.dx is not None else a / 400)
    r_max = _positive("rmax", args.rmax if args.rmax is not None else 8 * a)
    if args.method not in (*METHODS, "all"):
        raise UsageError(f"--method must be one of {sorted(METHODS) + ['all']}")
    b = args.b if args.b is not None else a
    _positive("b", b)
    methods = list(METHODS) if args.method == "all" else [args.method]
    tails = {m: _solve(a, m, dx, r_max, b) for m in methods}
    first = tails[methods[0]].grid
    r = np.array([_node(k, dx) for k in range(first.n)])
    residuals = {m: abel_residual(t.grid, a) for m, t in tails.items()}
    header = ["r"] + [f"G_{m}" for m in methods]
    columns = [r] + [t.grid.full_values() for t in tails.values()]
    report = {
        "config": {"a": a, "b": b, "dx": dx, "r_max": r_max, "method": args.method},
        "nodes": first.n,
        "singular_coeff": first.singular_coeff,
        "max_residual": {m: float(np.max(np.abs(v))) for m, v in residuals.items()},
    }
    if args.method == "all":
        header += [f"residual_{m}" for m in methods]
        columns += list(residuals.values())
        window = r <= 5 * a + 1e-12
        pairs = {f"{m1}-{m2}": float(np.max(np.abs(tails[m1].grid.values - tails[m2].grid.values)[window]))
                 for m1, m2 in itertools.combinations(methods, 2)}
        report["pairwise_max_discrepancy"] = pairs
        report["discrepancy_window"] = [0.0, float(r[window][-1])]
        report["discrepancy_pass"] = max(pairs.values()) <= CROSS_TOL
    # G_a(r) = G_1(r / a) / sqrt(a): the same nodes in units of a
    unit = _solve(1.0, methods[0], dx / a, r_max / a, b / a).grid
    scale_diff = float(np.max(np.abs(first.full_values()[1:] - unit.full_values()[1:] / math.sqrt(a))))
    report["scaling_check"] = {"max_abs_diff": scale_diff, "pass": scale_diff <= CROSS_TOL}
    out = args.out or "G.csv"
    files = {out: _csv_text(header, columns)}
    files[sidecar_path(out)] = _json_text(_clean(report))
    _emit(args, files, report if not args.out else None)
    if args.out and args.plot:
        from .plotting import figure_G1, save_svg
        if a == 1.0:
            save_svg(figure_G1(min(r_max, 5.0), dx), _figure_path(args.out))
    return EXIT_OK


def cmd_gap_density(args) -> int:
    p = _params(args)
    dx = _positive("dx", args.dx if args.dx is not None else p.b / 400)
    r_max = _positive("rmax", args.rmax if args.rmax is not None else 10 * (p.a + p.b))
    g = gap_density_series(p, dx, r_max)
    mass, mean = density_moments(g, exponential_tail_rate(p))
    r = np.array([_node(k, dx) for k in range(g.n)])
    fp = first_point_density(p, g, r)
    target = math.pi * math.sqrt(p.a * p.b)
    report = {"config": {"a": p.a, "b": p.b, "dx": dx, "r_max": r_max},
              "mass": mass, "mean": mean, "mean_target": target,
              "mean_rel_error": abs(mean - target) / target,
              "tail_rate": exponential_tail_rate(p)}
    out = args.out or "gap_density.csv"
    files = {out: _csv_text(["r", "g", "first_point"], [r, g.full_values(), fp]),
             sidecar_path(out): _json_text(_clean(report))}
    _emit(args, files, report if not args.out else None)
    if args.out and args.plot:
        from .grid_calc.grid import GridFunction
        from .plotting import figure_gap_density, save_svg
        save_svg(figure_gap_density(g, p, GridFunction(0.0, dx, fp)), _figure_path(args.out))
    return EXIT_OK


def _thetas(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--theta must be a comma-separated list of numbers, got {text!r}") from None
    if not vals or any(not (v > 0) for v in vals):
        raise UsageError("--theta values must be positive")
    return vals


def cmd_laplace_check(args) -> int:
    a = _positive("a", args.a)
    dx = _positive("dx", args.dx if args.dx is not None else a / 400)
    r_max = _positive("rmax", args.rmax if args.rmax is not None else 8 * a)
    thetas = _thetas(args.theta)
    tail = _solve(a, args.method if args.method in METHODS else "series", dx, r_max, None)
    rate = tail_constants().rate_for_a(a)
    num = np.array([laplace_numeric(tail.grid, th, ExponentialTail(rate)) for th in thetas])
    ref = np.array([laplace_G_closed(a, th) for th in thetas])
    rel = np.abs(num - ref) / ref
    report = {"config": {"a": a, "dx": dx, "r_max": r_max, "method": tail.method, "theta": thetas},
              "max_rel_error": float(rel.max()), "pass": bool(rel.max() <= 5e-3)}
    out = args.out or "laplace.csv"
    files = {out: _csv_text(["theta", "numeric", "closed_form", "rel_error"], [thetas, num, ref, rel]),
             sidecar_path(out): _json_text(_clean(report))}
    _emit(args, files, report if not args.out else None)
    return EXIT_OK


def cmd_rho(args) -> int:
    tc = tail_constants()
    a = _positive("a", args.a)
    report = {"rho": tc.rho, "lambda": tc.lam, "M_at_rho": kummer_m(SHIFTED, tc.rho),
              "a": a, "tail_rate": tc.rate_for_a(a), "tail_amplitude": tc.amplitude_for_a(a)}
    text = _json_text(_clean(report))
    if args.out:
        write_atomic({args.out: text})
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _path_config(args, p: ProcessParams):
    from .mc_sim.paths import PathConfig
    dt = _positive("dt", args.dt if args.dt is not None else p.b / 512)
    cfg = PathConfig(dt=dt, horizon=_positive("horizon", args.horizon),
                     seed=args.seed, n_paths=args.paths)
    cfg.check_reaches(p.a, p.b)
    return cfg


def _estimator(value, stderr, target, tol):
    return {"value": value, "stderr": stderr, "target": target, "pass": bool(abs(value - target) <= tol)}


def run_gaps(run) -> np.ndarray:
    return np.concatenate([r.sample.gaps for r in run.results])


def cmd_simulate(args) -> int:
    from dataclasses import asdict
    from .mc_sim.estimators import estimate_intensity, estimate_pair_correlation, gap_statistics
    from .mc_sim.runner import simulate

    p = _params(args)
    cfg = _path_config(args, p)
    run = simulate(p, cfg)
    c = p.intensity
    est = estimate_intensity(run.samples)
    g = gap_density_series(p, p.b / 400, 40 * (p.a + p.b))
    gs = gap_statistics(run.samples, g)
    mean_target = 1 / c
    spacing = min((float(np.min(s.gaps)) for s in run.samples if s.count > 1), default=float("inf"))
    report = {
        "config": {"a": p.a, "b": p.b, **asdict(cfg)},
        "estimators": {
            "intensity": _estimator(est.mean, est.stderr, c, 3 * est.stderr + 0.02 * c),
            "mean_gap": _estimator(gs.mean, gs.mean_stderr, mean_target,
                                   3 * gs.mean_stderr + 0.02 * mean_target),
            "lag1_corr": _estimator(gs.lag1_corr, gs.lag1_stderr, 0.0, 3 * gs.lag1_stderr),
            "ks_distance": {"value": gs.ks_distance, "stderr": None, "target": gs.ks_critical_1pct,
                            "pass": bool(gs.ks_distance < gs.ks_critical_1pct)},
            "min_spacing": {"value": spacing, "stderr": None, "target": p.b - 2 * cfg.dt,
                            "pass": bool(spacing >= p.b - 2 * cfg.dt)},
        },
        "n_points": int(sum(s.count for s in run.samples)),
    }
    out = args.out or "simulate.json"
    files = {out: _json_text(_clean(report))}
    if args.gaps_csv:
        idx = [r.index for r in run.results for _ in range(r.sample.gaps.size)]
        files[args.gaps_csv] = _csv_text(["path", "gap"], [idx, run_gaps(run)])
    _emit(args, files, report if not args.out else None)
    if args.out and args.plot:
        from .plotting import figure_pair_corr_overlay, save_svg
        pc = estimate_pair_correlation(run.samples, 0.05 * p.b, 4 * (p.a + p.b), origin=0.025 * p.b)
        save_svg(figure_pair_corr_overlay(pc, p), _figure_path(args.out))
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verification import run_verification
    if args.profile not in ("fast", "full"):
        raise UsageError("--profile must be fast or full")
    report = run_verification(args.profile)
    for c in report.checks:
        print(c.line())
    if args.out:
        write_atomic({args.out: report.to_json()})
    if not report.passed:
        print(f"verification failed: {report.first_failure.id} {report.first_failure.name}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_plot(args) -> int:
    from . import plotting
    if args.target not in plotting.TARGETS:
        raise UsageError(f"--target must be one of {plotting.TARGETS}")
    if not args.out:
        raise UsageError("--out is required for plot")
    if args.target in ("G1", "lnG1"):
        dx = _positive("dx", args.dx if args.dx is not None else 1 / 400)
        r_max = _positive("rmax", args.rmax if args.rmax is not None else 5.0)
        fig = plotting.figure_G1(r_max, dx, log=args.target == "lnG1")
    elif args.target == "h":
        p = _params(args)
        fig = plotting.figure_h(p, args.rmax, args.dx)
    elif args.target == "gap_density":
        p = _params(args)
        dx = _positive("dx", args.dx if args.dx is not None else p.b / 400)
        g = gap_density_series(p, dx, args.rmax or 10 * (p.a + p.b))
        fig = plotting.figure_gap_density(g, p)
    else:
        from .mc_sim.estimators import estimate_pair_correlation
        from .mc_sim.runner import simulate
        p = _params(args)
        run = simulate(p, _path_config(args, p))
        pc = estimate_pair_correlation(run.samples, 0.05 * p.b, args.rmax or 4 * (p.a + p.b),
                                       origin=0.025 * p.b)
        fig = plotting.figure_pair_corr_overlay(pc, p)
    plotting.save_svg(fig, args.out)
    return EXIT_OK


COMMANDS = {
    "tabulate-h": (cmd_tabulate_h, "tabulate the pair correlation h_{a,b}"),
    "solve-g": (cmd_solve_g, "solve for the Lévy measure tail G_a"),
    "gap-density": (cmd_gap_density, "gap and first-point densities of M_{a,b}"),
    "laplace-check": (cmd_laplace_check, "numeric Laplace transform of G_a vs the Kummer closed form"),
    "rho": (cmd_rho, "decay constants of G_a"),
    "simulate": (cmd_simulate, "Monte Carlo estimates from simulated Brownian paths"),
    "verify": (cmd_verify, "run the acceptance suite"),
    "plot": (cmd_plot, "render an SVG figure"),
}


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(prog="brownmax", description=__doc__.splitlines()[0],
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text,
                            formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        sp.add_argument("--config", help="key=value file; explicit flags take precedence")
        sp.add_argument("--out", help="output path (stdout when omitted, where supported)")
        if name in ("tabulate-h", "solve-g", "gap-density", "laplace-check", "rho", "simulate", "plot"):
            sp.add_argument("--a", type=float, default=1.0, help="left reach a")
        if name in ("tabulate-h", "solve-g", "gap-density", "simulate", "plot"):
            sp.add_argument("--b", type=float, default=None, help="right reach b (defaults to a)")
        if name in ("tabulate-h", "solve-g", "gap-density", "laplace-check", "plot"):
            sp.add_argument("--dx", type=float, default=None,
                            help="grid step (a/400 for G_a, b/400 for h and gap densities)")
            sp.add_argument("--rmax", type=float, default=None,
                            help="grid end (8a for G_a, 8a for h, 10(a+b) for gap densities)")
        if name in ("solve-g", "laplace-check"):
            sp.add_argument("--method", default="all" if name == "solve-g" else "series",
                            help="series, volterra, recursion or all")
        if name == "laplace-check":
            sp.add_argument("--theta", default="0.5,1,2,5", help="comma-separated transform arguments")
        if name in ("simulate", "plot"):
            sp.add_argument("--dt", type=float, default=None, help="time step (defaults to b/512)")
            sp.add_argument("--horizon", type=float, default=200.0, help="half-length T of the path")
            sp.add_argument("--paths", type=int, default=200, help="number of independent paths")
            sp.add_argument("--seed", type=int, default=0, help="64-bit seed")
        if name == "simulate":
            sp.add_argument("--gaps-csv", help="also dump raw gaps to this CSV")
        if name in ("tabulate-h", "solve-g", "gap-density", "simulate"):
            sp.add_argument("--plot", action="store_true", help="render an SVG next to --out")
        if name == "verify":
            sp.add_argument("--profile", default="fast", help="fast or full")
        if name == "plot":
            sp.add_argument("--target", default="G1", help="G1, lnG1, h, gap_density or pair_corr_overlay")
        subs[name] = sp
    return parser, subs


def read_config(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sp = subs[args.command]
        values = read_config(args.config)
        unknown = sorted(set(values) - set(vars(args)) - {"config", "command"})
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {unknown}")
        # string defaults pass through each action's type conversion
        sp.set_defaults(**values)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    func = COMMANDS[args.command][0]
    try:
        return func(args)
    except (UsageError, BrownmaxError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
