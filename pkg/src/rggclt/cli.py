"""Command-line interface.

Subcommands: ``constants``, ``table1``, ``simulate``, ``prop-check``,
``oracle-test``, ``sigma2n``.  Exit codes form a stable contract for CI:
0 pass, 1 statistical fail, 2 configuration error, 3 regime refusal.
All outputs are deterministic given the config and seed; no timestamps are
written.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from ._version import __version__
from .analytics import mu_n, sigma2n_sq_mc
from .density import CircularDensity, constants as density_constants
from .experiments import (
    ExperimentConfig,
    RegimeError,
    expansion_scaling_check,
    records_to_csv,
    run_experiment,
    summary_to_json,
    table1_reproduce,
)
from .geometry import brute_force_counts, counts
from .sampler import derive_stream, sample_points

EXIT_PASS = 0
EXIT_STAT_FAIL = 1
EXIT_CONFIG = 2
EXIT_REGIME = 3

DEFAULT_R_GRID = (0.02, 0.01, 0.005, 0.0025)
ORDER_BARS = {"edge": 3.5, "two_path": 3.5, "triangle": 3.5, "mu_n": 2.5}

_PLOT_TEMPLATE = '''\
"""Histogram and QQ data for the standardized clustering statistic.

Reads {csv_name} (written alongside this script) and renders z against the
standard normal.  Generated file; regenerate by rerunning the simulate
command.
"""
import csv
import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt


def normal_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def normal_quantile(p, lo=-12.0, hi=12.0):
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


here = os.path.dirname(os.path.abspath(__file__))
zs = []
with open(os.path.join(here, "{csv_name}")) as fh:
    for row in csv.DictReader(fh):
        if row["z"]:
            zs.append(float(row["z"]))
zs.sort()
m = len(zs)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4.5))
ax1.hist(zs, bins=40, density=True, alpha=0.6, label="z sample")
grid = [-4 + 8 * i / 400 for i in range(401)]
ax1.plot(grid, [math.exp(-t * t / 2) / math.sqrt(2 * math.pi) for t in grid],
         "k-", label="N(0,1)")
ax1.set_title("standardized clustering statistic (R=%d)" % m)
ax1.legend()

theo = [normal_quantile((i + 0.5) / m) for i in range(m)]
ax2.plot(theo, zs, ".", markersize=3)
lim = max(abs(theo[0]), abs(theo[-1]), abs(zs[0]), abs(zs[-1]))
ax2.plot([-lim, lim], [-lim, lim], "k--", linewidth=1)
ax2.set_title("QQ plot vs N(0,1)")
ax2.set_xlabel("theoretical quantile")
ax2.set_ylabel("sample quantile")

out = os.path.join(here, "z_diagnostics.png")
fig.tight_layout()
fig.savefig(out, dpi=130)
print("wrote", out)
'''


def _fail_config(message):
    print(f"config error: {message}", file=sys.stderr)
    return EXIT_CONFIG


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _density_and_r(args):
    """Resolve (density, r) from --config or --density/--r flags."""
    if args.config:
        raw = _load_json(args.config)
        unknown = set(raw) - {"density", "r"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "density" not in raw:
            raise ValueError("config is missing 'density'")
        density = CircularDensity.from_spec(raw["density"])
        r = raw.get("r", args.r)
    else:
        if args.density is None:
            raise ValueError("provide --config or --density")
        density = CircularDensity.from_spec(json.loads(args.density))
        r = args.r
    if r is None:
        raise ValueError("no radius given (use --r or put 'r' in the config)")
    return density, float(r)


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def cmd_constants(args):
    try:
        density, r = _density_and_r(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail_config(exc)
    const = density_constants(density)
    rc = mu_n(density, r, asymptotic_constants=const)
    payload = {
        "density": density.spec(),
        "r": r,
        "a_f": const.a_f,
        "b_f": const.b_f,
        "c_f": const.c_f,
        "sigma1_sq": const.sigma1_sq,
        "e_f2": const.moments.e_f2,
        "e_fp2": const.moments.e_fp2,
        "e_ffpp": const.moments.e_ffpp,
        "mu_n_exact": rc.mu_n_exact,
        "mu_n_expansion": rc.mu_n_expansion,
        "sigma3n_sq_leading": rc.sigma3n_sq_leading,
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write(args.out, "constants.json", text)
    return EXIT_PASS


def cmd_table1(args):
    tol = args.tolerance if args.tolerance is not None else 0.005
    cells = table1_reproduce(rel_tol=tol)
    lines = ["kappa,mu,sigma1_sq,reference,rel_err,passed"]
    ok = 0
    for cell in cells:
        verdict = "PASS" if cell.passed else "FAIL"
        ok += cell.passed
        print(f"kappa={cell.kappa:<4} mu={cell.mu:<4} sigma1_sq={cell.computed:16.2f} "
              f"reference={cell.reference:14.2f} rel_err={cell.rel_err:.2e} {verdict}")
        lines.append(f"{cell.kappa},{cell.mu},{cell.computed!r},"
                     f"{cell.reference!r},{cell.rel_err!r},{cell.passed}")
    print(f"{ok}/{len(cells)} cells within {tol:.3g} relative tolerance")
    if args.out:
        _write(args.out, "table1.csv", "\n".join(lines) + "\n")
    return EXIT_PASS if ok == len(cells) else EXIT_STAT_FAIL


def cmd_simulate(args):
    try:
        raw = _load_json(args.config)
        if args.seed is not None:
            raw["master_seed"] = args.seed
        if args.reps is not None:
            raw["replications"] = args.reps
        config = ExperimentConfig.from_dict(raw)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail_config(exc)
    try:
        records, summary = run_experiment(config, workers=args.threads)
    except RegimeError as exc:
        print(f"regime refusal: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except ValueError as exc:
        return _fail_config(exc)
    out_dir = args.out or config.out_dir or "."
    csv_path = _write(out_dir, "records.csv", records_to_csv(records))
    _write(out_dir, "summary.json", summary_to_json(summary))
    _write(out_dir, "plot_z.py", _PLOT_TEMPLATE.format(csv_name="records.csv"))
    print(f"regime={summary.regime} R_effective={summary.r_effective} "
          f"mu_n={summary.mu_n_exact:.6f}")
    if summary.ks is not None:
        print(f"z: mean={summary.mean_z:.4f} var={summary.var_z:.4f} "
              f"KS={summary.ks:.4f}")
    print(f"records: {csv_path}")
    return EXIT_PASS


def cmd_prop_check(args):
    try:
        density, _ = _density_and_r_optional(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail_config(exc)
    grid = tuple(args.r_grid) if args.r_grid else DEFAULT_R_GRID
    all_pass = True
    for quantity, bar in ORDER_BARS.items():
        check = expansion_scaling_check(density, quantity, grid)
        observed = [o for o in check.orders if o is not None]
        if not observed:
            verdict = "PASS (expansion exact)"
        elif min(observed) >= bar:
            verdict = f"PASS (min order {min(observed):.2f} >= {bar})"
        else:
            verdict = f"FAIL (min order {min(observed):.2f} < {bar})"
            all_pass = False
        orders_txt = ", ".join("exact" if o is None else f"{o:.2f}"
                               for o in check.orders)
        errors_txt = ", ".join(f"{e:.3e}" for e in check.errors)
        print(f"{quantity:9s} errors=[{errors_txt}] orders=[{orders_txt}] {verdict}")
    return EXIT_PASS if all_pass else EXIT_STAT_FAIL


def _density_and_r_optional(args):
    """Like _density_and_r but tolerates a missing radius."""
    class _Shim:
        config = args.config
        density = args.density
        r = getattr(args, "r", None) or 0.01
    return _density_and_r(_Shim)


def cmd_oracle_test(args):
    rng_stream = derive_stream(args.seed, 0)
    uniform = CircularDensity.uniform()
    failures = 0
    # wraparound fixture: the case a single forward-window method gets wrong
    fixture = np.array([0.0, 0.4, 0.8])
    if counts(fixture, 0.4) != brute_force_counts(fixture, 0.4):
        failures += 1
        print("FAIL wraparound fixture {0, 0.4, 0.8} at r=0.4")
    for k in range(args.instances):
        u = rng_stream.uniforms(3)
        n = 3 + int(u[0] * 58)          # n in [3, 60]
        r = float(u[1]) * 0.5
        if r == 0.0:
            r = 0.25
        sample = sample_points(uniform, n, rng_stream)
        fast = counts(sample, r)
        brute = brute_force_counts(sample, r)
        if fast != brute:
            failures += 1
            print(f"FAIL instance {k}: n={n} r={r!r} fast={fast} brute={brute}")
    verdict = "PASS" if failures == 0 else "FAIL"
    print(f"oracle equivalence: {args.instances} instances, "
          f"{failures} mismatches: {verdict}")
    return EXIT_PASS if failures == 0 else EXIT_STAT_FAIL


def cmd_sigma2n(args):
    try:
        density, r = _density_and_r(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        return _fail_config(exc)
    tol = args.tolerance if args.tolerance is not None else 0.02
    try:
        rc = mu_n(density, r)
        estimate, stderr = sigma2n_sq_mc(density, r, rc.mu_n_exact,
                                         args.samples,
                                         derive_stream(args.seed, 0))
    except ValueError as exc:
        return _fail_config(exc)
    rel = stderr / estimate if estimate > 0 else math.inf
    payload = {"density": density.spec(), "r": r, "samples": args.samples,
               "sigma2n_sq": estimate, "stderr": stderr,
               "sigma2n": math.sqrt(max(estimate, 0.0)),
               "rel_stderr": rel}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(text)
    if args.out:
        _write(args.out, "sigma2n.json", text)
    ok = estimate > 0 and rel <= tol
    print(f"sigma2n_sq = {estimate:.6e} +/- {stderr:.2e} "
          f"({'PASS' if ok else 'FAIL'}: rel stderr {rel:.3f} vs {tol})")
    return EXIT_PASS if ok else EXIT_STAT_FAIL


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rggclt",
        description="Circle geometric graphs: clustering-coefficient "
                    "constants, simulations, and normality experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config=True, density=True, radius=True, out=True):
        if config:
            p.add_argument("--config", help="path to a JSON config file")
        if density:
            p.add_argument("--density", help="inline density spec as JSON")
        if radius:
            p.add_argument("--r", type=float, help="connection radius")
        if out:
            p.add_argument("--out", help="directory for machine-readable output")

    p = sub.add_parser("constants", help="asymptotic and centering constants")
    add_common(p)
    p.set_defaults(handler=cmd_constants)

    p = sub.add_parser("table1", help="reference sigma1^2 grid reproduction")
    p.add_argument("--tolerance", type=float, default=None,
                   help="relative tolerance per cell (default 0.005)")
    p.add_argument("--out", help="directory for the CSV output")
    p.set_defaults(handler=cmd_table1)

    p = sub.add_parser("simulate", help="replicated clustering experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None, help="master seed override")
    p.add_argument("--reps", type=int, default=None, help="replications override")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--threads", type=int, default=1, help="worker count")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("prop-check", help="expansion remainder order measurement")
    add_common(p, out=False)
    p.add_argument("--r-grid", type=float, nargs="+", default=None,
                   help="halving radius grid (default 0.02 0.01 0.005 0.0025)")
    p.set_defaults(handler=cmd_prop_check)

    p = sub.add_parser("oracle-test", help="fast counts vs brute force sweep")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--seed", type=int, default=20240)
    p.set_defaults(handler=cmd_oracle_test)

    p = sub.add_parser("sigma2n", help="Monte Carlo sigma2n^2 estimate")
    add_common(p)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=20240)
    p.add_argument("--tolerance", type=float, default=None,
                   help="max relative stderr for a PASS (default 0.02)")
    p.set_defaults(handler=cmd_sigma2n)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())
