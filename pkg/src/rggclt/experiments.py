"""Replicated clustering-coefficient experiments and their diagnostics.

An experiment samples R independent graph realizations, counts subgraphs,
standardizes the clustering coefficient with the regime-appropriate scaling,
and summarizes the z sample (moments, Kolmogorov-Smirnov distance against
the standard normal).  Everything is a pure function of the configuration
and master seed: reruns are byte-identical regardless of worker count.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._version import __version__
from .analytics import (
    RegimeKind,
    RegimeThresholds,
    SIGMA2N_STREAM_INDEX,
    classify_regime,
    edge_probability_given,
    edge_probability_expansion,
    exact_triangle_probability,
    exact_twopath_probability,
    mu_n,
    scaling_factor,
    sigma2n_sq_mc,
    triangle_probability_expansion,
    twopath_probability_expansion,
)
from .density import CircularDensity, constants as density_constants
from .geometry import SubgraphCounts, clustering_coefficient, counts
from .sampler import derive_stream, sample_points

RECORDS_CSV_HEADER = "index,edges,two_paths,triangles,c_n,z"

_REGIME_NAMES = {
    "auto": None,
    "dense_i": RegimeKind.DENSE_I,
    "intermediate_ii": RegimeKind.INTERMEDIATE_II,
    "sparse_iii": RegimeKind.SPARSE_III,
}


class RegimeError(RuntimeError):
    """Experiment refused: the (n, r) pair falls in the excluded regime."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description.

    ``r`` may be given directly or through the rule r = c * n ** (-alpha).
    """
    density: dict
    n: int
    replications: int
    master_seed: int
    r: Optional[float] = None
    r_rule: Optional[dict] = None
    regime: str = "auto"
    sigma2n_samples: int = 2_000_000
    out_dir: Optional[str] = None

    _ALLOWED_KEYS = {"density", "n", "r", "r_rule", "regime", "replications",
                     "master_seed", "sigma2n_samples", "out_dir"}

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ValueError("experiment config must be a JSON object")
        unknown = set(raw) - cls._ALLOWED_KEYS
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        for key in ("density", "n", "replications", "master_seed"):
            if key not in raw:
                raise ValueError(f"config is missing required key {key!r}")
        if ("r" in raw) == ("r_rule" in raw):
            raise ValueError("config must set exactly one of 'r' and 'r_rule'")
        if "r_rule" in raw:
            rule = raw["r_rule"]
            if not isinstance(rule, dict) or set(rule) != {"c", "alpha"}:
                raise ValueError("r_rule must be {'c': ..., 'alpha': ...}")
        cfg = cls(density=raw["density"], n=int(raw["n"]),
                  replications=int(raw["replications"]),
                  master_seed=int(raw["master_seed"]),
                  r=float(raw["r"]) if "r" in raw else None,
                  r_rule=raw.get("r_rule"),
                  regime=raw.get("regime", "auto"),
                  sigma2n_samples=int(raw.get("sigma2n_samples", 2_000_000)),
                  out_dir=raw.get("out_dir"))
        cfg.validate()
        return cfg

    def validate(self):
        CircularDensity.from_spec(self.density)  # rejects malformed specs
        if self.n < 3:
            raise ValueError(f"n must be >= 3, got {self.n}")
        if self.replications < 2:
            raise ValueError(f"replications must be >= 2, got {self.replications}")
        if self.regime not in _REGIME_NAMES:
            raise ValueError(f"unknown regime {self.regime!r}; "
                             f"expected one of {sorted(_REGIME_NAMES)}")
        r = self.resolve_r()
        if not 0.0 < r <= 0.5:
            raise ValueError(f"radius resolves to {r}, outside (0, 0.5]")

    def resolve_r(self):
        if self.r is not None:
            return self.r
        return self.r_rule["c"] * self.n ** (-self.r_rule["alpha"])

    def echo(self, resolved_r, resolved_regime):
        return {
            "density": self.density,
            "n": self.n,
            "r": resolved_r,
            "regime_requested": self.regime,
            "regime": resolved_regime,
            "replications": self.replications,
            "master_seed": self.master_seed,
            "sigma2n_samples": self.sigma2n_samples,
        }


@dataclass(frozen=True)
class ReplicationRecord:
    index: int
    counts: SubgraphCounts
    c_n: Optional[float]
    z: Optional[float]
    skip_reason: Optional[str]
    wall_ms: float


@dataclass(frozen=True)
class ExperimentSummary:
    r_effective: int
    skipped: list
    mean_z: Optional[float]
    var_z: Optional[float]
    skew_z: Optional[float]
    ex_kurtosis_z: Optional[float]
    ks: Optional[float]
    mean_c: Optional[float]
    stderr_c: Optional[float]
    mu_n_exact: float
    mu_n_expansion: float
    sigma1_sq: float
    sigma2n: Optional[dict]
    e_f2: float
    regime: str
    regime_diagnostics: dict
    config: dict
    version: str = __version__


def normal_cdf(x):
    """Standard normal CDF through the C library erf (correct to ~1 ulp)."""
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def ks_statistic(z_sample):
    """Sup distance between the empirical CDF and the standard normal CDF."""
    z = np.sort(np.asarray(z_sample, dtype=float))
    m = z.size
    if m < 2:
        raise ValueError("KS statistic needs a sample of size >= 2")
    cdf = np.array([normal_cdf(v) for v in z])
    steps = np.arange(1, m + 1) / m
    return float(max(np.max(steps - cdf), np.max(cdf - (steps - 1.0 / m))))


def summarize_z(z_sample):
    """Moment and goodness-of-fit diagnostics of a standardized sample."""
    z = np.asarray(z_sample, dtype=float)
    m = z.size
    mean = float(np.mean(z))
    centered = z - mean
    m2 = float(np.mean(centered ** 2))
    var = float(np.var(z, ddof=1)) if m >= 2 else 0.0
    if m2 > 0.0:
        skew = float(np.mean(centered ** 3)) / m2 ** 1.5
        ex_kurt = float(np.mean(centered ** 4)) / m2 ** 2 - 3.0
    else:
        skew = 0.0
        ex_kurt = 0.0
    return {"mean": mean, "var": var, "skew": skew, "ex_kurtosis": ex_kurt,
            "ks": ks_statistic(z)}


def _run_replication(density, n, r, mu_exact, scaling, master_seed, index):
    start = time.perf_counter()
    stream = derive_stream(master_seed, index)
    sample = sample_points(density, n, stream)
    sc = counts(sample, r)
    c = clustering_coefficient(sc)
    if c is None:
        z, reason = None, "no_two_paths"
    else:
        z, reason = scaling * (c - mu_exact), None
    wall_ms = (time.perf_counter() - start) * 1000.0
    return ReplicationRecord(index=index, counts=sc, c_n=c, z=z,
                             skip_reason=reason, wall_ms=wall_ms)


def _replication_block(density_spec, n, r, mu_exact, scaling, master_seed, indices):
    density = CircularDensity.from_spec(density_spec)
    return [_run_replication(density, n, r, mu_exact, scaling, master_seed, i)
            for i in indices]


def run_experiment(config, workers=1, thresholds=None):
    """Run all replications of ``config`` and summarize them.

    Returns (records, summary).  Refuses degenerate (n, r) pairs unless the
    config forces a regime.  Results are a pure function of the config and
    master seed, independent of ``workers``.
    """
    density = CircularDensity.from_spec(config.density)
    const = density_constants(density)
    r = config.resolve_r()
    n = config.n

    regime = classify_regime(n, r, density, thresholds=thresholds,
                             asymptotic_constants=const)
    forced = _REGIME_NAMES[config.regime]
    if forced is None:
        if regime.kind == RegimeKind.DEGENERATE:
            raise RegimeError(
                "the configured (n, r) pair is outside every tractable regime "
                f"(diagnostics: {regime.diagnostics})", regime.diagnostics)
        kind = regime.kind
    else:
        kind = forced

    rc = mu_n(density, r, asymptotic_constants=const)
    sigma1 = math.sqrt(const.sigma1_sq)
    sigma2n_est = None
    sigma2n = None
    if kind == RegimeKind.INTERMEDIATE_II:
        est, se = sigma2n_sq_mc(density, r, rc.mu_n_exact, config.sigma2n_samples,
                                derive_stream(config.master_seed,
                                              SIGMA2N_STREAM_INDEX))
        sigma2n_est = {"sq_estimate": est, "sq_stderr": se}
        sigma2n = math.sqrt(est)
    scaling = scaling_factor(kind, n, r, rc.e_f2,
                             sigma1 if kind == RegimeKind.DENSE_I else None,
                             sigma2n)

    indices = list(range(config.replications))
    if workers <= 1 or len(indices) < 2:
        records = _replication_block(config.density, n, r, rc.mu_n_exact,
                                     scaling, config.master_seed, indices)
    else:
        blocks = np.array_split(indices, min(workers * 4, len(indices)))
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_replication_block, config.density, n, r,
                                   rc.mu_n_exact, scaling, config.master_seed,
                                   [int(i) for i in blk])
                       for blk in blocks if len(blk)]
            records = [rec for fut in futures for rec in fut.result()]
        records.sort(key=lambda rec: rec.index)

    summary = summarize(records, rc, kind, regime.diagnostics, config, r,
                        sigma2n_est)
    return records, summary


def summarize(records, rc, kind, diagnostics, config, resolved_r, sigma2n_est):
    effective = [rec for rec in records if rec.z is not None]
    skipped = [{"index": rec.index, "reason": rec.skip_reason}
               for rec in records if rec.z is None]
    if len(effective) >= 2:
        stats = summarize_z([rec.z for rec in effective])
        cs = np.array([rec.c_n for rec in effective])
        mean_c = float(np.mean(cs))
        stderr_c = float(np.std(cs, ddof=1) / math.sqrt(cs.size))
    else:
        stats = {"mean": None, "var": None, "skew": None,
                 "ex_kurtosis": None, "ks": None}
        mean_c = stderr_c = None
    return ExperimentSummary(
        r_effective=len(effective),
        skipped=skipped,
        mean_z=stats["mean"], var_z=stats["var"], skew_z=stats["skew"],
        ex_kurtosis_z=stats["ex_kurtosis"], ks=stats["ks"],
        mean_c=mean_c, stderr_c=stderr_c,
        mu_n_exact=rc.mu_n_exact, mu_n_expansion=rc.mu_n_expansion,
        sigma1_sq=rc.sigma1_sq, sigma2n=sigma2n_est, e_f2=rc.e_f2,
        regime=kind.value, regime_diagnostics=diagnostics,
        config=config.echo(resolved_r, kind.value),
    )


def records_to_csv(records):
    """Fixed-header CSV, one row per replication.

    Floats are serialized with repr (shortest round-trip form), so parsing
    the file back reproduces the in-memory values bit for bit.  Skipped
    replications leave the c_n and z cells empty.  Wall-clock timings stay
    in memory: including them would break byte-identity across reruns.
    """
    lines = [RECORDS_CSV_HEADER]
    for rec in records:
        c = "" if rec.c_n is None else repr(rec.c_n)
        z = "" if rec.z is None else repr(rec.z)
        sc = rec.counts
        lines.append(f"{rec.index},{sc.edges},{sc.ordered_two_paths},"
                     f"{sc.triangles},{c},{z}")
    return "\n".join(lines) + "\n"


def parse_records_csv(text):
    lines = text.strip().split("\n")
    if lines[0] != RECORDS_CSV_HEADER:
        raise ValueError(f"unexpected records header {lines[0]!r}")
    rows = []
    for line in lines[1:]:
        idx, edges, paths, tris, c, z = line.split(",")
        rows.append({"index": int(idx), "edges": int(edges),
                     "two_paths": int(paths), "triangles": int(tris),
                     "c_n": float(c) if c else None,
                     "z": float(z) if z else None})
    return rows


def summary_to_json(summary):
    payload = {
        "r_effective": summary.r_effective,
        "skipped": summary.skipped,
        "z": {"mean": summary.mean_z, "var": summary.var_z,
              "skew": summary.skew_z, "ex_kurtosis": summary.ex_kurtosis_z,
              "ks": summary.ks},
        "c_n": {"mean": summary.mean_c, "stderr": summary.stderr_c},
        "mu_n_exact": summary.mu_n_exact,
        "mu_n_expansion": summary.mu_n_expansion,
        "sigma1_sq": summary.sigma1_sq,
        "sigma2n": summary.sigma2n,
        "e_f2": summary.e_f2,
        "regime": summary.regime,
        "regime_diagnostics": summary.regime_diagnostics,
        "config": summary.config,
        "version": summary.version,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# -- expansion order measurement -------------------------------------------

_EDGE_PROBE_GRID = (np.arange(16) + 0.5) / 16.0


@dataclass(frozen=True)
class ScalingCheck:
    quantity: str
    r_grid: tuple
    errors: tuple
    orders: tuple  # log2 ratios of successive errors; None where errors vanish


def expansion_scaling_check(density, quantity, r_grid):
    """Observed convergence order of |exact - expansion| on a halving grid.

    Quantities: ``edge`` (conditional adjacency probability, worst case over
    a probe grid of anchor positions), ``two_path``, ``triangle``, ``mu_n``.
    For the uniform density the expansions are exact and all errors vanish.
    """
    mom = density_constants(density).moments
    errors = []
    for r in r_grid:
        if quantity == "edge":
            exact = edge_probability_given(density, r, _EDGE_PROBE_GRID)
            approx = edge_probability_expansion(density, r, _EDGE_PROBE_GRID)
            err = float(np.max(np.abs(exact - approx)))
        elif quantity == "two_path":
            err = abs(exact_twopath_probability(density, r)
                      - twopath_probability_expansion(density, r, mom))
        elif quantity == "triangle":
            err = abs(exact_triangle_probability(density, r)
                      - triangle_probability_expansion(density, r, mom))
        elif quantity == "mu_n":
            rc = mu_n(density, r)
            err = abs(rc.mu_n_exact - rc.mu_n_expansion)
        else:
            raise ValueError(f"unknown quantity {quantity!r}")
        errors.append(err)
    orders = []
    for e0, e1 in zip(errors, errors[1:]):
        if e0 <= 1e-15 or e1 <= 1e-16:
            orders.append(None)  # at or below quadrature noise: expansion exact
        else:
            orders.append(math.log2(e0 / e1))
    return ScalingCheck(quantity=quantity, r_grid=tuple(r_grid),
                        errors=tuple(errors), orders=tuple(orders))


# -- reference table of sigma1^2 values ------------------------------------

REFERENCE_SIGMA1_SQ = {0.1: 31.78, 0.5: 1264.83, 1.0: 13924.35,
                       5.0: 13646828.67}
TABLE1_KAPPAS = (0.1, 0.5, 1.0, 5.0)
TABLE1_MUS = (0.1, 0.3, 0.5)


@dataclass(frozen=True)
class Table1Cell:
    kappa: float
    mu: float
    computed: float
    reference: float
    rel_err: float
    passed: bool


def table1_reproduce(rel_tol=0.005):
    """sigma1^2 across the von Mises (kappa, mu) grid against the two-decimal
    reference values; a cell passes when it matches within ``rel_tol``."""
    cells = []
    for kappa in TABLE1_KAPPAS:
        for mu in TABLE1_MUS:
            density = CircularDensity.von_mises(kappa, mu)
            computed = density_constants(density).sigma1_sq
            reference = REFERENCE_SIGMA1_SQ[kappa]
            rel_err = abs(computed - reference) / reference
            cells.append(Table1Cell(kappa=kappa, mu=mu, computed=computed,
                                    reference=reference, rel_err=rel_err,
                                    passed=rel_err <= rel_tol))
    return cells
