"""Replication engine: coverage, size, t-statistic normality, and spatial
density convergence studies over a grid of persistence rules.

Replications are embarrassingly parallel: every rep draws its RNG stream
from (master_seed, cell index, rep index) via numpy's splittable
SeedSequence, and reductions run in rep order, so reports are
bit-identical for any worker count.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dgp import (
    DgpSpec,
    InnovationLaw,
    LinearFilter,
    PersistenceRule,
    RegressionFunction,
    exact_variance,
    simulate,
)
from .errors import BadInput, DegenerateVariance, NoLocalMass
from .estimate import BandwidthRule, point_inference, resolve_bandwidth
from .hypotests import normal_cdf, predictability_test
from .kernels import get_kernel
from .limits import OuPathSpec, gaussian_density, ou_local_time, stationary_density

__all__ = [
    "ExperimentConfig",
    "CellRecord",
    "McReport",
    "run_coverage",
    "run_size",
    "run_tstat_distribution",
    "run_density_convergence",
    "ks_statistic",
    "ks_two_sample",
]

_CHUNK = 64  # reps per task; fixed so chunking never depends on worker count


# --------------------------------------------------------------------------
# Kolmogorov-Smirnov distances
# --------------------------------------------------------------------------


def ks_statistic(sample, cdf) -> float:
    """One-sample KS distance sup_x |F_n(x) - F(x)|."""
    xs = np.sort(np.asarray(sample, dtype=float))
    n = len(xs)
    if n == 0:
        raise BadInput("ks_statistic needs a nonempty sample")
    f = np.asarray(cdf(xs), dtype=float)
    upper = np.arange(1, n + 1) / n - f
    lower = f - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def ks_two_sample(a, b) -> float:
    """Two-sample KS distance between empirical distribution functions."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if len(a) == 0 or len(b) == 0:
        raise BadInput("ks_two_sample needs nonempty samples")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / len(a)
    fb = np.searchsorted(b, grid, side="right") / len(b)
    return float(np.max(np.abs(fa - fb)))


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """Grid definition for one Monte Carlo study."""

    m: RegressionFunction
    rho_grid: tuple
    n_grid: tuple
    reps: int
    alpha: float = 0.05
    kernel: str = "epanechnikov"
    bandwidth: object = field(default_factory=BandwidthRule)
    eps_law: InnovationLaw = InnovationLaw("gaussian")
    u_law: InnovationLaw = InnovationLaw("gaussian")
    filter: LinearFilter = LinearFilter((1.0,))
    sigma_u: float = 1.0
    eval_points: tuple = (0.0,)
    test_points: tuple = (-1.0, 0.0, 1.0)
    density_levels: tuple = (-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0)
    master_seed: int = 0
    workers: int = 1
    selftest: bool = False
    ou_steps: int = 100_000
    ou_paths: int = 2_000
    ou_seed: int = 1
    lt_bandwidth: float = 0.02

    def __post_init__(self):
        if self.reps < 100:
            raise ValueError("reps must be >= 100")
        if not (0.0 <= self.alpha < 1.0):
            raise ValueError("alpha must be in [0, 1)")
        if self.ou_steps < 10_000:
            raise ValueError("ou_steps must be >= 10000: a coarser grid makes the "
                             "local-time oracle less accurate than what it checks")
        object.__setattr__(self, "rho_grid", tuple(self.rho_grid))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "eval_points", tuple(float(x) for x in self.eval_points))
        object.__setattr__(self, "test_points", tuple(float(x) for x in self.test_points))
        object.__setattr__(self, "density_levels", tuple(float(x) for x in self.density_levels))
        # fail fast: every grid cell must produce a valid spec
        for rule in self.rho_grid:
            for n in self.n_grid:
                self.cell_spec(rule, n)

    def cell_spec(self, rule: PersistenceRule, n: int) -> DgpSpec:
        rule.resolve(n)
        return DgpSpec(
            m=self.m, persistence=rule, filter=self.filter,
            eps_law=self.eps_law, u_law=self.u_law,
            sigma_u=self.sigma_u, n=n,
        )

    # -- JSON round-trip ---------------------------------------------------

    def to_dict(self) -> dict:
        def law(v):
            return {"kind": v.kind, **({"df": v.df} if v.df is not None else {})}

        def rule(r):
            d = {"kind": r.kind}
            for key in ("rho", "c", "a"):
                v = getattr(r, key)
                if v is not None:
                    d[key] = v
            return d

        bw = self.bandwidth
        if isinstance(bw, BandwidthRule):
            bw = {"kind": bw.kind, "c_h": bw.c_h, "gamma": bw.gamma}
        return {
            "m": {k: v for k, v in {
                "kind": self.m.kind, "theta": self.m.theta, "slope": self.m.slope,
                "cap": self.m.cap, "scale": self.m.scale, "freq": self.m.freq,
            }.items()},
            "rho_grid": [rule(r) for r in self.rho_grid],
            "n_grid": list(self.n_grid),
            "reps": self.reps,
            "alpha": self.alpha,
            "kernel": self.kernel,
            "bandwidth": bw,
            "eps_law": law(self.eps_law),
            "u_law": law(self.u_law),
            "filter": list(self.filter.coefficients),
            "sigma_u": self.sigma_u,
            "eval_points": list(self.eval_points),
            "test_points": list(self.test_points),
            "density_levels": list(self.density_levels),
            "master_seed": self.master_seed,
            "workers": self.workers,
            "selftest": self.selftest,
            "ou_steps": self.ou_steps,
            "ou_paths": self.ou_paths,
            "ou_seed": self.ou_seed,
            "lt_bandwidth": self.lt_bandwidth,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        def req(key):
            if key not in d:
                raise BadInput(f"config: missing required field '{key}'")
            return d[key]

        def build(path, fn, *args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except (TypeError, ValueError, KeyError) as exc:
                raise BadInput(f"config: {path}: {exc}") from exc

        m = build("m", RegressionFunction, **req("m"))
        rho_raw = req("rho_grid")
        if not isinstance(rho_raw, list) or not rho_raw:
            raise BadInput("config: rho_grid: must be a nonempty list")
        rho_grid = tuple(
            build(f"rho_grid[{i}]", PersistenceRule, **r) for i, r in enumerate(rho_raw)
        )
        bw_raw = d.get("bandwidth", {"kind": "deterministic"})
        if isinstance(bw_raw, (int, float)):
            bandwidth = float(bw_raw)
        else:
            bandwidth = build("bandwidth", BandwidthRule, **bw_raw)
        kwargs = dict(
            m=m,
            rho_grid=rho_grid,
            n_grid=build("n_grid", tuple, req("n_grid")),
            reps=build("reps", int, req("reps")),
            bandwidth=bandwidth,
            eps_law=build("eps_law", InnovationLaw, **d.get("eps_law", {"kind": "gaussian"})),
            u_law=build("u_law", InnovationLaw, **d.get("u_law", {"kind": "gaussian"})),
            filter=build("filter", LinearFilter, tuple(d.get("filter", [1.0]))),
        )
        for key in ("alpha", "kernel", "sigma_u", "eval_points", "test_points",
                    "density_levels", "master_seed", "workers", "selftest",
                    "ou_steps", "ou_paths", "ou_seed", "lt_bandwidth"):
            if key in d:
                kwargs[key] = d[key]
        return build("<root>", cls, **kwargs)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


# --------------------------------------------------------------------------
# reports
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CellRecord:
    rule: str
    n: int
    metric: str
    estimate: float
    mc_se: float
    reps_effective: int
    failures: int
    invalid: bool = False


@dataclass(frozen=True)
class McReport:
    study: str
    records: tuple
    config_digest: str
    wall_time_s: float

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "config_digest": self.config_digest,
            "wall_time_s": self.wall_time_s,
            "records": [vars(r) for r in self.records],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rule", "n", "metric", "estimate", "mc_se",
                        "reps_effective", "failures", "invalid"])
            for r in self.records:
                w.writerow([r.rule, r.n, r.metric, repr(r.estimate), repr(r.mc_se),
                            r.reps_effective, r.failures, int(r.invalid)])

    def find(self, metric: str, rule: Optional[str] = None, n: Optional[int] = None):
        """Convenience lookup used heavily by tests."""
        hits = [r for r in self.records
                if r.metric == metric
                and (rule is None or r.rule == rule)
                and (n is None or r.n == n)]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} records match metric={metric} rule={rule} n={n}")
        return hits[0]


def _binom_se(p: float, n: int) -> float:
    return math.sqrt(p * (1.0 - p) / n) if n > 0 else float("nan")


# --------------------------------------------------------------------------
# per-replication work (module level so worker processes can pickle it)
# --------------------------------------------------------------------------


def _rep_seed(master: int, cell_index: int, rep: int) -> int:
    ss = np.random.SeedSequence([int(master), int(cell_index), int(rep)])
    return int(ss.generate_state(1, np.uint64)[0])


def _rep_row(kind: str, config: ExperimentConfig, rule: PersistenceRule,
             n: int, cell_index: int, rep: int) -> np.ndarray:
    seed = _rep_seed(config.master_seed, cell_index, rep)
    k = get_kernel(config.kernel)

    if kind == "tstat" and config.selftest:
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5E1F]))
        return rng.standard_normal(len(config.eval_points))

    spec = config.cell_spec(rule, n)
    sample = simulate(spec, seed)

    if kind == "coverage":
        row = np.empty(len(config.eval_points))
        for j, x in enumerate(config.eval_points):
            inf = point_inference(sample, k, x, config.bandwidth, alpha=config.alpha)
            mval = float(config.m(x))
            row[j] = 1.0 if inf.ci_lo <= mval <= inf.ci_hi else 0.0
        return row

    if kind == "size":
        res = predictability_test(sample, k, config.test_points,
                                  config.bandwidth, alpha=config.alpha)
        return np.array([float(res.reject_sum), float(res.reject_max)])

    if kind == "tstat":
        row = np.empty(len(config.eval_points))
        for j, x in enumerate(config.eval_points):
            inf = point_inference(sample, k, x, config.bandwidth,
                                  alpha=config.alpha, theta=float(config.m(x)))
            row[j] = inf.t_stat
        return row

    if kind in ("density_grid", "density_origin"):
        rho = rule.resolve(n)
        d_n = math.sqrt(exact_variance(config.filter, rho, n))
        h = resolve_bandwidth(config.bandwidth, n, sample.regressors)
        xs = sample.regressors
        levels = np.asarray(config.density_levels) if kind == "density_grid" else np.zeros(1)
        diffs = xs[None, :] - d_n * levels[:, None]
        vals = d_n / n * np.sum(k.eval_scaled(h, diffs), axis=1)
        return vals

    raise ValueError(f"unknown rep kind {kind!r}")


def _run_chunk(args) -> tuple:
    kind, config, rule, n, cell_index, lo, hi, width = args
    rows = np.full((hi - lo, width), np.nan)
    failed = np.zeros(hi - lo, dtype=bool)
    for i, rep in enumerate(range(lo, hi)):
        try:
            rows[i] = _rep_row(kind, config, rule, n, cell_index, rep)
        except (NoLocalMass, DegenerateVariance):
            failed[i] = True
    return rows, failed


# --------------------------------------------------------------------------
# engine
# --------------------------------------------------------------------------


def _progress(cell_label: str, done: int, total: int, started: float) -> None:
    elapsed = time.monotonic() - started
    eta = elapsed / done * (total - done) if done else float("nan")
    print(f"cell={cell_label} done={done}/{total} eta={eta:.1f}s",
          file=sys.stderr, flush=True)


def _run_cell(kind: str, config: ExperimentConfig, rule: PersistenceRule,
              n: int, cell_index: int, width: int) -> tuple:
    """Run all reps of one cell; returns (rows, failed) in rep order."""
    reps = config.reps
    label = f"{rule.label()},n={n}"
    tasks = [(kind, config, rule, n, cell_index, lo, min(lo + _CHUNK, reps), width)
             for lo in range(0, reps, _CHUNK)]
    started = time.monotonic()
    parts = []
    if config.workers <= 1:
        for t in tasks:
            parts.append(_run_chunk(t))
            _progress(label, min(t[6], reps), reps, started)
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            for t, part in zip(tasks, ex.map(_run_chunk, tasks)):
                parts.append(part)
                _progress(label, min(t[6], reps), reps, started)
    rows = np.concatenate([p[0] for p in parts], axis=0)
    failed = np.concatenate([p[1] for p in parts])
    return rows, failed


def _cell_meta(rows, failed):
    ok = rows[~failed]
    failures = int(failed.sum())
    invalid = failures > 0.01 * len(failed)
    return ok, failures, invalid


# --------------------------------------------------------------------------
# studies
# --------------------------------------------------------------------------


def run_coverage(config: ExperimentConfig) -> McReport:
    """Empirical coverage of the pointwise confidence interval per cell.

    Adds min/max summary rows over the rho grid per (n, point) as
    empirical proxies for the worst-case asymptotic size and coverage.
    """
    t0 = time.monotonic()
    records = []
    per_point = {}
    cell_index = 0
    for n in config.n_grid:
        for rule in config.rho_grid:
            rows, failed = _run_cell("coverage", config, rule, n, cell_index,
                                     len(config.eval_points))
            cell_index += 1
            ok, failures, invalid = _cell_meta(rows, failed)
            for j, x in enumerate(config.eval_points):
                p = float(np.mean(ok[:, j])) if len(ok) else float("nan")
                records.append(CellRecord(
                    rule=rule.label(), n=n, metric=f"coverage@x={x:g}",
                    estimate=p, mc_se=_binom_se(p, len(ok)),
                    reps_effective=len(ok), failures=failures, invalid=invalid,
                ))
                if not invalid:
                    per_point.setdefault((n, x), []).append(p)
    for (n, x), values in per_point.items():
        for name, val in (("min_over_rho", min(values)), ("max_over_rho", max(values))):
            records.append(CellRecord(
                rule=name, n=n, metric=f"coverage@x={x:g}", estimate=val,
                mc_se=float("nan"), reps_effective=config.reps, failures=0,
            ))
    return McReport("coverage", tuple(records), config.digest(),
                    time.monotonic() - t0)


def run_size(config: ExperimentConfig) -> McReport:
    """Rejection frequency of the sum and max non-predictability tests."""
    t0 = time.monotonic()
    records = []
    cell_index = 0
    for n in config.n_grid:
        for rule in config.rho_grid:
            rows, failed = _run_cell("size", config, rule, n, cell_index, 2)
            cell_index += 1
            ok, failures, invalid = _cell_meta(rows, failed)
            for j, name in enumerate(("reject_sum", "reject_max")):
                p = float(np.mean(ok[:, j])) if len(ok) else float("nan")
                records.append(CellRecord(
                    rule=rule.label(), n=n, metric=name, estimate=p,
                    mc_se=_binom_se(p, len(ok)),
                    reps_effective=len(ok), failures=failures, invalid=invalid,
                ))
    return McReport("size", tuple(records), config.digest(), time.monotonic() - t0)


def run_tstat_distribution(config: ExperimentConfig) -> McReport:
    """KS distance of the replicated t-statistics to the standard normal,
    plus cross-point correlations (asymptotically zero)."""
    t0 = time.monotonic()
    records = []
    pts = config.eval_points
    cell_index = 0
    for n in config.n_grid:
        for rule in config.rho_grid:
            rows, failed = _run_cell("tstat", config, rule, n, cell_index, len(pts))
            cell_index += 1
            ok, failures, invalid = _cell_meta(rows, failed)
            for j, x in enumerate(pts):
                ks = ks_statistic(ok[:, j], normal_cdf) if len(ok) else float("nan")
                records.append(CellRecord(
                    rule=rule.label(), n=n, metric=f"ks@x={x:g}", estimate=ks,
                    mc_se=float("nan"), reps_effective=len(ok),
                    failures=failures, invalid=invalid,
                ))
            for j in range(len(pts)):
                for l in range(j + 1, len(pts)):
                    corr = (float(np.corrcoef(ok[:, j], ok[:, l])[0, 1])
                            if len(ok) > 1 else float("nan"))
                    records.append(CellRecord(
                        rule=rule.label(), n=n,
                        metric=f"cross_corr@({pts[j]:g},{pts[l]:g})",
                        estimate=corr, mc_se=float("nan"),
                        reps_effective=len(ok), failures=failures, invalid=invalid,
                    ))
    return McReport("tstat", tuple(records), config.digest(), time.monotonic() - t0)


def _density_limit(config: ExperimentConfig, rule: PersistenceRule, n: int):
    """Limit density over the level grid for stationary / MI cells."""
    levels = np.asarray(config.density_levels)
    if rule.kind == "stationary":
        rho = rule.resolve(n)
        return np.asarray([
            float(stationary_density(config.eps_law, config.filter, rho, a))
            for a in levels
        ])
    return gaussian_density(levels)


def run_density_convergence(config: ExperimentConfig) -> McReport:
    """Spatial-density convergence check per cell.

    Stationary / mildly integrated cells: sup over the level grid of the
    absolute gap between the Monte Carlo mean of the normalized density
    estimate and its limit density. Local-to-unity (and unit root, c = 0)
    cells: two-sample KS between the replicated values at the origin and
    an OU local-time oracle sample.
    """
    t0 = time.monotonic()
    records = []
    cell_index = 0
    for n in config.n_grid:
        for rule in config.rho_grid:
            lur = rule.kind in ("local_to_unity", "unit_root")
            kind = "density_origin" if lur else "density_grid"
            width = 1 if lur else len(config.density_levels)
            rows, failed = _run_cell(kind, config, rule, n, cell_index, width)
            cell_index += 1
            ok, failures, invalid = _cell_meta(rows, failed)
            if lur:
                c = 0.0 if rule.kind == "unit_root" else float(rule.c)
                oracle = ou_local_time(
                    OuPathSpec(c=c, steps=config.ou_steps, paths=config.ou_paths,
                               seed=config.ou_seed),
                    0.0, config.lt_bandwidth)
                est = ks_two_sample(ok[:, 0], oracle) if len(ok) else float("nan")
                metric = "density_ks@a=0"
            else:
                limit = _density_limit(config, rule, n)
                mean = np.mean(ok, axis=0) if len(ok) else np.full(width, np.nan)
                est = float(np.max(np.abs(mean - limit)))
                metric = "density_sup_error"
            records.append(CellRecord(
                rule=rule.label(), n=n, metric=metric, estimate=est,
                mc_se=float("nan"), reps_effective=len(ok),
                failures=failures, invalid=invalid,
            ))
    return McReport("density", tuple(records), config.digest(), time.monotonic() - t0)


STUDIES = {
    "coverage": run_coverage,
    "size": run_size,
    "tstat": run_tstat_distribution,
    "density": run_density_convergence,
}
