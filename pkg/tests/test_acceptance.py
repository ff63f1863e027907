"""Acceptance gate: desk-scale checks of the package's statistical claims.

Each test prints one PASS/FAIL line with the measured numbers before
asserting, so the verdict and the evidence survive in the captured output
either way. The Monte Carlo studies behind the first three tests share
one persistence grid spanning stationary, mildly integrated,
local-to-unity and unit-root regressors.
"""
import math

import numpy as np
import pytest

from predreg.dgp import (
    DgpSpec,
    LinearFilter,
    PersistenceRule,
    RegressionFunction,
    Sample,
    exact_variance,
    omega_sq,
    simulate,
)
from predreg.estimate import BandwidthRule, conf_interval, t_stat
from predreg.hypotests import (
    chi2_cdf,
    chi2_quantile,
    normal_cdf,
    normal_quantile,
    predictability_test,
)
from predreg.kernels import get_kernel
from predreg.limits import OuPathSpec, ou_local_time, ou_local_time_profile
from predreg.montecarlo import (
    ExperimentConfig,
    ks_two_sample,
    run_coverage,
    run_density_convergence,
    run_size,
    run_tstat_distribution,
)

MASTER_SEED = 20260823
WORKERS = 4
N = 2000
REPS = 2000

RHO_GRID = (
    PersistenceRule("stationary", rho=0.0),
    PersistenceRule("stationary", rho=0.5),
    PersistenceRule("stationary", rho=0.9),
    PersistenceRule("mildly_integrated", c=-1.0, a=0.5),  # rho_n = 1 - n**-1/2
    PersistenceRule("local_to_unity", c=-5.0),            # rho_n = 1 - 5/n
    PersistenceRule("unit_root"),
)


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, f"{name}: {detail}"


def _grid_config(**kw):
    defaults = dict(
        m=RegressionFunction("zero"),
        rho_grid=RHO_GRID,
        n_grid=(N,),
        reps=REPS,
        alpha=0.05,
        bandwidth=BandwidthRule(),  # h = n**-0.4
        sigma_u=1.0,
        eval_points=(0.0,),
        master_seed=MASTER_SEED,
        workers=WORKERS,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


# --------------------------------------------------------------------------
# 1. pointwise CI coverage, uniformly over the persistence grid
# --------------------------------------------------------------------------


def test_criterion_1_ci_coverage_across_persistence_grid():
    report = run_coverage(_grid_config())
    cells = [(r.label(), report.find("coverage@x=0", rule=r.label(), n=N))
             for r in RHO_GRID]
    detail = ", ".join(f"{lab}={rec.estimate:.3f}" for lab, rec in cells)
    ok = all(0.92 <= rec.estimate <= 0.98 for _, rec in cells)
    _verdict("1 coverage in [0.92, 0.98] per rho cell", ok, detail)


# --------------------------------------------------------------------------
# 2. size of the sum- and max-type non-predictability tests
# --------------------------------------------------------------------------


def test_criterion_2_test_size_across_persistence_grid():
    report = run_size(_grid_config(test_points=(-1.0, 0.0, 1.0)))
    parts, ok = [], True
    for r in RHO_GRID:
        for metric in ("reject_sum", "reject_max"):
            est = report.find(metric, rule=r.label(), n=N).estimate
            parts.append(f"{r.label()}/{metric[7:]}={est:.3f}")
            ok &= 0.03 <= est <= 0.07
    _verdict("2 rejection rate in [0.03, 0.07] per cell and statistic",
             ok, ", ".join(parts))


# --------------------------------------------------------------------------
# 3. t-statistic normality and cross-point independence
# --------------------------------------------------------------------------


def test_criterion_3_t_statistic_normality_and_independence():
    report = run_tstat_distribution(_grid_config(eval_points=(-1.0, 0.0, 1.0)))
    parts, ok = [], True
    for r in RHO_GRID:
        ks = report.find("ks@x=0", rule=r.label(), n=N).estimate
        corr = report.find("cross_corr@(-1,1)", rule=r.label(), n=N).estimate
        parts.append(f"{r.label()}: ks={ks:.3f} corr={corr:.3f}")
        ok &= ks <= 0.05 and abs(corr) <= 0.1
    _verdict("3 KS(t, Phi) <= 0.05 and |corr(-1,1)| <= 0.1 per cell",
             ok, "; ".join(parts))


# --------------------------------------------------------------------------
# 4. spatial density trichotomy
# --------------------------------------------------------------------------


def test_criterion_4_spatial_density_trichotomy():
    config = _grid_config(
        rho_grid=(
            PersistenceRule("stationary", rho=0.5),
            PersistenceRule("mildly_integrated", c=-1.0, a=0.5),
            PersistenceRule("unit_root"),               # c = 0
            PersistenceRule("local_to_unity", c=-5.0),
        ),
        n_grid=(5000,),
        reps=1000,
        bandwidth=BandwidthRule(gamma=0.25),
        ou_seed=7,
    )
    report = run_density_convergence(config)
    sup_stat = report.find("density_sup_error", rule="stat(rho=0.5)", n=5000).estimate
    sup_mi = report.find("density_sup_error", rule="mi(c=-1,a=0.5)", n=5000).estimate
    ks_c0 = report.find("density_ks@a=0", rule="unit", n=5000).estimate
    ks_c5 = report.find("density_ks@a=0", rule="lur(c=-5)", n=5000).estimate
    ok = sup_stat <= 0.05 and sup_mi <= 0.05 and ks_c0 <= 0.1 and ks_c5 <= 0.1
    _verdict(
        "4 density trichotomy: sup errors <= 0.05, local-time KS <= 0.1", ok,
        f"stat sup={sup_stat:.4f}, mi sup={sup_mi:.4f}, "
        f"ks(c=0)={ks_c0:.3f}, ks(c=-5)={ks_c5:.3f}",
    )


# --------------------------------------------------------------------------
# 5. exact norming constants
# --------------------------------------------------------------------------


def test_criterion_5_exact_norming():
    ident = LinearFilter((1.0,))
    worst = 0.0
    for rule in RHO_GRID:
        rho = rule.resolve(N)
        got = exact_variance(ident, rho, N)
        if rho == 1.0:
            expected = float(N)
        else:
            expected = (1.0 - rho ** (2 * N)) / (1.0 - rho * rho)
        worst = max(worst, abs(got - expected) / max(1.0, abs(expected)))
    closed_ok = worst <= 1e-10

    # Monte Carlo check of var(x_n), including an MA(2) filter cell
    mc_parts, mc_ok = [], True
    n_mc, reps = 200, 6000
    for filt, rule in (
        (ident, PersistenceRule("stationary", rho=0.9)),
        (ident, PersistenceRule("unit_root")),
        (LinearFilter((1.0, 0.5, -0.3)), PersistenceRule("local_to_unity", c=-5.0)),
    ):
        spec = DgpSpec(m=RegressionFunction("zero"), persistence=rule,
                       filter=filt, sigma_u=0.0, n=n_mc)
        xn = np.array([simulate(spec, MASTER_SEED + s).x[-1] for s in range(reps)])
        target = exact_variance(filt, rule.resolve(n_mc), n_mc)
        se = target * math.sqrt(2.0 / reps)
        dev = abs(xn.var() - target) / se
        mc_parts.append(f"{rule.label()}[{len(filt.coefficients)-1}]: {dev:.2f}se")
        mc_ok &= dev < 4.0
    _verdict(
        "5 exact norming: closed form to 1e-10, MC variance within 4 s.e.",
        closed_ok and mc_ok,
        f"max closed-form rel err={worst:.2e}; {', '.join(mc_parts)}",
    )


# --------------------------------------------------------------------------
# 6. Ornstein-Uhlenbeck local-time oracle identities
# --------------------------------------------------------------------------


def test_criterion_6_local_time_oracle_identities():
    spec = OuPathSpec(c=0.0)  # full defaults: 1e5 steps, 2000 paths
    bw = 0.02
    mean0 = float(ou_local_time(spec, 0.0, bw).mean())
    target = math.sqrt(2.0 / math.pi)

    grid = np.arange(-4.0, 4.0 + 1e-9, 0.04)
    integral = float(np.trapezoid(ou_local_time_profile(spec, grid, bw), grid))

    omega_ok = omega_sq(1.0, 2000) == 1.0
    ok = abs(mean0 - target) <= 0.03 and abs(integral - 1.0) <= 0.02 and omega_ok
    _verdict(
        "6 local-time oracle: mean at 0, unit occupation mass, omega^2(1)=1", ok,
        f"mean={mean0:.4f} (target {target:.4f}), integral={integral:.4f}, "
        f"omega^2(1)={omega_sq(1.0, 2000)}",
    )


# --------------------------------------------------------------------------
# 7. distribution-function numerics
# --------------------------------------------------------------------------


def test_criterion_7_quantile_roundtrips():
    worst = 0.0
    for p in (1e-6, 0.001, 0.025, 0.5, 0.95, 0.999, 1 - 1e-6):
        worst = max(worst, abs(normal_cdf(normal_quantile(p)) - p))
    for df in (1, 2, 5, 20, 100):
        for p in (0.001, 0.05, 0.5, 0.95, 0.999):
            worst = max(worst, abs(float(chi2_cdf(df, chi2_quantile(df, p))) - p))
    link = abs(chi2_quantile(1, 0.95) - normal_quantile(0.975) ** 2)
    ok = worst <= 1e-8 and link <= 1e-9
    _verdict(
        "7 quantile/CDF round-trips <= 1e-8; chi2(1,.95) = z(.975)^2 to 1e-9",
        ok, f"worst roundtrip={worst:.2e}, link gap={link:.2e}",
    )


# --------------------------------------------------------------------------
# 8. exact invariants
# --------------------------------------------------------------------------


def test_criterion_8_exact_invariants():
    k = get_kernel("epanechnikov")
    spec = DgpSpec(m=RegressionFunction("zero"),
                   persistence=PersistenceRule("stationary", rho=0.5), n=1000)
    s = simulate(spec, MASTER_SEED)
    h = 1000.0 ** -0.4 * 8  # wide enough for mass at every test point
    pts = [-1.0, 0.0, 1.0]

    # affine invariance: y -> a y + b leaves both F statistics unchanged
    a, b = -3.0, 2.5
    s2 = Sample(x=s.x.copy(), y=a * s.y + b, seed=s.seed, spec_digest=s.spec_digest)
    r1 = predictability_test(s, k, pts, h)
    r2 = predictability_test(s2, k, pts, h)
    affine_gap = max(abs(r1.f_sum - r2.f_sum), abs(r1.f_max - r2.f_max))

    # CI/t duality: theta nudged across the interval endpoint flips the
    # comparison with the normal critical value
    alpha = 0.05
    lo, hi = conf_interval(s, k, 0.0, h, alpha)
    z = normal_quantile(1.0 - alpha / 2.0)
    eps = 1e-9
    duality_ok = (
        abs(t_stat(s, k, 0.0, h, theta=lo)) <= z + 1e-12
        and abs(t_stat(s, k, 0.0, h, theta=lo - eps)) > z
        and abs(t_stat(s, k, 0.0, h, theta=hi + eps)) > z
    )

    # bit-identical reports across worker counts
    cfg = dict(
        m=RegressionFunction("zero"),
        rho_grid=(PersistenceRule("stationary", rho=0.5),
                  PersistenceRule("unit_root")),
        n_grid=(300,), reps=200, master_seed=MASTER_SEED,
    )
    c1 = run_size(ExperimentConfig(workers=1, **cfg))
    c4 = run_size(ExperimentConfig(workers=4, **cfg))
    workers_ok = [vars(r) for r in c1.records] == [vars(r) for r in c4.records]

    ok = affine_gap <= 1e-9 and duality_ok and workers_ok
    _verdict(
        "8 exact invariants: affine F invariance, CI/t duality, worker determinism",
        ok,
        f"affine gap={affine_gap:.2e}, duality={'ok' if duality_ok else 'BAD'}, "
        f"workers={'identical' if workers_ok else 'DIFFER'}",
    )
