import math

import numpy as np
import pytest

from predreg.dgp import InnovationLaw, LinearFilter, stationary_variance
from predreg.errors import NotStationary
from predreg.kernels import get_kernel
from predreg.limits import (
    EtaSampler,
    OuPathSpec,
    eta_sampler,
    gaussian_density,
    laplace_density,
    ou_covariance,
    ou_local_time,
    ou_local_time_profile,
    simulate_ou,
    stationary_density,
)

GAUSS = InnovationLaw("gaussian")
LAPLACE = InnovationLaw("laplace")
IDENT = LinearFilter((1.0,))

# small but honest OU spec for unit tests; acceptance uses the full default
SMALL_OU = OuPathSpec(c=0.0, steps=20_000, paths=400, seed=3)


# --------------------------------------------------------------------------
# closed-form densities
# --------------------------------------------------------------------------


def test_gaussian_density_values():
    assert gaussian_density(0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=1e-15)
    assert gaussian_density(1.0) == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi),
                                                  abs=1e-15)
    arr = gaussian_density(np.array([-1.0, 1.0]))
    assert arr[0] == arr[1]


def test_laplace_density_unit_variance():
    grid = np.linspace(-30, 30, 200_001)
    vals = laplace_density(grid)
    assert np.trapezoid(vals, grid) == pytest.approx(1.0, abs=1e-7)
    assert np.trapezoid(vals * grid**2, grid) == pytest.approx(1.0, abs=1e-6)
    assert laplace_density(0.0) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)


def test_stationary_density_gaussian_exact():
    grid = np.array([-2.0, -0.5, 0.0, 1.3])
    for rho in (0.0, 0.5, 0.95):
        got = stationary_density(GAUSS, IDENT, rho, grid)
        np.testing.assert_allclose(got, gaussian_density(grid), atol=1e-15)
    # filters don't matter either: the normalization removes the scale
    got = stationary_density(GAUSS, LinearFilter((1.0, 0.7)), 0.3, 0.5)
    assert got == pytest.approx(gaussian_density(0.5), abs=1e-15)


def test_stationary_density_requires_stationarity():
    with pytest.raises(NotStationary):
        stationary_density(GAUSS, IDENT, 1.0, 0.0)
    with pytest.raises(NotStationary):
        stationary_density(LAPLACE, IDENT, -1.0, 0.0)


def test_stationary_density_laplace_oracle():
    # at rho=0 with the identity filter the stationary law is the (unit
    # variance) Laplace itself, so the KDE oracle must match the closed form
    grid = np.linspace(-2.0, 2.0, 9)
    got = stationary_density(LAPLACE, IDENT, 0.0, grid)
    off_peak = grid != 0.0
    np.testing.assert_allclose(got[off_peak], laplace_density(grid[off_peak]), atol=0.012)
    # the KDE smooths over the kink at 0, so the peak carries extra bias
    assert got[~off_peak][0] == pytest.approx(laplace_density(0.0), abs=0.08)


# --------------------------------------------------------------------------
# OU process
# --------------------------------------------------------------------------


def test_simulate_ou_shape_and_normalization():
    spec = OuPathSpec(c=-3.0, steps=500, paths=4_000, seed=1)
    paths = simulate_ou(spec)
    assert paths.shape == (4_000, 501)
    np.testing.assert_array_equal(paths[:, 0], 0.0)
    # var(J_c(1)) = 1 by construction
    v = paths[:, -1].var()
    assert abs(v - 1.0) < 4.0 * math.sqrt(2.0 / 4_000)


def test_ou_covariance_closed_forms():
    # c = 0: Brownian motion scaled to unit variance at 1 -> cov = min(r1, r2)
    assert ou_covariance(0.0, 0.3, 0.8) == pytest.approx(0.3, abs=1e-15)
    assert ou_covariance(0.0, 1.0, 1.0) == 1.0
    # symmetry and unit variance at r = 1 for any c
    for c in (-5.0, -1.0, 2.0):
        assert ou_covariance(c, 0.2, 0.7) == pytest.approx(ou_covariance(c, 0.7, 0.2),
                                                           abs=1e-15)
        assert ou_covariance(c, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("c", [0.0, -5.0])
def test_ou_paths_match_exact_covariance(c):
    spec = OuPathSpec(c=c, steps=200, paths=20_000, seed=2)
    paths = simulate_ou(spec)
    for r1, r2 in ((0.25, 0.25), (0.25, 1.0), (0.5, 0.75)):
        i1, i2 = int(r1 * spec.steps), int(r2 * spec.steps)
        emp = float(np.mean(paths[:, i1] * paths[:, i2]))
        exact = ou_covariance(c, r1, r2)
        # var of the product of two normals is bounded by ~2; 4 sigma band
        assert abs(emp - exact) < 4.0 * 2.0 / math.sqrt(spec.paths)


# --------------------------------------------------------------------------
# local time
# --------------------------------------------------------------------------


def test_ou_local_time_mean_at_origin():
    # E L_0(1, 0) = sqrt(2 / pi) for standard Brownian motion
    draws = ou_local_time(SMALL_OU, 0.0, 0.02)
    target = math.sqrt(2.0 / math.pi)
    se = draws.std(ddof=1) / math.sqrt(len(draws))
    assert abs(draws.mean() - target) < 4.0 * se + 0.02  # small kernel bias


def test_ou_local_time_properties():
    draws = ou_local_time(SMALL_OU, 0.0, 0.02)
    assert len(draws) == SMALL_OU.paths
    assert np.all(draws >= 0.0)
    assert not draws.flags.writeable
    # cache: identical arguments give the identical array object
    assert ou_local_time(SMALL_OU, 0.0, 0.02) is draws
    # far away levels are never visited
    far = ou_local_time(SMALL_OU, 7.5, 0.02)
    assert far.max() == 0.0


def test_ou_local_time_bandwidth_guard():
    with pytest.raises(ValueError):
        ou_local_time(SMALL_OU, 0.0, 0.5)
    with pytest.raises(ValueError):
        ou_local_time(SMALL_OU, 0.0, 1e-6)
    with pytest.raises(ValueError):
        ou_local_time_profile(SMALL_OU, [0.0], 0.5)


def test_ou_local_time_profile():
    levels = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    prof = ou_local_time_profile(SMALL_OU, levels, 0.02)
    # pooled histogram equals the mean of the per-path estimates up to the
    # histogram bin width
    for lvl, p in zip(levels, prof):
        direct = ou_local_time(SMALL_OU, float(lvl), 0.02).mean()
        assert abs(p - direct) < 0.01
    # occupation integrates to total time 1
    grid = np.arange(-4.0, 4.0, 0.05)
    integral = np.trapezoid(ou_local_time_profile(SMALL_OU, grid, 0.02), grid)
    assert integral == pytest.approx(1.0, abs=0.02)


def test_ou_spec_validation():
    with pytest.raises(ValueError):
        OuPathSpec(steps=1)
    with pytest.raises(ValueError):
        OuPathSpec(paths=0)


# --------------------------------------------------------------------------
# eta sampler
# --------------------------------------------------------------------------


def test_eta_sampler_stationary_constant():
    k = get_kernel("epanechnikov")
    sampler = eta_sampler("stationary", x=0.5, sigma_u=2.0, k=k,
                          law=GAUSS, filt=IDENT, rho=0.5)
    sd = math.sqrt(stationary_variance(IDENT, 0.5))
    expected = 2.0 * math.sqrt(0.6) * gaussian_density(0.5 / sd)
    draws = sampler.draw(5)
    np.testing.assert_allclose(draws, expected, atol=1e-12)


def test_eta_sampler_mi_constant():
    sampler = eta_sampler("mi", x=0.0, sigma_u=1.5, k="quartic")
    expected = 1.5 * math.sqrt(5.0 / 7.0) * gaussian_density(0.0)
    assert sampler.draw(3)[0] == pytest.approx(expected, abs=1e-12)


def test_eta_sampler_lur_draws():
    sampler = eta_sampler("lur", x=0.0, sigma_u=1.0, k="epanechnikov",
                          ou_spec=SMALL_OU, bandwidth=0.02)
    draws = sampler.draw(100)
    expected = math.sqrt(0.6) * ou_local_time(SMALL_OU, 0.0, 0.02)[:100]
    np.testing.assert_allclose(draws, expected, atol=1e-12)
    with pytest.raises(ValueError):
        sampler.draw(SMALL_OU.paths + 1)


def test_eta_sampler_validation():
    with pytest.raises(ValueError):
        eta_sampler("stationary", x=0.0, sigma_u=1.0, k="epanechnikov")
    with pytest.raises(NotStationary):
        eta_sampler("stationary", x=0.0, sigma_u=1.0, k="epanechnikov",
                    law=GAUSS, filt=IDENT, rho=1.0)
    with pytest.raises(ValueError):
        eta_sampler("explosive", x=0.0, sigma_u=1.0, k="epanechnikov")


def test_eta_sampler_dataclass():
    s = EtaSampler(regime="mi", value=0.25)
    np.testing.assert_array_equal(s.draw(4), np.full(4, 0.25))
