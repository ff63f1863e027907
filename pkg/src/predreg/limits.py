"""Theoretical limit objects used as oracles for the convergence studies.

Depending on how the autoregressive root approaches unity, the spatial
density of the normalized regressor converges to the standard Gaussian
density, a (unit-variance) stationary density, or the random local-time
density of a normalized Ornstein-Uhlenbeck process. This module provides
each limit: closed forms where available, simulation oracles otherwise.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.stats import gaussian_kde

from .dgp import DgpSpec, InnovationLaw, LinearFilter, PersistenceRule, RegressionFunction
from .dgp import simulate as _simulate_dgp
from .dgp import stationary_variance
from .errors import NotStationary
from .kernels import KernelSpec, get_kernel

__all__ = [
    "OuPathSpec",
    "gaussian_density",
    "laplace_density",
    "stationary_density",
    "simulate_ou",
    "ou_local_time",
    "ou_local_time_profile",
    "ou_covariance",
    "EtaSampler",
    "eta_sampler",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)


def gaussian_density(a) -> float:
    """Standard Gaussian density."""
    a = np.asarray(a, dtype=float)
    out = np.exp(-0.5 * np.square(a)) / SQRT_2PI
    return float(out) if out.ndim == 0 else out


def laplace_density(a) -> float:
    """Unit-variance Laplace density (cross-check for the rho=0 case)."""
    a = np.asarray(a, dtype=float)
    out = np.exp(-math.sqrt(2.0) * np.abs(a)) / math.sqrt(2.0)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# stationary density
# --------------------------------------------------------------------------


@functools.lru_cache(maxsize=32)
def _stationary_kde(law: InnovationLaw, filt: LinearFilter, rho: float, seed: int):
    """Simulation oracle for the unit-variance stationary density.

    One long stationary stretch (after burn-in), rescaled by the exact
    stationary standard deviation, smoothed with a Silverman-bandwidth
    Gaussian KDE. Accuracy demands are modest (diagnostics only).
    """
    n = 200_000
    burn = 2_000
    spec = DgpSpec(
        m=RegressionFunction("zero"),
        persistence=PersistenceRule("stationary", rho=rho, delta=1e-6),
        filter=filt,
        eps_law=law,
        sigma_u=0.0,
        n=n + burn,
    )
    path = _simulate_dgp(spec, seed).x[burn + 1:]
    sd = math.sqrt(stationary_variance(filt, rho))
    return gaussian_kde(path / sd, bw_method="silverman")


def stationary_density(
    law: InnovationLaw, filt: LinearFilter, rho: float, a, *, seed: int = 0
):
    """Unit-variance-normalized stationary density of the regressor.

    Gaussian innovations give exactly the standard Gaussian density for
    any filter and |rho| < 1 (the normalization removes every scale). Other
    laws fall back to a simulation oracle and are approximate.
    """
    if abs(rho) >= 1.0:
        raise NotStationary(f"stationary density requires |rho| < 1, got rho={rho}")
    if law.kind == "gaussian":
        return gaussian_density(a)
    kde = _stationary_kde(law, filt, float(rho), seed)
    out = kde(np.atleast_1d(np.asarray(a, dtype=float)))
    return float(out[0]) if np.isscalar(a) or np.asarray(a).ndim == 0 else out


# --------------------------------------------------------------------------
# Ornstein-Uhlenbeck oracle
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OuPathSpec:
    """Grid simulation of the normalized OU process on [0, 1].

    The defaults (1e5 steps, 2000 paths) keep the oracle's own Monte Carlo
    error below the tolerances it is used to check.
    """

    c: float = 0.0
    steps: int = 100_000
    paths: int = 2_000
    seed: int = 0

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        if self.paths < 1:
            raise ValueError("paths must be >= 1")


def _ou_normalization(c: float) -> float:
    """int_0^1 exp(2(1-s)c) ds; variance of the unnormalized process at r=1."""
    if c == 0.0:
        return 1.0
    return math.expm1(2.0 * c) / (2.0 * c)


def _ou_step_params(c: float, dt: float):
    """Exact one-step AR coefficient and innovation s.d. over a grid step."""
    phi = math.exp(c * dt)
    var = dt if c == 0.0 else math.expm1(2.0 * c * dt) / (2.0 * c)
    return phi, math.sqrt(var)


def _ou_stream(spec: OuPathSpec):
    """Yield successive cross-sections J(i/N) (i = 1..N) across all paths.

    Exact discretization: no step-size bias in the oracle. Streaming keeps
    memory flat at one cross-section regardless of the step count.
    """
    dt = 1.0 / spec.steps
    phi, sd = _ou_step_params(spec.c, dt)
    scale = 1.0 / math.sqrt(_ou_normalization(spec.c))
    rng = np.random.default_rng(np.random.SeedSequence([int(spec.seed), 0x0E]))
    x = np.zeros(spec.paths)
    for _ in range(spec.steps):
        x = phi * x + sd * rng.standard_normal(spec.paths)
        yield scale * x


def simulate_ou(spec: OuPathSpec) -> np.ndarray:
    """Full paths of the normalized OU process J_c on the grid {i/N}.

    Returns an array of shape (paths, steps + 1) including J(0) = 0;
    var(J_c(1)) = 1 by construction. Materializes everything: use modest
    step counts, or the streaming consumers below, for oracle-sized runs.
    """
    out = np.empty((spec.paths, spec.steps + 1))
    out[:, 0] = 0.0
    for i, cross in enumerate(_ou_stream(spec), start=1):
        out[:, i] = cross
    return out


def ou_covariance(c: float, r1: float, r2: float) -> float:
    """Exact cov(J_c(r1), J_c(r2)) of the normalized OU process."""
    lo, hi = (r1, r2) if r1 <= r2 else (r2, r1)
    if c == 0.0:
        raw = lo
    else:
        raw = math.exp(c * (hi - lo)) * math.expm1(2.0 * c * lo) / (2.0 * c)
    return raw / _ou_normalization(c)


@functools.lru_cache(maxsize=16)
def _ou_local_time_cached(spec: OuPathSpec, a: float, bandwidth: float) -> np.ndarray:
    k = get_kernel("epanechnikov")
    acc = np.zeros(spec.paths)
    for cross in _ou_stream(spec):
        acc += k.eval((cross - a) / bandwidth)
    acc /= spec.steps * bandwidth
    acc.setflags(write=False)
    return acc


def ou_local_time(spec: OuPathSpec, a: float, bandwidth: float) -> np.ndarray:
    """Per-path occupation-density estimates L_hat_c(1, a).

    Each path contributes (1/N) sum_i K_bw(J(i/N) - a) with the
    Epanechnikov kernel. Results are cached per (spec, a, bandwidth) since
    oracle runs are expensive and reused across checks.
    """
    _check_lt_bandwidth(spec, bandwidth)
    return _ou_local_time_cached(spec, float(a), float(bandwidth))


def _check_lt_bandwidth(spec: OuPathSpec, bandwidth: float):
    lo = spec.steps ** -0.5 / 10.0
    if not (lo <= bandwidth <= 0.1):
        raise ValueError(
            f"local-time bandwidth must be in [{lo:.3g}, 0.1], got {bandwidth}"
        )


@functools.lru_cache(maxsize=16)
def _ou_histogram(spec: OuPathSpec, lo: float, hi: float, bins: int):
    edges = np.linspace(lo, hi, bins + 1)
    counts = np.zeros(bins)
    clipped = 0
    for cross in _ou_stream(spec):
        h, _ = np.histogram(cross, bins=edges)
        counts += h
        clipped += spec.paths - int(h.sum())
    return edges, counts, clipped


def ou_local_time_profile(spec: OuPathSpec, a_grid, bandwidth: float) -> np.ndarray:
    """Mean (over paths) of L_hat_c(1, a) on a grid of levels.

    Uses a pooled fine histogram of the path values and smooths it with
    the kernel, which is orders of magnitude cheaper than accumulating
    every (step, level) pair and accurate to the bin width (0.005).
    """
    _check_lt_bandwidth(spec, bandwidth)
    a_grid = np.asarray(a_grid, dtype=float)
    lo, hi = -8.0, 8.0
    bins = int((hi - lo) / 0.005)
    edges, counts, _ = _ou_histogram(spec, lo, hi, bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    k = get_kernel("epanechnikov")
    total = spec.steps * spec.paths
    out = np.empty(len(a_grid))
    for i, a in enumerate(a_grid):
        w = k.eval((centers - a) / bandwidth) / bandwidth
        out[i] = float(np.dot(w, counts)) / total
    return out


# --------------------------------------------------------------------------
# the mixing variate eta(x)
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EtaSampler:
    """Sampler for the limit variate scaling the t-statistic denominator.

    Degenerate (constant) in the stationary and mildly integrated regimes;
    random, driven by the OU local time at the origin, under local-to-unity.
    """

    regime: str
    value: Optional[float] = None
    _draw: Optional[Callable] = None

    def draw(self, size: int) -> np.ndarray:
        if self.value is not None:
            return np.full(size, self.value)
        return self._draw(size)


def eta_sampler(
    regime: str,
    x: float,
    sigma_u: float,
    k: KernelSpec,
    *,
    law: Optional[InnovationLaw] = None,
    filt: Optional[LinearFilter] = None,
    rho: Optional[float] = None,
    ou_spec: Optional[OuPathSpec] = None,
    bandwidth: float = 0.02,
) -> EtaSampler:
    """Build the eta(x) sampler for a limit regime.

    * stationary: constant sigma_u sqrt(int K^2) nu_rho(x / sd) where sd is
      the stationary standard deviation of the regressor
    * mi: constant sigma_u sqrt(int K^2) phi(0)
    * lur: sigma_u sqrt(int K^2) times draws of the OU local time at 0
    """
    k = get_kernel(k)
    factor = sigma_u * math.sqrt(k.l2)
    if regime == "stationary":
        if rho is None or law is None or filt is None:
            raise ValueError("stationary regime needs law, filt and rho")
        if abs(rho) >= 1.0:
            raise NotStationary(f"eta sampler stationary branch requires |rho| < 1, got {rho}")
        sd = math.sqrt(stationary_variance(filt, rho))
        val = factor * float(stationary_density(law, filt, rho, x / sd))
        return EtaSampler(regime=regime, value=val)
    if regime == "mi":
        return EtaSampler(regime=regime, value=factor * gaussian_density(0.0))
    if regime == "lur":
        spec = ou_spec if ou_spec is not None else OuPathSpec()

        def _draw(size: int) -> np.ndarray:
            draws = ou_local_time(spec, 0.0, bandwidth)
            if size > len(draws):
                raise ValueError(
                    f"requested {size} draws but the OU spec provides {len(draws)} paths"
                )
            return factor * draws[:size]

        return EtaSampler(regime=regime, _draw=_draw)
    raise ValueError(f"unknown regime {regime!r}; choose stationary, mi or lur")
