"""Non-predictability tests and the distribution functions behind them.

Every Gaussian or chi-square quantile used anywhere in the package comes
from this module, so there is a single source of truth for critical
values.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .dgp import Sample
from .errors import BadDf, BadInput, BadProbability, NoLocalMass
from .kernels import KernelSpec, get_kernel

__all__ = [
    "normal_cdf",
    "normal_quantile",
    "chi2_cdf",
    "chi2_quantile",
    "max_chi2_quantile",
    "theta_hat",
    "PredTestResult",
    "predictability_test",
]


def normal_cdf(x) -> float:
    """Standard normal distribution function."""
    return special.ndtr(x)


def normal_quantile(p: float) -> float:
    """Standard normal quantile z_p."""
    if not (0.0 < p < 1.0):
        raise BadProbability(f"p must be in (0, 1), got {p}")
    return float(special.ndtri(p))


def _check_df(df: int) -> int:
    if int(df) != df or df < 1:
        raise BadDf(f"df must be a positive integer, got {df}")
    return int(df)


def chi2_cdf(df: int, x: float) -> float:
    """Chi-square distribution function (regularized incomplete gamma)."""
    df = _check_df(df)
    if np.any(np.asarray(x) < 0):
        raise BadInput(f"chi2_cdf requires x >= 0, got {x}")
    return special.gammainc(df / 2.0, np.asarray(x, dtype=float) / 2.0)


def chi2_quantile(df: int, p: float) -> float:
    """Chi-square quantile; round-trips with chi2_cdf to <= 1e-8."""
    df = _check_df(df)
    if not (0.0 < p < 1.0):
        raise BadProbability(f"p must be in (0, 1), got {p}")
    return float(special.chdtri(df, 1.0 - p))


def max_chi2_quantile(m: int, p: float) -> float:
    """Quantile of the maximum of m independent chi-square(1) variates."""
    if int(m) != m or m < 1:
        raise BadDf(f"m must be a positive integer, got {m}")
    if not (0.0 < p < 1.0):
        raise BadProbability(f"p must be in (0, 1), got {p}")
    return chi2_quantile(1, p ** (1.0 / m))


def theta_hat(sample: Sample) -> float:
    """Mean of the usable responses; root-n consistent for theta under the
    non-predictability null, uniformly over the persistence range."""
    if len(sample.responses) < 1:
        raise BadInput("sample has no responses")
    return float(np.mean(sample.responses))


@dataclass(frozen=True)
class PredTestResult:
    """Outcome of the sum- and max-type non-predictability tests."""

    points: tuple
    theta_hat: float
    t_by_point: tuple
    f_sum: float
    f_max: float
    crit_sum: float
    crit_max: float
    reject_sum: bool
    reject_max: bool
    alpha: float
    n: int
    h: float

    def to_dict(self) -> dict:
        return {
            "points": list(self.points),
            "theta_hat": self.theta_hat,
            "t": list(self.t_by_point),
            "f_sum": self.f_sum,
            "f_max": self.f_max,
            "crit_sum": self.crit_sum,
            "crit_max": self.crit_max,
            "reject_sum": self.reject_sum,
            "reject_max": self.reject_max,
            "alpha": self.alpha,
            "n": self.n,
            "h": self.h,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def predictability_test(
    sample: Sample,
    k: KernelSpec,
    points: Sequence[float],
    bw,
    alpha: float = 0.05,
    theta: Optional[float] = None,
) -> PredTestResult:
    """Test the non-predictability null m(x) = theta at every spatial point.

    The sum statistic aggregates squared t-statistics over the point set
    and is referred to a chi-square(#points) critical value; the max
    statistic to the maximum of #points independent chi-square(1).

    Points with zero kernel mass raise :class:`NoLocalMass` listing the
    offending points: dropping them silently would change the null
    distribution.
    """
    from .estimate import point_inference, resolve_bandwidth  # local import: cycle

    if not (0.0 < alpha < 1.0):
        raise BadProbability(f"alpha must be in (0, 1), got {alpha}")
    points = [float(x) for x in points]
    if len(points) < 1:
        raise BadInput("need at least one spatial point")
    k = get_kernel(k)
    h = resolve_bandwidth(bw, sample.n, sample.regressors)
    th = theta_hat(sample) if theta is None else float(theta)

    dead = [x for x in points
            if float(np.sum(k.eval_scaled(h, sample.regressors - x))) <= 0.0]
    if dead:
        raise NoLocalMass(f"no kernel mass at points {dead} with h={h}", points=dead)

    t = [point_inference(sample, k, x, h, alpha=alpha, theta=th).t_stat for x in points]
    tsq = np.square(t)
    f_sum = float(np.sum(tsq))
    f_max = float(np.max(tsq))
    crit_sum = chi2_quantile(len(points), 1.0 - alpha)
    crit_max = max_chi2_quantile(len(points), 1.0 - alpha)
    return PredTestResult(
        points=tuple(points),
        theta_hat=th,
        t_by_point=tuple(float(v) for v in t),
        f_sum=f_sum,
        f_max=f_max,
        crit_sum=crit_sum,
        crit_max=crit_max,
        reject_sum=f_sum >= crit_sum,
        reject_max=f_max >= crit_max,
        alpha=alpha,
        n=sample.n,
        h=h,
    )


def empirical_quantile_points(sample: Sample, probs: Sequence[float]) -> list:
    """Convenience: spatial points at empirical quantiles of the regressor.

    Data-dependent point sets fall outside the supported theory; use for
    exploration only.
    """
    return [float(q) for q in np.quantile(sample.regressors, list(probs))]
