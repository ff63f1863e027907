"""Data generating process for the predictive regression y_{t+1} = m(x_t) + u.

The regressor is a (possibly near-unit-root) AR(1) driven by a finite
moving average of standardized i.i.d. innovations:

    x_t = rho * x_{t-1} + v_t,   v_t = sum_k phi_k eps_{t-k},   x_0 = 0.

Persistence regimes (stationary, mildly integrated, local-to-unity, unit
root) are expressed as rules mapping the sample size n to rho. Exact
norming constants (var(x_t), d_n, e_n) are computed from the moving-average
coefficients of x_t, so simulation and theory share one source of truth.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .errors import BadInput, RhoOutOfRange

__all__ = [
    "InnovationLaw",
    "LinearFilter",
    "PersistenceRule",
    "RegressionFunction",
    "DgpSpec",
    "Sample",
    "resolve_rho",
    "simulate",
    "exact_variance",
    "stationary_variance",
    "omega_sq",
    "norming",
    "write_sample_csv",
    "read_sample_csv",
]


# --------------------------------------------------------------------------
# innovation laws
# --------------------------------------------------------------------------

_LAW_KINDS = ("gaussian", "laplace", "student_t")


@dataclass(frozen=True)
class InnovationLaw:
    """Standardized i.i.d. innovation law (mean 0, variance 1).

    Only laws with an everywhere-positive Lipschitz density and integrable
    characteristic function are offered: Gaussian, Laplace, and Student-t
    with at least 5 degrees of freedom (rescaled to unit variance).
    """

    kind: str = "gaussian"
    df: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _LAW_KINDS:
            raise ValueError(f"unknown innovation law {self.kind!r}; choose from {_LAW_KINDS}")
        if self.kind == "student_t":
            if self.df is None or int(self.df) < 5:
                raise ValueError("student_t requires integer df >= 5")
            object.__setattr__(self, "df", int(self.df))
        elif self.df is not None:
            raise ValueError(f"df is only meaningful for student_t, not {self.kind}")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "gaussian":
            return rng.standard_normal(size)
        if self.kind == "laplace":
            # scale 1/sqrt(2) gives unit variance
            return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size)
        # student_t, rescaled to unit variance
        return rng.standard_t(self.df, size) * math.sqrt((self.df - 2) / self.df)


# --------------------------------------------------------------------------
# MA filter
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearFilter:
    """Finite moving-average filter (phi_0, ..., phi_K) applied to the innovations.

    phi_0 != 0 and sum(phi) != 0 are required; a finite list makes the
    absolute-summability condition trivial and keeps exact variance
    computations closed-form. Users approximating an infinite filter are
    responsible for truncating it themselves.
    """

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) == 0:
            raise ValueError("filter needs at least one coefficient")
        if coeffs[0] == 0.0:
            raise ValueError("phi_0 must be nonzero")
        if sum(coeffs) == 0.0:
            raise ValueError("sum of filter coefficients must be nonzero")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def phi_sum(self) -> float:
        return float(sum(self.coefficients))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1


IDENTITY_FILTER = LinearFilter((1.0,))


# --------------------------------------------------------------------------
# persistence rules
# --------------------------------------------------------------------------

_RULE_KINDS = ("stationary", "mildly_integrated", "local_to_unity", "unit_root")


@dataclass(frozen=True)
class PersistenceRule:
    """Rule mapping sample size n to the autoregressive parameter rho.

    * ``stationary``: fixed rho in [-1 + delta, 1)
    * ``mildly_integrated``: rho_n = 1 + c * n**(a - 1), c < 0, a in (0, 1)
    * ``local_to_unity``: rho_n = 1 + c / n
    * ``unit_root``: rho_n = 1

    ``delta`` is the margin keeping rho away from -1; ``c_bar`` >= 0 allows
    mildly explosive roots up to 1 + c_bar / n.
    """

    kind: str
    rho: Optional[float] = None
    c: Optional[float] = None
    a: Optional[float] = None
    delta: float = 0.05
    c_bar: float = 0.0

    def __post_init__(self):
        if self.kind not in _RULE_KINDS:
            raise ValueError(f"unknown persistence rule {self.kind!r}; choose from {_RULE_KINDS}")
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        if self.c_bar < 0:
            raise ValueError("c_bar must be >= 0")
        if self.kind == "stationary":
            if self.rho is None:
                raise ValueError("stationary rule needs rho")
        elif self.kind == "mildly_integrated":
            if self.c is None or self.c >= 0:
                raise ValueError("mildly_integrated needs c < 0")
            if self.a is None or not (0.0 < self.a < 1.0):
                raise ValueError("mildly_integrated needs a in (0, 1)")
        elif self.kind == "local_to_unity":
            if self.c is None:
                raise ValueError("local_to_unity needs c")

    def resolve(self, n: int) -> float:
        """Resolve rho for sample size n, validating the admissible range."""
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        if self.kind == "stationary":
            rho = float(self.rho)
        elif self.kind == "mildly_integrated":
            rho = 1.0 + self.c * float(n) ** (self.a - 1.0)
        elif self.kind == "local_to_unity":
            rho = 1.0 + self.c / n
        else:  # unit_root
            rho = 1.0
        upper = 1.0 + self.c_bar / n
        if rho <= -1.0 + self.delta or rho > upper:
            raise RhoOutOfRange(
                f"rho={rho:.6g} outside ({-1.0 + self.delta:.6g}, {upper:.6g}] "
                f"for rule {self.kind} at n={n}"
            )
        return rho

    def label(self) -> str:
        """Short human-readable tag used in Monte Carlo reports."""
        if self.kind == "stationary":
            return f"stat(rho={self.rho:g})"
        if self.kind == "mildly_integrated":
            return f"mi(c={self.c:g},a={self.a:g})"
        if self.kind == "local_to_unity":
            return f"lur(c={self.c:g})"
        return "unit"


def resolve_rho(rule: PersistenceRule, n: int) -> float:
    """Functional form of :meth:`PersistenceRule.resolve`."""
    return rule.resolve(n)


# --------------------------------------------------------------------------
# regression functions
# --------------------------------------------------------------------------

_M_KINDS = ("zero", "constant", "linear", "logistic", "sine")


@dataclass(frozen=True)
class RegressionFunction:
    """Regression function m drawn from a menu with known derivative bounds.

    * ``zero``:      m(x) = 0
    * ``constant``:  m(x) = theta
    * ``linear``:    m(x) = slope * x, saturated at +/- cap
    * ``logistic``:  m(x) = 1 / (1 + exp(-x / scale))
    * ``sine``:      m(x) = sin(freq * x)

    Hard-coding the menu keeps sup|m'| verifiable.
    """

    kind: str = "zero"
    theta: float = 0.0
    slope: float = 1.0
    cap: float = 100.0
    scale: float = 1.0
    freq: float = 1.0

    def __post_init__(self):
        if self.kind not in _M_KINDS:
            raise ValueError(f"unknown regression function {self.kind!r}; choose from {_M_KINDS}")
        if self.kind == "linear" and self.cap <= 0:
            raise ValueError("linear cap must be > 0")
        if self.kind == "logistic" and self.scale <= 0:
            raise ValueError("logistic scale must be > 0")

    @property
    def derivative_bound(self) -> float:
        if self.kind in ("zero", "constant"):
            return 0.0
        if self.kind == "linear":
            return abs(self.slope)
        if self.kind == "logistic":
            return 0.25 / self.scale
        return abs(self.freq)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.full_like(x, self.theta)
        if self.kind == "linear":
            return np.clip(self.slope * x, -self.cap, self.cap)
        if self.kind == "logistic":
            return 1.0 / (1.0 + np.exp(-x / self.scale))
        return np.sin(self.freq * x)


# --------------------------------------------------------------------------
# full spec and realized sample
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DgpSpec:
    """Complete description of one data generating process."""

    m: RegressionFunction
    persistence: PersistenceRule
    filter: LinearFilter = IDENTITY_FILTER
    eps_law: InnovationLaw = InnovationLaw("gaussian")
    u_law: InnovationLaw = InnovationLaw("gaussian")
    sigma_u: float = 1.0
    n: int = 100

    def __post_init__(self):
        if self.sigma_u < 0:
            raise ValueError("sigma_u must be >= 0")
        if self.n < 2:
            raise ValueError("n must be >= 2")

    def to_dict(self) -> dict:
        return {
            "m": {
                "kind": self.m.kind, "theta": self.m.theta, "slope": self.m.slope,
                "cap": self.m.cap, "scale": self.m.scale, "freq": self.m.freq,
            },
            "persistence": {
                "kind": self.persistence.kind, "rho": self.persistence.rho,
                "c": self.persistence.c, "a": self.persistence.a,
                "delta": self.persistence.delta, "c_bar": self.persistence.c_bar,
            },
            "filter": list(self.filter.coefficients),
            "eps_law": {"kind": self.eps_law.kind, "df": self.eps_law.df},
            "u_law": {"kind": self.u_law.kind, "df": self.u_law.df},
            "sigma_u": self.sigma_u,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DgpSpec":
        return cls(
            m=RegressionFunction(**d["m"]),
            persistence=PersistenceRule(**d["persistence"]),
            filter=LinearFilter(tuple(d["filter"])),
            eps_law=InnovationLaw(**d["eps_law"]),
            u_law=InnovationLaw(**d["u_law"]),
            sigma_u=d["sigma_u"],
            n=d["n"],
        )

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Sample:
    """One realized path of the DGP.

    ``x`` holds x_0..x_n (x_0 = 0 first); ``y`` holds y_1..y_{n+1}, so
    ``y[i]`` is the response paired with regressor ``x[i]``. Regeneration
    from (seed, spec) is bit-identical.
    """

    x: np.ndarray
    y: np.ndarray
    seed: int
    spec_digest: str

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have equal length")
        if self.x[0] != 0.0:
            raise ValueError("x_0 must be 0")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))

    @property
    def n(self) -> int:
        return len(self.x) - 1

    @property
    def regressors(self) -> np.ndarray:
        """x_1..x_n: the regressor values entering the estimation sums."""
        return self.x[1:]

    @property
    def responses(self) -> np.ndarray:
        """y_2..y_{n+1}: the responses paired with x_1..x_n."""
        return self.y[1:]


def simulate(spec: DgpSpec, seed: int) -> Sample:
    """Simulate one sample path; deterministic in (seed, spec).

    A pre-sample of filter-order many innovations is drawn so that
    v_t = sum_k phi_k eps_{t-k} already has its stationary marginal at
    t = 1, while keeping x_0 = 0.
    """
    n = spec.n
    rho = spec.persistence.resolve(n)
    phi = np.asarray(spec.filter.coefficients)
    order = spec.filter.order

    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    # draw order is part of the determinism contract: eps first, then u
    eps = spec.eps_law.sample(rng, n + order)  # eps_{1-order}..eps_n
    u = spec.u_law.sample(rng, n + 1)          # u_1..u_{n+1}

    if order == 0:
        v = phi[0] * eps
    else:
        v = np.convolve(eps, phi, mode="full")[order: order + n]
    # x_t = rho x_{t-1} + v_t with x_0 = 0
    x_body = lfilter([1.0], [1.0, -rho], v)
    x = np.concatenate(([0.0], x_body))

    y = spec.m(x) + spec.sigma_u * u  # y_{t+1} = m(x_t) + sigma_u u_{t+1}, t=0..n
    return Sample(x=x, y=y, seed=int(seed), spec_digest=spec.digest())


# --------------------------------------------------------------------------
# exact second moments
# --------------------------------------------------------------------------


def _ma_coefficients(filt: LinearFilter, rho: float, t: int) -> np.ndarray:
    """Coefficients a_0..a_{t-1} of x_t on eps_t..eps_{t-(t-1)}.

    a_k = sum_l rho**l phi_{k-l}, computed via a_k = rho a_{k-1} + phi_k.
    """
    phi_padded = np.zeros(t)
    m = min(t, len(filt.coefficients))
    phi_padded[:m] = filt.coefficients[:m]
    return lfilter([1.0], [1.0, -rho], phi_padded)


def exact_variance(filt: LinearFilter, rho: float, t: int) -> float:
    """Exact var(x_t) under the simulation contract (= d_t**2 at t = n).

    Splits into the variance of the post-sample shocks (eps_1..eps_t) and
    the pre-sample shocks feeding through the finite filter; the latter
    truncates exactly at the filter order.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    a = _ma_coefficients(filt, rho, t)
    v1 = float(np.dot(a, a))
    # pre-sample contribution: shocks eps_0..eps_{1-order} reach x_t through
    # phi only (k = t..t+order-1)
    phi = filt.coefficients
    order = len(phi) - 1
    v2 = 0.0
    rho_pows = rho ** np.arange(t)
    for k in range(t, t + order):
        lo = max(0, k - order)
        ls = np.arange(lo, min(t - 1, k) + 1)
        coeff = float(np.sum(rho_pows[ls] * np.array([phi[k - l] for l in ls])))
        v2 += coeff * coeff
    return v1 + v2


def stationary_variance(filt: LinearFilter, rho: float) -> float:
    """Variance of the stationary solution (|rho| < 1); limit of exact_variance."""
    if abs(rho) >= 1.0:
        raise ValueError("stationary variance requires |rho| < 1")
    order = filt.order
    a = _ma_coefficients(filt, rho, order + 1)  # a_0..a_order
    head = float(np.dot(a[:-1], a[:-1])) if order > 0 else 0.0
    return head + a[-1] ** 2 / (1.0 - rho * rho)


def omega_sq(rho: float, n: int) -> float:
    """(1 - exp(-n(1 - rho^2))) / (n(1 - rho^2)), with value 1 at rho = 1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    z = n * (1.0 - rho * rho)
    if abs(z) < 1e-12:
        return 1.0
    return -math.expm1(-z) / z


def norming(spec: DgpSpec, n: Optional[int] = None) -> tuple:
    """Exact norming constants (d_n, e_n) = (sd(x_n), n / d_n)."""
    n = spec.n if n is None else int(n)
    rho = spec.persistence.resolve(n)
    d_n = math.sqrt(exact_variance(spec.filter, rho, n))
    return d_n, n / d_n


# --------------------------------------------------------------------------
# CSV round-trip
# --------------------------------------------------------------------------


def write_sample_csv(sample: Sample, path) -> None:
    """Write a sample as `t,x,y` rows: x_t for t=0..n, y_t for t=1..n+1.

    Row 0 has an empty y cell and row n+1 an empty x cell. Floats use
    shortest-representation decimals so the round-trip is exact.
    """
    n = sample.n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y"])
        w.writerow([0, repr(float(sample.x[0])), ""])
        for t in range(1, n + 1):
            w.writerow([t, repr(float(sample.x[t])), repr(float(sample.y[t - 1]))])
        w.writerow([n + 1, "", repr(float(sample.y[n]))])


def read_sample_csv(path) -> Sample:
    """Read a `t,x,y` CSV written by :func:`write_sample_csv`."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:3]] != ["t", "x", "y"]:
            raise BadInput(f"{path}: expected header 't,x,y', got {reader.fieldnames}")
        for row in reader:
            xcell = (row["x"] or "").strip()
            ycell = (row["y"] or "").strip()
            if xcell:
                xs.append(float(xcell))
            if ycell:
                ys.append(float(ycell))
    if not xs or len(xs) != len(ys):
        raise BadInput(
            f"{path}: need equal-length x (t=0..n) and y (t=1..n+1) columns, "
            f"got {len(xs)} and {len(ys)}"
        )
    if xs[0] != 0.0:
        # external data need not start at 0; re-anchor is the caller's business
        raise BadInput(f"{path}: x_0 must be 0 in sample files, got {xs[0]}")
    return Sample(x=np.array(xs), y=np.array(ys), seed=-1, spec_digest="external")
