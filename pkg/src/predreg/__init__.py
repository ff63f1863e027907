"""Nonparametric predictive regression with unknown regressor persistence.

Kernel regression estimation, pointwise inference and non-predictability
tests that remain valid whether the predictor is stationary, mildly
integrated, or (near-)unit-root, plus a Monte Carlo harness that checks
the asymptotic claims at desk scale.
"""

__version__ = "0.1.0"

from .dgp import (  # noqa: F401
    DgpSpec,
    InnovationLaw,
    LinearFilter,
    PersistenceRule,
    RegressionFunction,
    Sample,
    exact_variance,
    norming,
    omega_sq,
    resolve_rho,
    simulate,
)
from .errors import (  # noqa: F401
    BadBandwidth,
    BadDf,
    BadInput,
    BadProbability,
    DegenerateVariance,
    NoLocalMass,
    NotStationary,
    PredregError,
    RhoOutOfRange,
)
from .estimate import (  # noqa: F401
    BandwidthRule,
    NadarayaWatsonRegressor,
    PointInference,
    conf_interval,
    local_signal,
    nw_estimate,
    point_inference,
    sigma_u_hat,
    spatial_density,
    t_stat,
)
from .hypotests import (  # noqa: F401
    PredTestResult,
    chi2_cdf,
    chi2_quantile,
    max_chi2_quantile,
    normal_cdf,
    normal_quantile,
    predictability_test,
    theta_hat,
)
from .kernels import KernelSpec, get_kernel  # noqa: F401
from .limits import (  # noqa: F401
    OuPathSpec,
    eta_sampler,
    gaussian_density,
    ou_local_time,
    simulate_ou,
    stationary_density,
)
from .montecarlo import (  # noqa: F401
    ExperimentConfig,
    McReport,
    ks_statistic,
    ks_two_sample,
    run_coverage,
    run_density_convergence,
    run_size,
    run_tstat_distribution,
)
