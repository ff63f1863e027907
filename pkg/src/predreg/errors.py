"""Exception types shared across the package."""


class PredregError(Exception):
    """Base class for all predreg errors."""


class RhoOutOfRange(PredregError):
    """Autoregressive parameter falls outside the admissible range."""


class BadBandwidth(PredregError):
    """Bandwidth is not strictly positive."""


class NoLocalMass(PredregError):
    """No kernel mass at the requested spatial point(s).

    ``points`` carries the offending evaluation points when a whole set
    was checked at once.
    """

    def __init__(self, message: str, points=None):
        super().__init__(message)
        self.points = list(points) if points is not None else []


class DegenerateVariance(PredregError):
    """Local residual variance is numerically zero; t-statistic undefined."""


class BadProbability(PredregError):
    """Probability argument outside (0, 1)."""


class BadDf(PredregError):
    """Invalid degrees of freedom."""


class NotStationary(PredregError):
    """Stationary-regime operation requested with |rho| >= 1."""


class BadInput(PredregError):
    """Malformed user input (empty sample, bad CSV, bad config)."""
