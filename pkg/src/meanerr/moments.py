"""Population parameters and first-order moments of the observed sample means.

The observation model is additive: each study value and each auxiliary value is
recorded with an independent zero-mean error, so the observed means carry both
the finite-population variability and the error variability. Everything
downstream (bias, MSE, optimal coefficients) is a function of the first-order
moments computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "ParameterError",
    "PopulationParams",
    "MomentSet",
    "derive_moments",
    "error_free",
]


class ParameterError(ValueError):
    """Raised when population parameters violate their domain constraints."""


@dataclass(frozen=True)
class PopulationParams:
    """Superpopulation and error-law parameters for a sample of size n.

    Variances are of the true values; ``sigma_u2`` and ``sigma_v2`` are the
    variances of the additive observation errors on the study and auxiliary
    variables respectively. Setting both error variances to zero recovers the
    error-free sampling setup.
    """

    n: int             # sample size, at least 2
    mu_y: float        # mean of the true study variable, nonzero
    mu_x: float        # mean of the true auxiliary variable, nonzero
    sigma_y2: float    # variance of the true study variable, positive
    sigma_x2: float    # variance of the true auxiliary variable, positive
    rho: float         # correlation between the true variables, in [-1, 1]
    sigma_u2: float    # study-side error variance, nonnegative
    sigma_v2: float    # auxiliary-side error variance, nonnegative

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise ParameterError(f"n must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ParameterError(f"n must be at least 2, got {self.n}")
        values = (self.mu_y, self.mu_x, self.sigma_y2, self.sigma_x2,
                  self.rho, self.sigma_u2, self.sigma_v2)
        if not all(math.isfinite(v) for v in values):
            raise ParameterError("all parameters must be finite")
        if self.mu_y == 0 or self.mu_x == 0:
            raise ParameterError("mu_y and mu_x must be nonzero")
        if self.sigma_y2 <= 0 or self.sigma_x2 <= 0:
            raise ParameterError("true-value variances must be positive")
        if not -1.0 <= self.rho <= 1.0:
            raise ParameterError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.sigma_u2 < 0 or self.sigma_v2 < 0:
            raise ParameterError("error variances must be nonnegative")


@dataclass(frozen=True)
class MomentSet:
    """First-order moments of the observed means for one parameter set.

    ``var_ybar`` and ``var_xbar`` are the variances of the observed study and
    auxiliary means, each the sum of the true-value variance and the error
    variance over n. ``cov_yxbar`` is their covariance; the errors are
    independent of everything, so only the true values contribute to it.
    """

    var_ybar: float    # (sigma_y2 + sigma_u2) / n
    var_xbar: float    # (sigma_x2 + sigma_v2) / n
    cov_yxbar: float   # rho * sigma_y * sigma_x / n
    ratio: float       # mu_y / mu_x
    cv_y: float        # sigma_y / mu_y, coefficient of variation
    cv_x: float        # sigma_x / mu_x


def derive_moments(params: PopulationParams) -> MomentSet:
    """Compute the first-order moment set for ``params``.

    The covariance of the observed means never involves the error variances
    (errors are mutually independent and independent of the true values), so
    it is invariant under changes to sigma_u2 and sigma_v2.
    """
    n = params.n
    sigma_y = math.sqrt(params.sigma_y2)
    sigma_x = math.sqrt(params.sigma_x2)
    return MomentSet(
        var_ybar=(params.sigma_y2 + params.sigma_u2) / n,
        var_xbar=(params.sigma_x2 + params.sigma_v2) / n,
        cov_yxbar=params.rho * sigma_y * sigma_x / n,
        ratio=params.mu_y / params.mu_x,
        cv_y=sigma_y / params.mu_y,
        cv_x=sigma_x / params.mu_x,
    )


def error_free(params: PopulationParams) -> PopulationParams:
    """Return a copy of ``params`` with both error variances set to zero."""
    import dataclasses

    return dataclasses.replace(params, sigma_u2=0.0, sigma_v2=0.0)
