"""Profile-likelihood confidence intervals, bands and contours.

Bounds are computed by constrained optimisation, by tracing ODEs along the
likelihood contour, and by reference methods (nested optimisation, closed
forms, random-walk Metropolis) used as cross-checks.
"""

from importlib.metadata import PackageNotFoundError, version

from .errors import ProlikError
from .models import (GevRegressionSpec, LinearGaussianSpec, build_gev_regression,
                     build_iid_gev, build_linear_gaussian, build_quadratic)
from .numerics import chisq_quantile, deviance_threshold
from .optimizer import MleFit, ProfileBound, delta_interval, fit_mle, profile_bound
from .targets import CoordinateTarget, LinearTarget, ReturnLevelTarget

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

__all__ = [
    "ProlikError", "GevRegressionSpec", "LinearGaussianSpec", "build_gev_regression",
    "build_iid_gev", "build_linear_gaussian", "build_quadratic", "chisq_quantile",
    "deviance_threshold", "MleFit", "ProfileBound", "delta_interval", "fit_mle",
    "profile_bound", "CoordinateTarget", "LinearTarget", "ReturnLevelTarget",
]
