"""Quantiles and small dense linear solvers shared by every other module."""

import math
import warnings

import numpy as np
from scipy import linalg

from .errors import DomainError, RankError, SingularSystemError

# Acklam's rational approximation, |rel err| < 1.2e-9 before refinement.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425

SINGULAR_PIVOT_RTOL = 1e-13
RANK_RTOL = 1e-12


def norm_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _acklam(p):
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    if p > 1.0 - _P_LOW:
        return -_acklam(1.0 - p)
    q = p - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def norm_quantile(p):
    """Standard normal quantile, accurate to about 1e-15 in the body.

    A rational initial guess is refined by one Halley step on the
    erfc-based CDF.
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -norm_quantile(1.0 - p)
    x = _acklam(p)
    e = norm_cdf(x) - p
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def chisq_quantile(p, d):
    """Chi-square quantile for one or two degrees of freedom."""
    p = float(p)
    if not 0.0 <= p < 1.0:
        raise DomainError(f"probability must lie in [0, 1), got {p!r}")
    if d == 1:
        if p == 0.0:
            return 0.0
        return norm_quantile(0.5 * (1.0 + p)) ** 2
    if d == 2:
        return -2.0 * math.log1p(-p)
    raise DomainError(f"only 1 or 2 degrees of freedom are supported, got {d!r}")


def deviance_threshold(level, d=1):
    """Half the chi-square quantile at confidence ``level``."""
    return 0.5 * chisq_quantile(level, d)


def solve_square(A, b):
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises SingularSystemError when a pivot falls below
    ``1e-13 * max|A|``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"matrix must be square, got shape {A.shape}")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
        raise SingularSystemError("non-finite entries in linear system", pivot=float("nan"))
    if scale == 0.0:
        raise SingularSystemError("zero matrix", pivot=0.0)
    with warnings.catch_warnings():
        # exact zero pivots are reported below with the pivot magnitude
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    smallest = float(pivots.min())
    if smallest < SINGULAR_PIVOT_RTOL * scale:
        raise SingularSystemError(
            f"numerically singular system (pivot {smallest:.3e})", pivot=smallest)
    return linalg.lu_solve((lu, piv), b, check_finite=False)


def solve_least_squares(A, b):
    """Least-squares solution of ``A x ~ b`` via Householder QR (m >= n)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    m, n = A.shape
    if m < n:
        raise RankError(f"need at least as many rows as columns, got {A.shape}")
    q, r = np.linalg.qr(A, mode="reduced")
    diag = np.abs(np.diag(r))
    if n and diag.min() <= RANK_RTOL * max(diag.max(), np.finfo(float).tiny):
        raise RankError(f"rank-deficient matrix (min |R_ii| = {diag.min():.3e})")
    return linalg.solve_triangular(r, q.T @ b, check_finite=False)
