"""GEV distribution, return levels and their closed-form derivatives.

Parameters are ordered ``(mu, sigma, xi)``. Every formula is written in terms
of the products ``x = xi * z`` (log-likelihood, ``z = (y - mu) / sigma``) and
``u = xi * s`` (return level, ``s = log T``). Near zero these products are
handled by power series so that the Gumbel limit and the neighbourhood of
``xi = 0`` carry no cancellation error.
"""

import functools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

# Series are used when |xi * z| (or |xi * s|) is below this; with |z| < 100 that
# contains every |xi| < 1e-4.
SERIES_SWITCH = 1e-2
XI_SWITCH = 1e-4
_NTERMS = 12

_k = np.arange(_NTERMS + 1, dtype=float)
# log1p(x)/x = sum (-1)^k x^k / (k+1), and its first two derivatives.
_L0 = ((-1.0) ** _k) / (_k + 1.0)
_L1 = (_L0 * _k)[1:]
_L2 = (_L0 * _k * (_k - 1.0))[2:]
# expm1(u)/u = sum u^k / (k+1)!
_fact = np.cumprod(np.concatenate(([1.0], np.arange(1.0, _NTERMS + 2))))
_P0 = 1.0 / _fact[1:_NTERMS + 2]
_P1 = (_P0 * _k)[1:]
_P2 = (_P0 * _k * (_k - 1.0))[2:]


def _quiet(fn):
    # far-out trial points overflow harmlessly; callers see inf/nan and reject them
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return fn(*args, **kwargs)
    return wrapper


def _poly(coefs, x):
    # Horner, coefs in increasing powers
    out = np.full_like(x, coefs[-1])
    for c in coefs[-2::-1]:
        out = out * x + c
    return out


@dataclass(frozen=True)
class GevParams:
    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma!r}")
        if not self.xi >= -1.0:
            raise DomainError(f"xi must be >= -1, got {self.xi!r}")

    def astuple(self):
        return (self.mu, self.sigma, self.xi)


def _unpack(theta):
    if isinstance(theta, GevParams):
        return theta.mu, theta.sigma, theta.xi
    mu, sigma, xi = theta
    return mu, sigma, xi


def _log1p_ratio(x):
    """``L(x) = log1p(x)/x`` and its first two derivatives, elementwise."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_SWITCH
    xs = np.where(small, x, 0.0)
    xe = np.where(small, 1.0, x)
    with np.errstate(invalid="ignore", divide="ignore"):
        lg = np.log1p(xe)
        r = xe / (1.0 + xe)
        L = lg / xe
        L1 = (r - lg) / xe**2
        L2 = (2.0 * lg - 2.0 * r - r * r) / xe**3
    if small.any():
        L = np.where(small, _poly(_L0, xs), L)
        L1 = np.where(small, _poly(_L1, xs), L1)
        L2 = np.where(small, _poly(_L2, xs), L2)
    return L, L1, L2


def _expm1_ratio(u):
    """``phi(u) = expm1(u)/u`` and its first two derivatives, elementwise."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < SERIES_SWITCH
    us = np.where(small, u, 0.0)
    ue = np.where(small, 1.0, u)
    em = np.expm1(ue)
    e = em + 1.0
    phi = em / ue
    phi1 = (ue * e - em) / ue**2
    phi2 = (ue * ue * e - 2.0 * ue * e + 2.0 * em) / ue**3
    if small.any():
        phi = np.where(small, _poly(_P0, us), phi)
        phi1 = np.where(small, _poly(_P1, us), phi1)
        phi2 = np.where(small, _poly(_P2, us), phi2)
    return phi, phi1, phi2


def _reduced(y, mu, sigma, xi):
    """Return z, w, A = log(w)/xi and the support mask."""
    z = (np.asarray(y, dtype=float) - mu) / sigma
    x = xi * z
    w = 1.0 + x
    support = w > 0.0
    L, L1, L2 = _log1p_ratio(np.where(support, x, 0.0))
    return z, w, support, L, L1, L2


@_quiet
def gev_logpdf(y, theta):
    """Log-density; ``-inf`` outside the support."""
    mu, sigma, xi = _unpack(theta)
    z, w, support, L, _, _ = _reduced(y, mu, sigma, xi)
    A = z * L
    with np.errstate(over="ignore"):
        val = -np.log(sigma) - (1.0 + xi) * A - np.exp(-A)
    out = np.where(support, val, -np.inf)
    return float(out) if out.ndim == 0 else out


@_quiet
def gev_cdf(y, theta):
    mu, sigma, xi = _unpack(theta)
    z, w, support, L, _, _ = _reduced(y, mu, sigma, xi)
    A = z * L
    with np.errstate(over="ignore"):
        val = np.exp(-np.exp(-A))
    # outside the support: below the lower end-point (xi > 0) or above the upper one (xi < 0)
    outside = np.where(xi > 0, 0.0, 1.0)
    out = np.where(support, val, outside)
    return float(out) if out.ndim == 0 else out


def upper_endpoint(theta):
    mu, sigma, xi = _unpack(theta)
    if xi < 0:
        return mu - sigma / xi
    return float("inf")


@_quiet
def return_level(s, theta):
    """Return level for log return period ``s = log T``."""
    mu, sigma, xi = _unpack(theta)
    s = np.asarray(s, dtype=float)
    phi, _, _ = _expm1_ratio(xi * s)
    out = mu + sigma * s * phi
    return float(out) if out.ndim == 0 else out


class LoglikTerms(NamedTuple):
    value: float
    grad: np.ndarray
    hess: np.ndarray
    in_support: bool


class RlDerivs(NamedTuple):
    eta: float
    grad: np.ndarray   # d eta / d(mu, sigma, xi)
    hess: np.ndarray   # 3 x 3
    cross: np.ndarray  # d^2 eta / ds d(mu, sigma, xi)
    ds: float          # d eta / ds


@_quiet
def obs_terms(y, mu, sigma, xi):
    """Per-observation log-density with gradient and Hessian in (mu, sigma, xi).

    Arguments broadcast against each other. Returns ``(value, grad, hess,
    support)`` with shapes ``(n,)``, ``(n, 3)``, ``(n, 3, 3)``, ``(n,)``.
    Entries outside the support hold ``-inf`` / ``nan``.
    """
    y, mu, sigma, xi = np.broadcast_arrays(
        np.atleast_1d(np.asarray(y, dtype=float)), mu, sigma, xi)
    z, w, support, L, L1, L2 = _reduced(y, mu, sigma, xi)
    ws = np.where(support, w, 1.0)
    A = z * L
    A_z = 1.0 / ws
    A_zz = -xi / ws**2
    A_zx = -z / ws**2
    A_x = z * z * L1
    A_xx = z**3 * L2
    with np.errstate(over="ignore", invalid="ignore"):
        E = np.exp(-A)
        K = E - 1.0 - xi
        g = -(1.0 + xi) * A - E
        g_z = A_z * K
        g_x = -A + A_x * K
        g_zz = A_zz * K - E * A_z**2
        g_zx = A_zx * K + A_z * (-E * A_x - 1.0)
        g_xx = -2.0 * A_x + A_xx * K - E * A_x**2

        n = y.shape[0]
        value = -np.log(sigma) + g
        grad = np.empty((n, 3))
        grad[:, 0] = -g_z / sigma
        grad[:, 1] = -1.0 / sigma - g_z * z / sigma
        grad[:, 2] = g_x
        s2 = sigma * sigma
        hess = np.empty((n, 3, 3))
        hess[:, 0, 0] = g_zz / s2
        hess[:, 0, 1] = hess[:, 1, 0] = (g_zz * z + g_z) / s2
        hess[:, 1, 1] = (1.0 + g_zz * z * z + 2.0 * g_z * z) / s2
        hess[:, 0, 2] = hess[:, 2, 0] = -g_zx / sigma
        hess[:, 1, 2] = hess[:, 2, 1] = -g_zx * z / sigma
        hess[:, 2, 2] = g_xx

    bad = ~support | ~np.isfinite(value)
    if np.any(bad):
        value = np.where(bad, -np.inf, value)
        grad[bad] = np.nan
        hess[bad] = np.nan
    return value, grad, hess, ~bad


def loglik_terms(y, theta):
    """Log-likelihood of one observation with exact gradient and Hessian."""
    mu, sigma, xi = _unpack(theta)
    value, grad, hess, ok = obs_terms(y, mu, sigma, xi)
    return LoglikTerms(float(value[0]), grad[0], hess[0], bool(ok[0]))


@_quiet
def rl_derivs(s, theta):
    """Return level at ``s = log T`` with its derivatives in (mu, sigma, xi) and s."""
    mu, sigma, xi = _unpack(theta)
    s = float(s)
    u = xi * s
    phi, phi1, phi2 = (float(v) for v in _expm1_ratio(u))
    eu = float(np.exp(u))
    eta = mu + sigma * s * phi
    grad = np.array([1.0, s * phi, sigma * s * s * phi1])
    hess = np.zeros((3, 3))
    hess[1, 2] = hess[2, 1] = s * s * phi1
    hess[2, 2] = sigma * s**3 * phi2
    cross = np.array([0.0, eu, sigma * s * eu])
    return RlDerivs(eta, grad, hess, cross, sigma * eu)
