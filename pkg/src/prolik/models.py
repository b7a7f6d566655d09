"""Likelihood models sharing one contract: value, gradient, Hessian, domain.

All models are immutable once built. ``evaluate`` is the workhorse; the
single-quantity accessors are conveniences on top of it.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import gev
from .errors import DomainError, InsufficientDataError, RankError


class LikelihoodModel:
    """Base class: a log-likelihood for a fixed dataset.

    Subclasses implement ``evaluate(theta) -> (value, grad, hess)`` returning
    ``-inf`` (and NaN derivatives) outside the domain.
    """

    names: tuple = ()

    @property
    def p(self):
        return len(self.names)

    def evaluate(self, theta):
        raise NotImplementedError

    def loglik(self, theta):
        return self.evaluate(theta)[0]

    def grad(self, theta):
        return self.evaluate(theta)[1]

    def hess(self, theta):
        return self.evaluate(theta)[2]

    def in_domain(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,) or not np.all(np.isfinite(theta)):
            return False
        return bool(np.isfinite(self.evaluate(theta)[0]))

    def start(self):
        """A rough interior starting point for maximisation."""
        raise NotImplementedError

    def repair_step(self, theta):
        """Move ``theta`` one step towards the interior; identity by default."""
        return theta

    def repair(self, theta, max_steps=60):
        theta = np.array(theta, dtype=float)
        for _ in range(max_steps):
            if self.in_domain(theta):
                return theta
            new = self.repair_step(theta)
            if np.array_equal(new, theta):
                break
            theta = new
        return theta

    # Models with a linear re-parameterisation (standardised covariates)
    # expose the map back to user-facing coordinates.
    @property
    def raw_transform(self):
        return np.eye(self.p)

    @property
    def raw_names(self):
        return self.names

    def to_raw(self, theta):
        return self.raw_transform @ np.asarray(theta, dtype=float)

    def from_raw(self, theta_raw):
        return np.linalg.solve(self.raw_transform, np.asarray(theta_raw, dtype=float))


def _check_rank(X, label):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] == 0:
        raise RankError(f"{label} design must be a non-empty 2-D matrix")
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise RankError(f"{label} design matrix is rank deficient")
    return X


def _intercept_column(X):
    for j in range(X.shape[1]):
        col = X[:, j]
        if np.all(col == col[0]) and col[0] != 0.0:
            return j
    return None


def _standardiser(X):
    """Return (X @ Q, Q) with non-constant columns centred (when an intercept
    exists) and scaled to unit standard deviation."""
    p = X.shape[1]
    Q = np.eye(p)
    i0 = _intercept_column(X)
    for j in range(p):
        col = X[:, j]
        if np.all(col == col[0]):
            continue
        scale = float(np.std(col))
        centre = float(np.mean(col)) if i0 is not None else 0.0
        Q[j, j] = 1.0 / scale
        if i0 is not None:
            Q[i0, j] = -centre / (scale * X[0, i0])
    return X @ Q, Q


@dataclass
class GevRegressionSpec:
    responses: np.ndarray
    design_mu: np.ndarray
    design_sigma: np.ndarray
    design_xi: np.ndarray
    scale_link: str = "log"
    columns_mu: Optional[Sequence[str]] = None
    columns_sigma: Optional[Sequence[str]] = None
    columns_xi: Optional[Sequence[str]] = None


class GevModel(LikelihoodModel):
    """Independent GEV observations with linear predictors for mu, sigma, xi.

    The scale link is ``identity`` or ``log``. Internal coordinates may be
    standardised; ``raw_transform`` maps them back.
    """

    def __init__(self, y, design_mu, design_sigma, design_xi, scale_link="identity",
                 names=None, raw_names=None, transform=None):
        if scale_link not in ("identity", "log"):
            raise DomainError(f"unknown scale link {scale_link!r}")
        self.y = np.asarray(y, dtype=float)
        self.X = (np.asarray(design_mu, float), np.asarray(design_sigma, float),
                  np.asarray(design_xi, float))
        self.scale_link = scale_link
        self.sizes = tuple(X.shape[1] for X in self.X)
        self.slices = (slice(0, self.sizes[0]),
                       slice(self.sizes[0], self.sizes[0] + self.sizes[1]),
                       slice(self.sizes[0] + self.sizes[1], sum(self.sizes)))
        self.names = tuple(names)
        self._raw_names = tuple(raw_names) if raw_names is not None else self.names
        self._transform = np.eye(len(self.names)) if transform is None else transform

    @property
    def raw_transform(self):
        return self._transform

    @property
    def raw_names(self):
        return self._raw_names

    @property
    def n(self):
        return self.y.shape[0]

    @property
    def is_iid(self):
        return all(X.shape[1] == 1 and np.all(X == 1.0) for X in self.X)

    def gev_params(self, theta):
        theta = np.asarray(theta, dtype=float)
        mu = self.X[0] @ theta[self.slices[0]]
        lin_s = self.X[1] @ theta[self.slices[1]]
        if self.scale_link == "log":
            with np.errstate(over="ignore"):
                sigma = np.exp(lin_s)
        else:
            sigma = lin_s
        xi = self.X[2] @ theta[self.slices[2]]
        return mu, sigma, xi

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        p = self.p
        nan_out = (-np.inf, np.full(p, np.nan), np.full((p, p), np.nan))
        if theta.shape != (p,) or not np.all(np.isfinite(theta)):
            return nan_out
        mu, sigma, xi = self.gev_params(theta)
        if np.any(sigma <= 0.0) or np.any(xi <= -1.0):
            return nan_out
        v, g, h, ok = gev.obs_terms(self.y, mu, sigma, xi)
        if not np.all(ok):
            return nan_out
        c = (np.ones_like(sigma), sigma if self.scale_link == "log" else np.ones_like(sigma),
             np.ones_like(sigma))
        grad = np.empty(p)
        hess = np.empty((p, p))
        for a in range(3):
            grad[self.slices[a]] = self.X[a].T @ (g[:, a] * c[a])
            for b in range(a, 3):
                block = self.X[a].T @ ((h[:, a, b] * c[a] * c[b])[:, None] * self.X[b])
                hess[self.slices[a], self.slices[b]] = block
                hess[self.slices[b], self.slices[a]] = block.T
        if self.scale_link == "log":
            Xs = self.X[1]
            hess[self.slices[1], self.slices[1]] += Xs.T @ ((g[:, 1] * sigma)[:, None] * Xs)
        return float(v.sum()), grad, hess

    def loglik(self, theta):
        # value only; cheaper than evaluate() for samplers
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,) or not np.all(np.isfinite(theta)):
            return -np.inf
        mu, sigma, xi = self.gev_params(theta)
        if np.any(sigma <= 0.0) or np.any(xi <= -1.0):
            return -np.inf
        return float(np.sum(gev.gev_logpdf(self.y, (mu, sigma, xi))))

    def start(self):
        Xm, Xs, Xx = self.X
        coef_mu, *_ = np.linalg.lstsq(Xm, self.y, rcond=None)
        resid = self.y - Xm @ coef_mu
        sd = max(float(np.std(resid)), 1e-8 * (1.0 + float(np.std(self.y))), 1e-12)
        sigma0 = np.sqrt(6.0) * sd / np.pi
        coef_mu = coef_mu - 0.5772 * sigma0 * np.linalg.lstsq(Xm, np.ones(self.n), rcond=None)[0]
        target = np.full(self.n, np.log(sigma0) if self.scale_link == "log" else sigma0)
        coef_s, *_ = np.linalg.lstsq(Xs, target, rcond=None)
        coef_x, *_ = np.linalg.lstsq(Xx, np.full(self.n, 0.1), rcond=None)
        return self.repair(np.concatenate([coef_mu, coef_s, coef_x]))

    def repair_step(self, theta):
        theta = np.array(theta, dtype=float)
        _, _, xi = self.gev_params(theta)
        if np.any(xi <= -1.0):
            theta[self.slices[2]] *= 0.5
            return theta
        if self.scale_link == "log":
            ones, *_ = np.linalg.lstsq(self.X[1], np.ones(self.n), rcond=None)
            theta[self.slices[1]] += np.log(1.5) * ones
        else:
            theta[self.slices[1]] *= 1.5
        return theta

    def gev_map(self, row_mu=None, row_sigma=None, row_xi=None):
        """Affine map ``theta -> (mu, lin_sigma, xi)`` at one covariate row.

        Rows are given in the internal (possibly standardised) coordinates;
        ``None`` means the first observation's row.
        """
        rows = [r if r is not None else X[0] for r, X in zip((row_mu, row_sigma, row_xi), self.X)]
        M = np.zeros((3, self.p))
        for a in range(3):
            M[a, self.slices[a]] = rows[a]
        return M


def build_iid_gev(sample):
    y = np.asarray(sample, dtype=float).ravel()
    if y.size < 5:
        raise InsufficientDataError(f"need at least 5 observations, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise DomainError("sample contains non-finite values")
    one = np.ones((y.size, 1))
    return GevModel(y, one, one, one, names=("mu", "sigma", "xi"))


def build_gev_regression(spec, standardize=True):
    """GEV regression model from a ``GevRegressionSpec``.

    With ``standardize`` the non-constant design columns are centred and
    scaled internally; estimates map back through ``model.to_raw``.
    """
    y = np.asarray(spec.responses, dtype=float).ravel()
    designs = [_check_rank(X, lab) for X, lab in
               ((spec.design_mu, "mu"), (spec.design_sigma, "sigma"), (spec.design_xi, "xi"))]
    for X in designs:
        if X.shape[0] != y.size:
            raise DomainError("design rows must match the number of responses")
    p = sum(X.shape[1] for X in designs)
    if y.size < max(p, 5):
        raise InsufficientDataError(f"need at least max({p}, 5) observations, got {y.size}")
    names = []
    for lab, X, cols in (("mu", designs[0], spec.columns_mu),
                         ("logsigma" if spec.scale_link == "log" else "sigma", designs[1],
                          spec.columns_sigma),
                         ("xi", designs[2], spec.columns_xi)):
        cols = list(cols) if cols is not None else [str(j) for j in range(X.shape[1])]
        names += [f"{lab}_{c}" for c in cols]
    blocks = []
    if standardize:
        std = [_standardiser(X) for X in designs]
        designs = [s[0] for s in std]
        blocks = [s[1] for s in std]
    else:
        blocks = [np.eye(X.shape[1]) for X in designs]
    T = np.zeros((p, p))
    i = 0
    for Q in blocks:
        k = Q.shape[0]
        T[i:i + k, i:i + k] = Q
        i += k
    internal = tuple(f"{n}~" for n in names) if standardize else tuple(names)
    return GevModel(y, *designs, scale_link=spec.scale_link, names=internal,
                    raw_names=names, transform=T)


@dataclass
class LinearGaussianSpec:
    design: np.ndarray
    responses: np.ndarray
    variance: Optional[float] = None  # None: profiled out
    columns: Optional[Sequence[str]] = None


class LinearGaussianModel(LikelihoodModel):
    """Gaussian linear regression; the variance is known or concentrated out."""

    def __init__(self, X, y, variance=None, names=None):
        self.X = X
        self.y = y
        self.variance = variance
        self.names = tuple(names) if names is not None else tuple(
            f"theta_{j}" for j in range(X.shape[1]))
        self._xtx = X.T @ X
        self._xty = X.T @ y

    @property
    def n(self):
        return self.y.shape[0]

    def evaluate(self, theta):
        theta = np.asarray(theta, dtype=float)
        n = self.n
        r = self.y - self.X @ theta
        rss = float(r @ r)
        xr = self.X.T @ r
        if self.variance is not None:
            s2 = self.variance
            value = -0.5 * n * np.log(2.0 * np.pi * s2) - 0.5 * rss / s2
            return value, xr / s2, -self._xtx / s2
        if not rss > 0.0:
            p = self.p
            return -np.inf, np.full(p, np.nan), np.full((p, p), np.nan)
        value = -0.5 * n * (np.log(2.0 * np.pi * rss / n) + 1.0)
        grad = n * xr / rss
        hess = -n * self._xtx / rss + 2.0 * n * np.outer(xr, xr) / rss**2
        return value, grad, hess

    def start(self):
        return np.linalg.lstsq(self.X, self.y, rcond=None)[0]

    def ols(self):
        return np.linalg.solve(self._xtx, self._xty)


def build_linear_gaussian(spec):
    X = _check_rank(np.asarray(spec.design, dtype=float), "regression")
    y = np.asarray(spec.responses, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DomainError("design rows must match the number of responses")
    if y.size < X.shape[1]:
        raise InsufficientDataError("need n >= number of coefficients")
    if spec.variance is not None and not spec.variance > 0:
        raise DomainError("known variance must be positive")
    names = [f"theta_{c}" for c in spec.columns] if spec.columns is not None else None
    return LinearGaussianModel(X, y, spec.variance, names)


class QuadraticModel(LikelihoodModel):
    """Exactly quadratic log-likelihood ``-(theta - c)' H (theta - c) / 2``."""

    def __init__(self, center, H, names=None):
        self.center = np.asarray(center, dtype=float)
        self.H = np.asarray(H, dtype=float)
        self.names = tuple(names) if names is not None else tuple(
            f"theta_{j}" for j in range(self.center.size))

    def evaluate(self, theta):
        d = np.asarray(theta, dtype=float) - self.center
        Hd = self.H @ d
        return -0.5 * float(d @ Hd), -Hd, -self.H.copy()

    def start(self):
        return self.center + 0.1


def build_quadratic(center, H):
    H = np.asarray(H, dtype=float)
    if H.shape[0] != H.shape[1] or np.any(np.linalg.eigvalsh(0.5 * (H + H.T)) <= 0):
        raise DomainError("H must be symmetric positive definite")
    return QuadraticModel(center, H)
