"""Reference implementations used to cross-check the constrained and ODE solvers.

* the naive method: the profile log-likelihood is evaluated by maximising over
  the slice ``eta(theta) = value`` and the bound is the root of
  ``profile(value) = loglik_max - delta`` (Brent's method);
* the closed-form interval for the mean of a Gaussian linear regression.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, UnboundedError
from .models import LikelihoodModel, LinearGaussianSpec, build_linear_gaussian
from .numerics import deviance_threshold, solve_least_squares
from .optimizer import maximise

MAX_DOUBLINGS = 10
RESIDUAL_TOL = 1e-8


class SliceModel(LikelihoodModel):
    """The log-likelihood restricted to ``eta(theta) = value``.

    The target must be affine in one coordinate ``k`` with a constant
    coefficient; that coordinate is solved for and the remaining ones are the
    free parameters. For a GEV return level this is the substitution of the
    location intercept by the return level itself.
    """

    def __init__(self, model, target, value, t=None):
        self.model = model
        self.target = target
        self.value = float(value)
        self.t = t
        self.k, self.coef = target.solvable_index()
        self.free = np.array([j for j in range(model.p) if j != self.k], dtype=int)
        self.names = tuple(model.names[j] for j in self.free)

    def embed(self, lam):
        theta = np.zeros(self.model.p)
        theta[self.free] = lam
        eta0 = self.target.derivs(theta, self.t).value
        theta[self.k] = (self.value - eta0) / self.coef
        return theta

    def restrict(self, theta):
        return np.asarray(theta, dtype=float)[self.free].copy()

    def evaluate(self, lam):
        lam = np.asarray(lam, dtype=float)
        q = lam.size
        nan = (-np.inf, np.full(q, np.nan), np.full((q, q), np.nan))
        theta = self.embed(lam)
        if not np.all(np.isfinite(theta)):
            return nan
        v, g, H = self.model.evaluate(theta)
        if not np.isfinite(v):
            return nan
        td = self.target.derivs(theta, self.t)
        J = np.zeros((self.model.p, q))
        J[self.free, np.arange(q)] = 1.0
        J[self.k] = -td.grad[self.free] / self.coef
        grad = J.T @ g
        hess = J.T @ H @ J - g[self.k] * td.hess[np.ix_(self.free, self.free)] / self.coef
        return v, grad, hess

    def start(self):
        return self.restrict(self.model.start())

    def repair_step(self, lam):
        return self.restrict(self.model.repair_step(self.embed(lam)))


def naive_profile_value(model, target, value, init=None, t=None):
    """Profile log-likelihood at ``eta = value``.

    Returns ``(profile, lam_hat, converged)``; ``lam_hat`` are the free
    coordinates of the slice maximiser (use ``SliceModel.embed`` for theta).
    A non-converged inner maximisation is flagged, not raised.
    """
    sl = SliceModel(model, target, value, t)
    lam0 = sl.start() if init is None else np.asarray(init, dtype=float)
    lam0 = sl.repair(lam0)
    if not sl.in_domain(lam0):
        return -np.inf, lam0, False
    if sl.p == 0:
        return float(sl.loglik(lam0)), lam0, True
    fit, _ = maximise(sl, lam0)
    return fit.loglik_max, fit.theta_hat, fit.converged


@dataclass
class NaiveBound:
    value: float
    theta: np.ndarray
    residual: float
    evaluations: int
    unconverged: int

    @property
    def converged(self):
        return self.unconverged == 0 and abs(self.residual) <= RESIDUAL_TOL


def _wald_halfwidth(fit, grad_eta, delta):
    v = np.linalg.solve(fit.neg_hessian, grad_eta)
    return float(np.sqrt(2.0 * delta * max(grad_eta @ v, 0.0)))


def naive_bound_detail(model, fit, target, delta, side, t=None):
    """Naive bound with diagnostics; see ``naive_bound``."""
    if side not in ("lower", "upper"):
        raise ValueError("side must be 'lower' or 'upper'")
    direction = 1.0 if side == "upper" else -1.0
    td = target.derivs(fit.theta_hat, t)
    psi_hat = td.value
    level = fit.loglik_max - delta
    step = _wald_halfwidth(fit, td.grad, delta)
    if not step > 0:
        step = 1e-3 * (1.0 + abs(psi_hat))
    probe = SliceModel(model, target, psi_hat, t)
    solved = {psi_hat: probe.restrict(fit.theta_hat)}
    stats = {"evals": 0, "unconverged": 0}

    def f(psi):
        nearest = min(solved, key=lambda q: abs(q - psi))
        prof, lam, conv = naive_profile_value(model, target, psi, solved[nearest], t)
        stats["evals"] += 1
        if not conv:
            stats["unconverged"] += 1
        if np.isfinite(prof):
            solved[psi] = lam
        return prof - level

    inner = psi_hat
    outer = None
    for j in range(MAX_DOUBLINGS + 1):
        cand = psi_hat + direction * step * 2.0**j
        fc = f(cand)
        if np.isfinite(fc) and fc > 0:
            inner = cand
            continue
        # -inf means the slice is empty there; shrink toward the feasible side
        for _ in range(60):
            if np.isfinite(fc):
                break
            cand = 0.5 * (inner + cand)
            fc = f(cand)
        if np.isfinite(fc) and fc > 0:
            inner = cand
            continue
        outer = cand
        break
    if outer is None:
        raise UnboundedError(
            f"profile stays above the threshold up to {psi_hat + direction * step * 2**MAX_DOUBLINGS:.6g}"
            " (practically non-identifiable)")
    a, b = sorted((inner, outer))
    xtol = 1e-14 * (1.0 + abs(psi_hat) + step)
    root = brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    resid = f(root)
    nearest = min(solved, key=lambda q: abs(q - root))
    theta = SliceModel(model, target, root, t).embed(solved[nearest])
    return NaiveBound(float(root), theta, float(resid), stats["evals"], stats["unconverged"])


def naive_bound(model, fit, target, delta, side, t=None):
    """Lower or upper profile bound by nested maximisation and Brent's method.

    The root of ``profile(psi) - (loglik_max - delta)`` is bracketed by steps
    doubling from the Wald half-width, at most ``2**10`` times; beyond that the
    profile is declared unbounded. Raises ConvergenceError when an inner
    maximisation failed or the root does not meet the threshold equation;
    ``naive_bound_detail`` returns the value with diagnostics instead.
    """
    nb = naive_bound_detail(model, fit, target, delta, side, t)
    if not nb.converged:
        raise ConvergenceError(
            f"naive {side} bound unreliable: {nb.unconverged} inner fits failed, "
            f"threshold residual {nb.residual:.3e}")
    return nb.value


@dataclass
class ProfileCurve:
    psi: np.ndarray
    profile: np.ndarray
    converged: np.ndarray


def profile_curve(model, fit, target, grid, t=None):
    """Profile log-likelihood on ``grid``, warm-started outward from the estimate."""
    grid = np.asarray(grid, dtype=float)
    psi_hat = target.derivs(fit.theta_hat, t).value
    lam_hat = SliceModel(model, target, psi_hat, t).restrict(fit.theta_hat)
    prof = np.full(grid.size, -np.inf)
    conv = np.zeros(grid.size, dtype=bool)
    order = np.argsort(grid)
    above = [i for i in order if grid[i] >= psi_hat]
    below = [i for i in order[::-1] if grid[i] < psi_hat]
    for seq in (above, below):
        lam = lam_hat
        for i in seq:
            prof[i], new, conv[i] = naive_profile_value(model, target, grid[i], lam, t)
            if np.isfinite(prof[i]):
                lam = new
    return ProfileCurve(grid, prof, conv)


def linreg_interval(spec: LinearGaussianSpec, x_new, alpha=0.05):
    """Closed-form profile interval for the regression mean ``x_new' theta``.

    Returns ``(lower, upper, s_mu)`` with ``s_mu`` the usual standard error of
    the fitted mean; in profiled mode the variance is its ML estimate ``RSS/n``.
    """
    model = build_linear_gaussian(spec)
    X, y = model.X, model.y
    x_new = np.asarray(x_new, dtype=float)
    if x_new.shape != (X.shape[1],):
        raise DomainError("x_new must have one entry per design column")
    theta = solve_least_squares(X, y)
    if spec.variance is not None:
        s2 = float(spec.variance)
    else:
        r = y - X @ theta
        s2 = float(r @ r) / y.size
    R = np.linalg.qr(X, mode="r")
    w = np.linalg.solve(R.T, x_new)
    s_mu = float(np.sqrt(s2) * np.linalg.norm(w))
    delta = deviance_threshold(1.0 - alpha, 1)
    eta = float(x_new @ theta)
    half = s_mu * np.sqrt(2.0 * delta)
    return eta - half, eta + half, s_mu
