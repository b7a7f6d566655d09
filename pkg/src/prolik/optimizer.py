"""Maximum-likelihood fitting and constrained bound solving.

A profile-likelihood bound on a scalar target eta is the extreme value of eta
over the likelihood contour ``loglik(theta) = loglik_max - delta``. It is found
here by an augmented-Lagrangian iteration on that single equality constraint,
followed by a few Newton steps on the first-order (KKT) system
``grad eta = nu * grad loglik``, ``loglik = loglik_max - delta``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, SingularSystemError, UnboundedError
from .numerics import norm_quantile, solve_square

log = logging.getLogger(__name__)

TOL_KKT = 1e-6
MAX_OUTER = 200


@dataclass
class MleFit:
    theta_hat: np.ndarray
    loglik_max: float
    hessian_at_max: np.ndarray
    iterations: int
    converged: bool
    grad_norm: float = 0.0

    @property
    def neg_hessian(self):
        return -self.hessian_at_max


@dataclass
class ProfileBound:
    side: str
    value: float
    theta: np.ndarray
    nu: float
    kkt_residual: float
    constraint_residual: float
    converged: bool
    iterations: int = 0
    method: str = "optim"
    diagnostics: dict = field(default_factory=dict)


def _descent_direction(g, H, B_inv):
    """Ascent direction for a concave-ish objective: Newton when -H is PD,
    otherwise the BFGS approximation."""
    try:
        L = np.linalg.cholesky(-H)
        d = np.linalg.solve(L.T, np.linalg.solve(L, g))
        return d, "newton"
    except np.linalg.LinAlgError:
        d = B_inv @ g
        if not g @ d > 0:
            d = g.copy()
        return d, "bfgs"


def maximise(model, init=None, max_iter=200, gtol=1e-9):
    """Line-searched Newton with a BFGS fallback; never raises on non-convergence.

    Steps leaving the model domain (e.g. GEV ``xi <= -1`` or observations
    outside the support) are rejected by the line search. Returns
    ``(fit, trace)`` where ``fit.converged`` records the outcome.
    """
    if init is None:
        theta = np.asarray(model.start(), dtype=float)
    else:
        theta = np.array(init, dtype=float)
        if not model.in_domain(theta):
            raise DomainError("initial value outside the model domain")
    if not model.in_domain(theta):
        raise DomainError("could not find an interior starting point")
    p = model.p
    B_inv = np.eye(p)
    trace = []
    value, g, H = model.evaluate(theta)
    it = 0
    stalls = 0
    for it in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        trace.append((it, value, gnorm))
        if gnorm <= gtol * (1.0 + abs(value)):
            break
        d, kind = _descent_direction(g, H, B_inv)
        slope = float(g @ d)
        step = 1.0
        accepted = False
        while step > 1e-14:
            cand = theta + step * d
            v_new, g_new, H_new = model.evaluate(cand)
            if np.isfinite(v_new) and v_new >= value + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        s = cand - theta
        yk = g - g_new
        sy = float(s @ yk)
        if sy > 1e-14:
            rho = 1.0 / sy
            I = np.eye(p)
            B_inv = (I - rho * np.outer(s, yk)) @ B_inv @ (I - rho * np.outer(yk, s)) \
                + rho * np.outer(s, s)
        stalled = v_new <= value
        theta, value, g, H = cand, v_new, g_new, H_new
        if stalled:
            stalls += 1
            if stalls >= 3:
                break  # rounding floor: no further increase is representable
        else:
            stalls = 0
    gnorm = float(np.linalg.norm(g))
    neg_def = bool(np.all(np.linalg.eigvalsh(-0.5 * (H + H.T)) > 0))
    converged = gnorm <= 1e-6 * (1.0 + abs(value)) and neg_def
    return MleFit(theta, float(value), H, it, converged, gnorm), trace


def fit_mle(model, init=None, max_iter=200, gtol=1e-9):
    """Maximum-likelihood fit; raises ConvergenceError unless the gradient is
    small and the Hessian negative definite at the returned point."""
    fit, trace = maximise(model, init, max_iter, gtol)
    if not fit.converged:
        neg_def = bool(np.all(np.linalg.eigvalsh(-0.5 * (fit.hessian_at_max + fit.hessian_at_max.T)) > 0))
        raise ConvergenceError(
            f"MLE did not converge after {fit.iterations} iterations "
            f"(|grad| = {fit.grad_norm:.3e}, negative definite Hessian: {neg_def})", trace=trace)
    return fit


def _shifted_inverse_solve(A, b):
    """Solve with A symmetrised and its spectrum clipped to be positive."""
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    floor = 1e-10 * max(1.0, float(np.max(np.abs(w))))
    w = np.maximum(np.abs(w), floor)
    return V @ ((V.T @ b) / w)


def bubble_point(fit, h0, delta1, sign):
    """First-order approximation of the bound-attaining point at level delta1.

    Returns ``(theta, nu_tilde)`` with the positive-sign convention
    ``theta = theta_hat + H0^{-1} h0 / nu_tilde``.
    """
    H0 = fit.neg_hessian
    v = solve_square(H0, h0)
    q = float(h0 @ v)
    if not q > 0:
        raise SingularSystemError("target gradient is degenerate at the MLE", pivot=q)
    nu_t = sign * np.sqrt(q) / np.sqrt(2.0 * delta1)
    return fit.theta_hat + v / nu_t, nu_t


def _initial_point(model, target, fit, delta, sgn_up, t):
    h0 = target.derivs(fit.theta_hat, t).grad
    try:
        theta, _ = bubble_point(fit, h0, delta / 4.0, sgn_up)
        if model.in_domain(theta):
            return theta
        v = theta - fit.theta_hat
    except (SingularSystemError, np.linalg.LinAlgError):
        v = sgn_up * h0
    step = 1.0
    for _ in range(60):
        step *= 0.5
        theta = fit.theta_hat + step * v
        if model.in_domain(theta):
            return theta
    return fit.theta_hat.copy()


def _kkt_state(model, target, theta, t, level):
    v, g, H = model.evaluate(theta)
    td = target.derivs(theta, t)
    gg = float(g @ g)
    nu = float(g @ td.grad) / gg if gg > 0 else 0.0
    kkt = float(np.linalg.norm(td.grad - nu * g))
    return v, g, H, td, nu, kkt, v - level


def _polish(model, target, theta, nu, t, level, tol_c, max_iter=25):
    """Newton iterations on the KKT system; returns the improved (theta, nu)."""
    p = model.p
    best = None
    for _ in range(max_iter):
        v, g, H = model.evaluate(theta)
        td = target.derivs(theta, t)
        F = np.concatenate([td.grad - nu * g, [v - level]])
        norm_f = float(np.linalg.norm(F))
        if best is None or norm_f < best[0]:
            best = (norm_f, theta.copy(), nu)
        if abs(F[-1]) <= 0.01 * tol_c and np.linalg.norm(F[:-1]) <= 1e-12 * (1 + np.linalg.norm(td.grad)):
            break
        J = np.zeros((p + 1, p + 1))
        J[:p, :p] = td.hess - nu * H
        J[:p, p] = -g
        J[p, :p] = g
        try:
            step = solve_square(J, -F)
        except SingularSystemError:
            break
        lam = 1.0
        improved = False
        while lam > 1e-6:
            cand = theta + lam * step[:p]
            cnu = nu + lam * step[p]
            cv, cg, _ = model.evaluate(cand)
            if np.isfinite(cv):
                ctd = target.derivs(cand, t)
                cF = np.concatenate([ctd.grad - cnu * cg, [cv - level]])
                if np.linalg.norm(cF) < norm_f:
                    theta, nu = cand, cnu
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            break
    return best[1], best[2]


def profile_bound(model, target, fit, delta, side, t=None, init=None,
                  tol_kkt=TOL_KKT, max_outer=MAX_OUTER):
    """Maximise (``side='upper'``) or minimise (``'lower'``) the target subject to
    ``loglik(theta) = loglik_max - delta``.

    Raises ConvergenceError when the tolerances are not met and UnboundedError
    when the target runs off to infinity on the feasible set.
    """
    if side not in ("lower", "upper"):
        raise DomainError(f"side must be 'lower' or 'upper', got {side!r}")
    if not delta > 0:
        raise DomainError("delta must be positive")
    if not fit.converged:
        raise DomainError("profile bounds need a converged fit")
    sgn_up = 1.0 if side == "upper" else -1.0
    sgn_f = -sgn_up  # objective f = sgn_f * eta is minimised
    level = fit.loglik_max - delta
    tol_c = 1e-8 * (1.0 + abs(fit.loglik_max))
    eta_hat = target.value(fit.theta_hat, t)
    theta = np.array(init, dtype=float) if init is not None else \
        _initial_point(model, target, fit, delta, sgn_up, t)
    if not model.in_domain(theta):
        raise DomainError("initial point for the bound is outside the model domain")
    scale = 1.0 + float(np.linalg.norm(fit.theta_hat))

    v, g, H, td, nu, kkt, c = _kkt_state(model, target, theta, t, level)
    gg = float(g @ g)
    lam = sgn_f * nu if gg > 0 else 0.0
    rho = 10.0 * max(abs(lam), 1.0) / max(delta, 1e-8)
    c_prev = abs(c)
    trace = []
    outer = 0
    for outer in range(1, max_outer + 1):
        # inner minimisation of the augmented Lagrangian
        def phi(vv, tdv):
            cc = vv - level
            return sgn_f * tdv.value - lam * cc + 0.5 * rho * cc * cc

        cur = phi(v, td)
        omega = max(1e-10, 1e-3 / outer**2)
        for _ in range(100):
            cc = v - level
            gphi = sgn_f * td.grad - (lam - rho * cc) * g
            if np.linalg.norm(gphi) <= omega * (1.0 + np.linalg.norm(td.grad)):
                break
            Hphi = sgn_f * td.hess - (lam - rho * cc) * H + rho * np.outer(g, g)
            d = -_shifted_inverse_solve(Hphi, gphi)
            slope = float(gphi @ d)
            if not slope < 0:
                d = -gphi
                slope = -float(gphi @ gphi)
            step = 1.0
            accepted = False
            while step > 1e-12:
                cand = theta + step * d
                cv, cg, cH = model.evaluate(cand)
                if np.isfinite(cv):
                    ctd = target.derivs(cand, t)
                    new = phi(cv, ctd)
                    if np.isfinite(new) and new <= cur + 1e-4 * step * slope:
                        accepted = True
                        break
                step *= 0.5
            if not accepted:
                break
            theta, v, g, H, td, cur = cand, cv, cg, cH, ctd, new
            if np.linalg.norm(theta - fit.theta_hat) > 1e8 * scale or not np.isfinite(td.value):
                raise UnboundedError("target is unbounded on the feasible set")
        c = v - level
        gg = float(g @ g)
        nu = float(g @ td.grad) / gg if gg > 0 else 0.0
        kkt = float(np.linalg.norm(td.grad - nu * g))
        trace.append((outer, float(td.value), float(c), kkt, rho))
        if abs(c) <= tol_c and kkt <= tol_kkt * (1.0 + np.linalg.norm(td.grad)):
            break
        if abs(c) <= 1e-4 * (1.0 + abs(fit.loglik_max)) and kkt <= 1e-3 * (1.0 + np.linalg.norm(td.grad)):
            # close enough for Newton on the KKT system
            break
        lam = lam - rho * c
        if abs(c) > 0.25 * c_prev:
            rho *= 10.0
        c_prev = abs(c)
        if rho > 1e16:
            break

    theta, nu = _polish(model, target, theta, nu, t, level, tol_c)
    v, g, H, td, nu, kkt, c = _kkt_state(model, target, theta, t, level)
    value = float(td.value)
    ok = (abs(c) <= tol_c and kkt <= tol_kkt * (1.0 + np.linalg.norm(td.grad))
          and sgn_up * (value - eta_hat) >= -1e-12 * (1.0 + abs(eta_hat)))
    bound = ProfileBound(side, value, theta, nu, kkt, abs(c), ok, outer, "optim",
                         {"trace": trace})
    if not ok:
        raise ConvergenceError(
            f"{side} bound did not converge (constraint residual {abs(c):.2e}, "
            f"KKT residual {kkt:.2e})", trace=trace)
    return bound


def delta_interval(model, target, fit, level=0.95, t=None):
    """Wald interval from the curvature at the MLE (baseline comparison)."""
    h = target.derivs(fit.theta_hat, t).grad
    var = float(h @ solve_square(fit.neg_hessian, h))
    z = norm_quantile(0.5 * (1.0 + level))
    est = target.value(fit.theta_hat, t)
    half = z * np.sqrt(var)
    return est - half, est + half
