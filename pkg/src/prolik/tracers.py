"""ODE tracers for profile-likelihood bounds, bands and contours.

Three fields are provided, all derived by differentiating the first-order
conditions ``grad eta = nu * grad loglik`` and ``loglik = level``:

* the band field moves a bound-attaining point along a fixed likelihood
  contour as the target's extra variable (log return period) changes;
* the contour field moves along a fixed contour while the direction ``a(t)``
  of a linear combination of two interest coordinates turns;
* the bubble field follows the bound-attaining point as the deviance level
  itself grows from nearly zero.

The multiplier ``nu`` follows the sign convention of the first-order
condition above: negative at upper bounds, positive at lower bounds.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import gev
from .errors import (CurvatureError, FieldError, ProlikError, SingularSystemError)
from .numerics import chisq_quantile, solve_least_squares, solve_square
from .odesolve import OdePath, VectorField, integrate
from .optimizer import ProfileBound, _polish, profile_bound
from .targets import CoordinateTarget, LinearTarget

log = logging.getLogger(__name__)

RTOL = 1e-8
ATOL = 1e-10


@dataclass
class AugmentedState:
    theta: np.ndarray
    nu: float

    def pack(self):
        return np.concatenate([self.theta, [self.nu]])

    @classmethod
    def unpack(cls, y):
        return cls(np.asarray(y[:-1], dtype=float), float(y[-1]))


def _ls_nu(g, h):
    gg = float(g @ g)
    return float(g @ h) / gg if gg > 0 else 0.0


def _project_theta(model, theta, level, steps=1):
    """Newton correction(s) along grad loglik restoring ``loglik = level``."""
    for _ in range(steps):
        v, g, _ = model.evaluate(theta)
        gg = float(g @ g)
        if not np.isfinite(v) or gg == 0.0:
            raise FieldError("projection left the model domain")
        theta = theta - (v - level) * g / gg
    return theta


def _saddle_solve(model, target, theta, nu, t, rhs_bottom):
    """Solve the bordered system shared by the band and bubble fields."""
    v, g, H = model.evaluate(theta)
    if not np.isfinite(v):
        raise FieldError("state left the model domain")
    td = target.derivs(theta, t)
    p = theta.size
    M = np.zeros((p + 1, p + 1))
    M[:p, :p] = -td.hess + nu * H
    M[:p, p] = g
    M[p, :p] = g
    rhs = np.zeros(p + 1)
    if rhs_bottom is None:
        rhs[:p] = td.cross
    else:
        rhs[p] = rhs_bottom
    try:
        sol = solve_square(M, rhs)
    except SingularSystemError as exc:
        raise FieldError(f"singular saddle matrix: {exc}") from exc
    return sol[:p], float(sol[p])


# --------------------------------------------------------------------------- band


def band_field(model, target, state, s):
    """Derivative of ``(theta, nu)`` with respect to the target's extra variable."""
    return _saddle_solve(model, target, np.asarray(state.theta, float), state.nu, s, None)


def band_field_gev_eliminated(model, s, theta):
    """Band field for an iid GEV return level with the multiplier eliminated.

    Uses ``r_sigma = dl/dsigma / dl/dmu`` and ``r_xi = dl/dxi / dl/dmu``; rows are
    the time derivatives of ``d eta/d sigma = r_sigma``, ``d eta/d xi = r_xi`` and
    the tangency condition.
    """
    theta = np.asarray(theta, dtype=float)
    v, g, H = model.evaluate(theta)
    if not np.isfinite(v):
        raise FieldError("state left the model domain")
    if g[0] == 0.0 or not np.isfinite(g[0]):
        raise SingularSystemError("d loglik / d mu vanishes; cannot eliminate the multiplier",
                                  pivot=0.0)
    rl = gev.rl_derivs(s, theta)
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for row, k in enumerate((1, 2)):
        dr = (H[k] * g[0] - g[k] * H[0]) / g[0] ** 2
        A[row] = rl.hess[k] - dr
        b[row] = -rl.cross[k]
    A[2] = g
    return solve_square(A, b)


def gev_elimination_ratios(model, theta):
    g = model.grad(theta)
    return g[1] / g[0], g[2] / g[0]


@dataclass
class BandResult:
    side: str
    s: np.ndarray
    eta: np.ndarray
    theta: np.ndarray
    nu: np.ndarray
    constraint_residual: np.ndarray
    status: str
    halt_reason: str
    path: Optional[OdePath]
    initial: ProfileBound

    @property
    def periods(self):
        return np.exp(self.s)


def _band_vector_field(model, target, level, project):
    p = model.p

    def f(s, y):
        th, nu = band_field(model, target, AugmentedState.unpack(y), s)
        return np.concatenate([th, [nu]])

    def proj(s, y):
        theta = _project_theta(model, y[:p], level)
        g = model.grad(theta)
        nu = _ls_nu(g, target.derivs(theta, s).grad)
        return np.concatenate([theta, [nu]])

    def resid(s, y):
        return abs(model.loglik(y[:p]) - level)

    return VectorField(p + 1, f, proj if project else None, resid)


def trace_band(model, target, fit, delta, side, s_grid, rtol=RTOL, atol=ATOL, project=True,
               initial=None):
    """Upper or lower confidence band of a time-dependent target over ``s_grid``.

    The starting point comes from ``profile_bound`` at the first grid value;
    the band ODE is then integrated across the grid, with each accepted state
    projected back onto the contour when ``project`` is set.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if s_grid.ndim != 1 or s_grid.size < 1 or np.any(np.diff(s_grid) <= 0):
        raise ValueError("s_grid must be strictly increasing")
    level = fit.loglik_max - delta
    p = model.p
    if initial is None:
        initial = profile_bound(model, target, fit, delta, side, t=s_grid[0])
    y0 = np.concatenate([initial.theta, [initial.nu]])
    n = s_grid.size
    thetas = np.full((n, p), np.nan)
    nus = np.full(n, np.nan)
    etas = np.full(n, np.nan)
    res = np.full(n, np.nan)
    path = None
    status, reason = "ok", ""
    if n == 1:
        states = y0[None, :]
        covered = 1
    else:
        vf = _band_vector_field(model, target, level, project)
        try:
            path = integrate(vf, s_grid[0], s_grid[-1], y0, rtol=rtol, atol=atol,
                             keep_raw=not project)
        except ProlikError as exc:
            path = getattr(exc, "path", None)
            status, reason = "halted", str(exc)
        if path is not None and path.status != "ok":
            status, reason = "halted", path.halt_reason
        t_end = path.times[-1] if path is not None else s_grid[0]
        covered = int(np.searchsorted(s_grid, t_end + 1e-12, side="right"))
        states = path.sample(s_grid[:covered]) if path is not None and covered else y0[None, :]
    for i in range(covered):
        theta = states[i, :p]
        v, g, _ = model.evaluate(theta)
        if project and np.isfinite(v) and abs(v - level) > 1e-12 * (1.0 + abs(level)):
            gg = float(g @ g)
            theta = theta - (v - level) * g / gg
            v, g, _ = model.evaluate(theta)
        td = target.derivs(theta, s_grid[i])
        thetas[i] = theta
        nus[i] = _ls_nu(g, td.grad) if project else states[i, p]
        etas[i] = td.value
        res[i] = abs(v - level)
    return BandResult(side, s_grid, etas, thetas, nus, res, status, reason, path, initial)


def trace_band_pointwise(model, target, fit, delta, side, s_grid):
    """Band by one constrained optimisation per grid value, warm-started."""
    s_grid = np.asarray(s_grid, dtype=float)
    p = model.p
    out = BandResult(side, s_grid, np.full(s_grid.size, np.nan), np.full((s_grid.size, p), np.nan),
                     np.full(s_grid.size, np.nan), np.full(s_grid.size, np.nan), "ok", "", None,
                     None)
    init = None
    for i, s in enumerate(s_grid):
        try:
            b = profile_bound(model, target, fit, delta, side, t=s, init=init)
        except ProlikError:
            b = profile_bound(model, target, fit, delta, side, t=s)
        if out.initial is None:
            out.initial = b
        init = b.theta
        out.eta[i], out.theta[i], out.nu[i] = b.value, b.theta, b.nu
        out.constraint_residual[i] = b.constraint_residual
    return out


# ------------------------------------------------------------------------ contour


@dataclass
class DirectionFamily:
    a: Callable
    a_dot: Callable
    d: int = 2

    @classmethod
    def circle(cls):
        return cls(lambda t: np.array([np.cos(t), np.sin(t)]),
                   lambda t: np.array([-np.sin(t), np.cos(t)]))


@dataclass
class ContourPoint:
    t: float
    psi: np.ndarray
    theta: np.ndarray
    branch: str
    foc_residual: float = 0.0
    constraint_residual: float = 0.0


def _branch_sign(branch):
    if branch not in ("plus", "minus"):
        raise ValueError("branch must be 'plus' or 'minus'")
    return 1.0 if branch == "plus" else -1.0


def contour_field(model, family, interest, branch, theta, t, return_residual=False):
    """Derivative of theta along the profile contour for direction ``a(t)``.

    Solves ``[B; z'] theta_dot = [a_dot embedded; 0]`` by least squares with
    ``B = -+ u^{-1/2} (I - z z'/z'z) H``; the system is consistent, so the
    residual is reported as an exactness check.
    """
    theta = np.asarray(theta, dtype=float)
    v, z, hess = model.evaluate(theta)
    if not np.isfinite(v):
        raise FieldError("state left the model domain")
    u = float(z @ z)
    if u == 0.0:
        raise FieldError("score vanishes; the state is at the maximum")
    p = theta.size
    H = -hess
    P = np.eye(p) - np.outer(z, z) / u
    B = -_branch_sign(branch) * P @ H / np.sqrt(u)
    A = np.vstack([B, z[None, :]])
    rhs = np.zeros(p + 1)
    rhs[list(interest)] = family.a_dot(t)
    try:
        sol = solve_least_squares(A, rhs)
    except ProlikError as exc:
        raise FieldError(f"contour system is rank deficient: {exc}") from exc
    resid = float(np.linalg.norm(A @ sol - rhs))
    return (sol, resid) if return_residual else sol


def foc_residual(model, family, interest, branch, theta, t):
    z = model.grad(theta)
    target = np.zeros(theta.size)
    target[list(interest)] = family.a(t)
    return float(np.linalg.norm(target - _branch_sign(branch) * z / np.linalg.norm(z)))


@dataclass
class ContourResult:
    points: list
    branches: dict
    delta: float
    overlap_discrepancy: float
    merge_gap: bool
    interest: tuple
    warnings: list = field(default_factory=list)

    @property
    def psi(self):
        return np.array([pt.psi for pt in self.points])

    @property
    def theta(self):
        return np.array([pt.theta for pt in self.points])


def _polish_contour_point(model, family, interest, branch, theta, t, level, tol_c):
    """Newton on the first-order system of ``a(t)' psi`` restricted to the contour."""
    w = np.zeros(model.p)
    w[list(interest)] = family.a(t)
    z = model.grad(theta)
    nu = _branch_sign(branch) / float(np.linalg.norm(z))
    theta, _ = _polish(model, LinearTarget(w), theta, nu, None, level, tol_c)
    return theta


def _trace_branch(model, family, interest, branch, theta0, level, t_grid, rtol, atol, project):
    p = model.p

    def f(t, y):
        return contour_field(model, family, interest, branch, y, t)

    def proj(t, y):
        return _project_theta(model, y, level)

    def resid(t, y):
        return abs(model.loglik(y) - level)

    vf = VectorField(p, f, proj if project else None, resid)
    status, reason = "ok", ""
    try:
        path = integrate(vf, t_grid[0], t_grid[-1], theta0, rtol=rtol, atol=atol)
    except ProlikError as exc:
        path = getattr(exc, "path", None)
        status, reason = "halted", str(exc)
    if path is None:
        return [], None, status, reason
    if path.status != "ok":
        status, reason = "halted", path.halt_reason
    covered = int(np.searchsorted(t_grid, path.times[-1] + 1e-12, side="right"))
    points = []
    if covered:
        states = path.sample(t_grid[:covered])
        tol_c = 1e-8 * (1.0 + abs(level))
        for t, theta in zip(t_grid[:covered], states):
            if project:
                theta = _project_theta(model, theta, level, steps=2)
                theta = _polish_contour_point(model, family, interest, branch, theta, t, level,
                                              tol_c)
            points.append(ContourPoint(float(t), theta[list(interest)].copy(), theta, branch,
                                       foc_residual(model, family, interest, branch, theta, t),
                                       abs(model.loglik(theta) - level)))
    return points, path, status, reason


def trace_contour(model, fit, pair, level=0.95, n_points=256, rtol=RTOL, atol=ATOL,
                  project=True, family=None, merge_tol=1e-4, jobs=1):
    """Closed profile-likelihood contour for two interest coordinates.

    Both sign branches are integrated over ``t`` in ``[0, 2 pi]``. The minus
    branch at ``t`` and the plus branch at ``t - pi`` share the outward normal
    ``a(t)``; merged points are ordered by that normal's angle and, where both
    branches cover it, the one with the smaller first-order residual wins.
    """
    i, j = pair
    if i == j:
        raise ValueError("interest indices must differ")
    if model.p < 2:
        raise ValueError("contours need at least two parameters")
    if n_points % 2:
        raise ValueError("n_points must be even so the two branches share angles")
    family = family or DirectionFamily.circle()
    interest = (i, j)
    delta = 0.5 * chisq_quantile(level, 2)
    lev = fit.loglik_max - delta
    t_grid = np.linspace(0.0, 2.0 * np.pi, n_points + 1)
    first = CoordinateTarget(i, model.p)
    starts = {"minus": profile_bound(model, first, fit, delta, "upper").theta,
              "plus": profile_bound(model, first, fit, delta, "lower").theta}
    branches = {}
    by_angle = {}

    def run(branch):
        return _trace_branch(model, family, interest, branch, starts[branch], lev, t_grid, rtol,
                             atol, project)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            traced = dict(zip(starts, pool.map(run, list(starts))))
    else:
        traced = {b: run(b) for b in starts}
    for branch in starts:
        pts, path, status, reason = traced[branch]
        branches[branch] = {"points": pts, "path": path, "status": status, "reason": reason}
        shift = 0 if branch == "minus" else n_points // 2
        for k, pt in enumerate(pts[:n_points]):
            by_angle.setdefault((k + shift) % n_points, {})[branch] = pt
    merged = []
    overlap = 0.0
    for k in range(n_points):
        cands = by_angle.get(k, {})
        if not cands:
            continue
        if len(cands) == 2:
            overlap = max(overlap, float(np.linalg.norm(cands["plus"].psi - cands["minus"].psi)))
        merged.append(min(cands.values(), key=lambda pt: pt.foc_residual))
    warnings = []
    gap = len(merged) < n_points
    if gap:
        warnings.append(f"{n_points - len(merged)} directions not covered by either branch")
    if overlap > merge_tol:
        warnings.append(f"branches disagree by {overlap:.2e} on their overlap")
    for b in branches.values():
        if b["status"] != "ok":
            warnings.append(f"branch halted: {b['reason']}")
    return ContourResult(merged, branches, delta, overlap, gap or overlap > merge_tol,
                         interest, warnings)


# ------------------------------------------------------------------------- bubble


def bubble_init(fit, h0, delta1, sign):
    """First-order state at the small level ``delta1``.

    With ``nu_tilde = sign * sqrt(h0' H0^{-1} h0) / sqrt(2 delta1)`` the point is
    ``theta_hat + H0^{-1} h0 / nu_tilde``; ``sign=+1`` heads for the upper bound.
    The returned multiplier is ``-nu_tilde`` so that it obeys
    ``grad eta = nu * grad loglik``.
    """
    if sign not in (1, -1, "+", "-"):
        raise ValueError("sign must be +1 or -1")
    sign = 1.0 if sign in (1, "+") else -1.0
    if not delta1 > 0:
        raise ValueError("delta1 must be positive")
    H0 = fit.neg_hessian
    try:
        np.linalg.cholesky(0.5 * (H0 + H0.T))
    except np.linalg.LinAlgError as exc:
        raise CurvatureError("negative Hessian at the MLE is not positive definite") from exc
    h0 = np.asarray(h0, dtype=float)
    v = solve_square(H0, h0)
    q = float(h0 @ v)
    nu_t = sign * np.sqrt(q) / np.sqrt(2.0 * delta1)
    return AugmentedState(fit.theta_hat + v / nu_t, -nu_t)


def bubble_field(model, target, state, t):
    """Derivative of ``(theta, nu)`` with respect to the deviance level."""
    return _saddle_solve(model, target, np.asarray(state.theta, float), state.nu, None, -1.0)


def bubble_vector_field(model, target, fit, project=True):
    p = model.p
    lmax = fit.loglik_max

    def f(t, y):
        th, nu = bubble_field(model, target, AugmentedState.unpack(y), t)
        return np.concatenate([th, [nu]])

    def proj(t, y):
        theta = _project_theta(model, y[:p], lmax - t)
        nu = _ls_nu(model.grad(theta), target.derivs(theta).grad)
        return np.concatenate([theta, [nu]])

    def resid(t, y):
        return abs(model.loglik(y[:p]) - (lmax - t))

    return VectorField(p + 1, f, proj if project else None, resid)


@dataclass
class BubbleResult:
    path: OdePath
    bound: Optional[ProfileBound]
    status: str
    init: AugmentedState
    start: AugmentedState
    delta1: float
    delta_target: float
    level_consumption: float

    @property
    def nu(self):
        return self.path.states[:, -1]


def trace_bubble(model, target, fit, delta_target, sign, delta1=None, rtol=RTOL, atol=ATOL,
                 project=True, refine_init=True):
    """Follow the bound-attaining point while the level grows to ``delta_target``.

    ``sign=+1`` gives the upper bound. The closed-form start is refined by a
    few Newton steps on the first-order system at level ``delta1`` unless
    ``refine_init`` is false. Returns ``status='level_not_reached'`` when the
    path stops early (e.g. a disconnected high-likelihood region).
    """
    if delta1 is None:
        delta1 = delta_target / 100.0
    if not 0 < delta1 < delta_target:
        raise ValueError("need 0 < delta1 < delta_target")
    h0 = target.derivs(fit.theta_hat).grad
    init = bubble_init(fit, h0, delta1, sign)
    start = init
    if refine_init:
        level1 = fit.loglik_max - delta1
        tol_c = 1e-8 * (1.0 + abs(fit.loglik_max))
        theta = init.theta
        if not model.in_domain(theta):
            raise FieldError("closed-form bubble start is outside the model domain")
        theta, nu = _polish(model, target, theta, init.nu, None, level1, tol_c)
        start = AugmentedState(theta, nu)
    vf = bubble_vector_field(model, target, fit, project)
    status = "ok"
    try:
        path = integrate(vf, delta1, delta_target, start.pack(), rtol=rtol, atol=atol,
                         keep_raw=not project)
    except ProlikError as exc:
        path = getattr(exc, "path", None)
        status = "level_not_reached"
        if path is None:
            return BubbleResult(None, None, status, init, start, delta1, delta_target, np.nan)
    if path.status != "ok" or abs(path.times[-1] - delta_target) > 1e-9 * delta_target:
        status = "level_not_reached"
    p = model.p
    consumption = 0.0
    for theta, dy in zip(path.states, path.derivs):
        g = model.grad(theta[:p])
        consumption = max(consumption, abs(float(g @ dy[:p]) + 1.0))
    bound = None
    if status == "ok":
        theta = path.final[:p]
        level = fit.loglik_max - delta_target
        v, g, _ = model.evaluate(theta)
        td = target.derivs(theta)
        nu = _ls_nu(g, td.grad)
        kkt = float(np.linalg.norm(td.grad - nu * g))
        cres = abs(v - level)
        ok = cres <= 1e-6 * (1.0 + abs(fit.loglik_max)) and kkt <= 1e-6 * (1 + np.linalg.norm(td.grad))
        bound = ProfileBound("upper" if sign in (1, "+") else "lower", float(td.value), theta,
                             nu, kkt, cres, ok, len(path.times), "bubble")
    return BubbleResult(path, bound, status, init, start, delta1, delta_target, consumption)
