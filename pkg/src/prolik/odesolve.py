"""Adaptive Dormand-Prince 5(4) integration with post-step projection.

Written in-house rather than wrapping ``scipy.integrate.solve_ivp`` because the
tracers need to project every accepted state back onto a constraint manifold,
and to halt cleanly (keeping the partial path) when the field cannot be
evaluated.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import FieldError, ProlikError, StiffnessError

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

MAX_STEPS = 100_000
SAFETY = 0.9
# PI controller exponents (Hairer & Wanner, order-5 method)
_ALPHA = 0.7 / 5.0
_BETA = 0.4 / 5.0


@dataclass
class VectorField:
    """Right-hand side ``f(t, y)`` with an optional projection ``project(t, y)``.

    ``residual(t, y)`` (optional) reports the constraint violation recorded per
    step. A field signals failure by raising FieldError (or any ProlikError).
    """

    dimension: int
    eval: Callable
    project: Optional[Callable] = None
    residual: Optional[Callable] = None


@dataclass
class OdePath:
    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    residuals: np.ndarray
    rejected: np.ndarray
    status: str = "ok"
    halt_reason: str = ""
    raw_states: Optional[np.ndarray] = None
    nfev: int = 0

    @property
    def final(self):
        return self.states[-1]

    def sample(self, grid):
        """Cubic Hermite interpolation of the path at the requested times."""
        grid = np.atleast_1d(np.asarray(grid, dtype=float))
        t = self.times
        sign = 1.0 if t[-1] >= t[0] else -1.0
        ts = sign * t
        gs = sign * grid
        lo, hi = ts[0], ts[-1]
        if np.any(gs < lo - 1e-12 * (1 + abs(lo))) or np.any(gs > hi + 1e-12 * (1 + abs(hi))):
            raise ValueError("requested times lie outside the integrated range")
        idx = np.clip(np.searchsorted(ts, gs, side="right") - 1, 0, len(t) - 2)
        out = np.empty((grid.size, self.states.shape[1]))
        for i, (k, tq) in enumerate(zip(idx, grid)):
            t0, t1 = t[k], t[k + 1]
            h = t1 - t0
            th = (tq - t0) / h
            y0, y1 = self.states[k], self.states[k + 1]
            f0, f1 = self.derivs[k], self.derivs[k + 1]
            h00 = 2 * th**3 - 3 * th**2 + 1
            h10 = th**3 - 2 * th**2 + th
            h01 = -2 * th**3 + 3 * th**2
            h11 = th**3 - th**2
            out[i] = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
        return out


def _rms(x):
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(f, t0, y0, f0, direction, rtol, atol, span):
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + direction * h0 * f0
    f1 = f(t0 + direction * h0, y1)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 5.0)
    return min(100 * h0, h1, span)


def integrate(field, t0, t1, y0, rtol=1e-8, atol=1e-10, max_steps=MAX_STEPS, keep_raw=False,
              fixed_step=None):
    """Integrate ``field`` from ``t0`` to ``t1`` (either direction).

    Returns an OdePath. When the field fails the path is cut at the last
    accepted state with ``status='halted'``. Step-size underflow or a
    non-finite state raises StiffnessError carrying the partial path.
    ``fixed_step`` disables step control (used for order checks).
    """
    if t0 == t1:
        raise ValueError("t0 and t1 must differ")
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    y = np.array(y0, dtype=float)
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state must be finite")
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    nfev = 0

    def f(t, yy):
        nonlocal nfev
        nfev += 1
        out = np.asarray(field.eval(t, yy), dtype=float)
        if not np.all(np.isfinite(out)):
            raise FieldError(f"non-finite field value at t={t:.6g}")
        return out

    def resid(t, yy):
        return float(field.residual(t, yy)) if field.residual is not None else 0.0

    times = [float(t0)]
    states = [y.copy()]
    raw = [y.copy()]
    residuals = [resid(t0, y)]
    rejected = [0]
    try:
        fy = f(t0, y)
    except ProlikError as exc:
        return OdePath(np.array(times), np.array(states), np.full((1, y.size), np.nan),
                       np.array(residuals), np.array(rejected), "halted", str(exc), nfev=nfev)
    derivs = [fy.copy()]
    t = float(t0)
    if fixed_step is not None:
        h = float(fixed_step)
    else:
        try:
            h = _initial_step(f, t, y, fy, direction, rtol, atol, span)
        except ProlikError:
            h = 1e-6 * span
    h_min = 1e-14 * span
    err_prev = 1e-4
    status, reason = "ok", ""

    def partial():
        return OdePath(np.array(times), np.array(states), np.array(derivs), np.array(residuals),
                       np.array(rejected), status, reason,
                       np.array(raw) if keep_raw else None, nfev)

    n_rej = 0
    for _ in range(max_steps):
        remaining = abs(t1 - t)
        if remaining <= 1e-13 * max(1.0, abs(t1)):
            break
        h = min(h, remaining)
        if h < h_min:
            status, reason = "stiff", f"step size underflow at t={t:.10g}"
            raise StiffnessError(reason, path=partial())
        try:
            k = np.empty((7, y.size))
            k[0] = fy
            for i in range(1, 7):
                yi = y + direction * h * (np.asarray(_A[i]) @ k[:i])
                k[i] = f(t + direction * _C[i] * h, yi)
        except FieldError as exc:
            if "non-finite" in str(exc):
                # treat like an overly large step: shrink and retry
                h *= 0.25
                n_rej += 1
                continue
            status, reason = "halted", str(exc)
            return partial()
        except ProlikError as exc:
            status, reason = "halted", str(exc)
            return partial()
        y_new = y + direction * h * (_B5 @ k)
        err_vec = direction * h * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = 0.0 if fixed_step is not None else _rms(err_vec / scale)
        if not np.isfinite(err) or not np.all(np.isfinite(y_new)):
            h *= 0.25
            n_rej += 1
            continue
        if err <= 1.0:
            t_new = t + direction * h
            unprojected = y_new.copy()
            if field.project is not None:
                try:
                    y_new = np.asarray(field.project(t_new, y_new), dtype=float)
                except ProlikError as exc:
                    status, reason = "halted", f"projection failed: {exc}"
                    return partial()
            try:
                f_new = f(t_new, y_new) if field.project is not None else k[6]
            except ProlikError as exc:
                status, reason = "halted", str(exc)
                return partial()
            t, y, fy = t_new, y_new, f_new
            raw.append(unprojected)
            times.append(t)
            states.append(y.copy())
            derivs.append(fy.copy())
            residuals.append(resid(t, y))
            rejected.append(n_rej)
            n_rej = 0
            if fixed_step is not None:
                continue
            err = max(err, 1e-10)
            factor = SAFETY * err ** (-_ALPHA) * err_prev ** _BETA
            h *= min(5.0, max(0.2, factor))
            err_prev = err
        else:
            n_rej += 1
            h *= max(0.1, SAFETY * err ** (-1.0 / 5.0))
    else:
        status, reason = "stiff", "maximum number of steps reached"
        raise StiffnessError(reason, path=partial())
    return partial()
