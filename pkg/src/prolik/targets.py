"""Scalar targets eta(theta, t) with the derivatives the solvers and tracers need."""

from typing import NamedTuple

import numpy as np

from . import gev
from .errors import UnsupportedModelError


class TargetDerivs(NamedTuple):
    value: float
    grad: np.ndarray
    hess: np.ndarray
    cross: np.ndarray  # d^2 eta / dt dtheta
    dt: float          # d eta / dt


class Target:
    """Base class. ``t`` is ignored by time-independent targets."""

    time_dependent = False
    label = "eta"

    def derivs(self, theta, t=None):
        raise NotImplementedError

    def value(self, theta, t=None):
        return self.derivs(theta, t).value

    def solvable_index(self):
        """Index ``k`` and constant ``d eta / d theta_k`` for targets that are
        affine in one coordinate; used to parametrise level sets."""
        raise UnsupportedModelError(f"{type(self).__name__} cannot be solved for a coordinate")


class LinearTarget(Target):
    def __init__(self, weights, offset=0.0, label="eta"):
        self.weights = np.asarray(weights, dtype=float)
        self.offset = float(offset)
        self.label = label

    def derivs(self, theta, t=None):
        p = self.weights.size
        val = float(self.weights @ np.asarray(theta, dtype=float)) + self.offset
        return TargetDerivs(val, self.weights.copy(), np.zeros((p, p)), np.zeros(p), 0.0)

    def solvable_index(self):
        k = int(np.argmax(np.abs(self.weights)))
        if self.weights[k] == 0.0:
            raise UnsupportedModelError("zero linear target")
        return k, float(self.weights[k])


class CoordinateTarget(LinearTarget):
    def __init__(self, index, p, label=None):
        w = np.zeros(p)
        w[index] = 1.0
        super().__init__(w, label=label or f"theta[{index}]")
        self.index = index

    def solvable_index(self):
        return self.index, 1.0


class ReturnLevelTarget(Target):
    """GEV return level at log-period ``s`` for parameters affine in theta.

    ``(mu, lin_sigma, xi) = M @ theta + offset`` with ``sigma = lin_sigma`` or
    ``exp(lin_sigma)`` when ``log_scale``. With ``s=None`` the target is
    time-dependent and ``t`` is the log return period.
    """

    label = "return_level"

    def __init__(self, M, offset=None, log_scale=False, s=None):
        self.M = np.asarray(M, dtype=float)
        self.offset = np.zeros(3) if offset is None else np.asarray(offset, dtype=float)
        self.log_scale = log_scale
        self.s = s
        self.time_dependent = s is None

    @classmethod
    def for_model(cls, model, s=None, **rows):
        M = model.gev_map(**rows)
        return cls(M, log_scale=model.scale_link == "log", s=s)

    def derivs(self, theta, t=None):
        s = self.s if self.s is not None else t
        if s is None:
            raise ValueError("return-level target needs a log return period")
        theta = np.asarray(theta, dtype=float)
        mu, lin, xi = self.M @ theta + self.offset
        sigma = np.exp(lin) if self.log_scale else lin
        p = theta.size
        if not sigma > 0:
            return TargetDerivs(np.nan, np.full(p, np.nan), np.full((p, p), np.nan),
                                np.full(p, np.nan), np.nan)
        rl = gev.rl_derivs(s, (mu, sigma, xi))
        J = self.M.copy()
        if self.log_scale:
            J[1] *= sigma
        with np.errstate(invalid="ignore", over="ignore"):
            grad = J.T @ rl.grad
            hess = J.T @ rl.hess @ J
            if self.log_scale:
                hess += rl.grad[1] * sigma * np.outer(self.M[1], self.M[1])
            cross = J.T @ rl.cross
        return TargetDerivs(rl.eta, grad, hess, cross, rl.ds)

    def solvable_index(self):
        cand = [k for k in range(self.M.shape[1])
                if self.M[0, k] != 0.0 and self.M[1, k] == 0.0 and self.M[2, k] == 0.0]
        if not cand:
            raise UnsupportedModelError(
                "return-level slice needs a location coefficient that enters neither scale nor shape")
        k = max(cand, key=lambda j: abs(self.M[0, j]))
        return k, float(self.M[0, k])
