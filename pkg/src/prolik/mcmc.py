"""Flat-prior random-walk Metropolis and likelihood-threshold extraction.

Intervals and profile curves are read off the iterates by likelihood
thresholds (not posterior quantiles): an iterate is feasible when
``loglik >= max(loglik) - delta``.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateRangeError, DomainError, EmptyDataError, SchemaError

TARGET_ACCEPT = 0.234
MIN_ITERATIONS = 1000


@dataclass
class McmcTrace:
    iterates: np.ndarray  # (K, p)
    logliks: np.ndarray   # (K,)
    acceptance_rate: float = float("nan")
    source: str = "internal"
    seed: object = None
    burn_in: int = 0

    def __post_init__(self):
        self.iterates = np.atleast_2d(np.asarray(self.iterates, dtype=float))
        self.logliks = np.asarray(self.logliks, dtype=float).ravel()
        if self.iterates.shape[0] < 1:
            raise EmptyDataError("a trace needs at least one iterate")
        if self.iterates.shape[0] != self.logliks.size:
            raise SchemaError("iterates and logliks differ in length")

    @property
    def size(self):
        return self.logliks.size

    @property
    def best(self):
        return self.iterates[int(np.argmax(self.logliks))]


def _initial_cov(model, theta0):
    try:
        H = model.hess(theta0)
        C = np.linalg.inv(-0.5 * (H + H.T))
        np.linalg.cholesky(C)
        return C
    except (np.linalg.LinAlgError, ValueError):
        return np.diag((1e-2 * (1.0 + np.abs(theta0))) ** 2)


def rw_metropolis(model, theta0, K, seed=None, burn_in=None):
    """Gaussian random-walk Metropolis targeting ``exp(loglik)``.

    ``burn_in`` extra iterations (default ``K // 4``, i.e. a fifth of the
    run) adapt the proposal: Robbins-Monro on the global scale toward 23.4%
    acceptance and a running empirical covariance. The proposal is then
    frozen and ``K`` iterates are kept.
    """
    if K < MIN_ITERATIONS:
        raise ValueError(f"K must be at least {MIN_ITERATIONS}")
    theta = np.array(theta0, dtype=float)
    cur = model.loglik(theta)
    if not np.isfinite(cur):
        raise DomainError("starting point outside the model domain")
    p = theta.size
    burn_in = K // 4 if burn_in is None else int(burn_in)
    rng = np.random.default_rng(seed)
    cov = _initial_cov(model, theta)
    log_scale = np.log(2.38 / np.sqrt(p))
    mean = theta.copy()
    emp = cov.copy()
    chol = np.linalg.cholesky(cov)
    out = np.empty((K, p))
    lls = np.empty(K)
    accepted = 0
    for it in range(burn_in + K):
        prop = theta + np.exp(log_scale) * (chol @ rng.standard_normal(p))
        new = model.loglik(prop)
        log_u = np.log(rng.uniform())
        acc = np.isfinite(new) and log_u < new - cur
        if acc:
            theta, cur = prop, new
        if it < burn_in:
            gamma = 1.0 / (it + 1.0) ** 0.6
            log_scale += gamma * ((1.0 if acc else 0.0) - TARGET_ACCEPT)
            k = it + 2.0
            diff = theta - mean
            mean = mean + diff / k
            emp = emp + (np.outer(diff, theta - mean) - emp) / k
            if (it + 1) % 50 == 0:
                try:
                    chol = np.linalg.cholesky(emp + 1e-12 * np.trace(emp) / p * np.eye(p))
                except np.linalg.LinAlgError:
                    pass
        else:
            j = it - burn_in
            out[j] = theta
            lls[j] = cur
            accepted += acc
    return McmcTrace(out, lls, accepted / K, "internal", seed, burn_in)


def _eta_values(trace, eta):
    return np.array([float(eta(th)) for th in trace.iterates])


def mcmc_interval(trace, eta, delta):
    """``(lower, upper, n_feasible)``: extreme ``eta`` over iterates within
    ``delta`` of the best log-likelihood in the trace."""
    lmax = np.max(trace.logliks)
    feas = trace.logliks >= lmax - delta
    vals = _eta_values(trace, eta)[feas]
    return float(np.min(vals)), float(np.max(vals)), int(feas.sum())


@dataclass
class BinnedProfile:
    midpoints: np.ndarray
    profile: np.ndarray  # -inf for empty bins
    counts: np.ndarray
    edges: np.ndarray
    argmax: np.ndarray  # trace index attaining each bin maximum, -1 when empty

    @property
    def empty(self):
        return self.counts == 0


def mcmc_profile_curve(trace, eta, n_bins=30):
    """Binned profile: per equal-width ``eta`` bin, the largest log-likelihood."""
    if n_bins < 5:
        raise ValueError("n_bins must be at least 5")
    vals = _eta_values(trace, eta)
    lo, hi = float(np.min(vals)), float(np.max(vals))
    if not hi > lo:
        raise DegenerateRangeError("eta is constant over the trace")
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.searchsorted(edges, vals, side="right") - 1, 0, n_bins - 1)
    prof = np.full(n_bins, -np.inf)
    best = np.full(n_bins, -1)
    # sort by (bin, loglik); the last entry of each bin run is its maximum
    order = np.lexsort((trace.logliks, idx))
    last = np.r_[idx[order][1:] != idx[order][:-1], True]
    best[idx[order][last]] = order[last]
    filled = best >= 0
    prof[filled] = trace.logliks[best[filled]]
    counts = np.bincount(idx, minlength=n_bins)
    return BinnedProfile(0.5 * (edges[:-1] + edges[1:]), prof, counts, edges, best)


def write_trace_csv(trace, path):
    p = trace.iterates.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"theta_{j + 1}" for j in range(p)] + ["loglik"])
        for th, ll in zip(trace.iterates, trace.logliks):
            w.writerow([repr(float(x)) for x in th] + [repr(float(ll))])


def read_trace_csv(path, model=None, recompute_loglik=False):
    """Read iterates written by another sampler.

    Expected header ``theta_1,...,theta_p,loglik``. With ``recompute_loglik``
    the log-likelihoods are re-evaluated with ``model``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyDataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    p = len(header) - 1
    expected = [f"theta_{j + 1}" for j in range(p)] + ["loglik"]
    if p < 1 or header != expected:
        raise SchemaError(f"{path}: header must be {','.join(expected)}")
    data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float).reshape(-1, p + 1)
    if data.shape[0] == 0:
        raise EmptyDataError(f"{path}: no iterates")
    iterates, lls = data[:, :p], data[:, p]
    if recompute_loglik:
        if model is None:
            raise ValueError("recompute_loglik needs a model")
        if model.p != p:
            raise SchemaError(f"trace has {p} parameters, model has {model.p}")
        lls = np.array([model.loglik(th) for th in iterates])
    return McmcTrace(iterates, lls, float("nan"), "file")
