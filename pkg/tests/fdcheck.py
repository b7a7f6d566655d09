"""Central finite-difference oracles shared by the test modules."""

import numpy as np


def fd_grad(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        step = h * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = step
        g[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return g


def fd_jac(F, x, h=1e-6):
    """Jacobian of a vector function; row i holds dF_i/dx."""
    x = np.asarray(x, dtype=float)
    cols = []
    for i in range(x.size):
        step = h * (1.0 + abs(x[i]))
        e = np.zeros_like(x)
        e[i] = step
        cols.append((np.asarray(F(x + e)) - np.asarray(F(x - e))) / (2.0 * step))
    return np.array(cols).T


def rel_err(a, b, floor=1.0):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(floor, float(np.max(np.abs(b)))))
