from importlib.resources import files

import numpy as np
import pytest

from prolik.models import GevRegressionSpec, build_gev_regression, build_iid_gev
from prolik.numerics import deviance_threshold
from prolik.optimizer import fit_mle

DELTA_95 = deviance_threshold(0.95, 1)


def venice_table():
    return np.loadtxt(files("prolik").joinpath("data/venice.csv"), delimiter=",", skiprows=1)


@pytest.fixture(scope="session")
def venice():
    tab = venice_table()
    return tab[:, 0], tab[:, 1]


@pytest.fixture(scope="session")
def venice_model(venice):
    return build_iid_gev(venice[1])


@pytest.fixture(scope="session")
def venice_fit(venice_model):
    return fit_mle(venice_model)


@pytest.fixture(scope="session")
def venice_trend(venice):
    years, y = venice
    x = years / 100.0
    spec = GevRegressionSpec(y, np.column_stack([np.ones_like(x), x]), np.ones((y.size, 1)),
                             np.ones((y.size, 1)), "identity", ["1", "year"], ["1"], ["1"])
    model = build_gev_regression(spec)
    return model, fit_mle(model)


def gev_sample(rng, n, mu, sigma, xi):
    u = rng.uniform(size=n)
    e = -np.log(u)
    if xi == 0:
        return mu - sigma * np.log(e)
    return mu + sigma * (e ** (-xi) - 1.0) / xi
