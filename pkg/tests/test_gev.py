import numpy as np
import pytest
from scipy import stats

from fdcheck import fd_grad, fd_jac, rel_err
from prolik.errors import DomainError
from prolik.gev import (SERIES_SWITCH, XI_SWITCH, GevParams, gev_cdf, gev_logpdf, loglik_terms,
                        obs_terms, return_level, rl_derivs, upper_endpoint)


def test_logpdf_examples():
    assert gev_logpdf(0.0, (0, 1, 0)) == pytest.approx(-1.0, abs=1e-12)
    assert gev_logpdf(-10.0, (0, 1, 0.5)) == -np.inf
    # -3 log 1.5 - 1.5**-2
    assert gev_logpdf(1.0, (0, 1, 0.5)) == pytest.approx(-1.660840, abs=1e-6)


def test_cdf_examples():
    assert gev_cdf(0.0, (0, 1, 0)) == pytest.approx(np.exp(-1.0), abs=1e-12)
    assert gev_cdf(1.0, (0, 1, 0.5)) == pytest.approx(0.641180, abs=1e-6)
    assert gev_cdf(10.0, (0, 1, -0.5)) == 1.0
    assert gev_cdf(-10.0, (0, 1, 0.5)) == 0.0


@pytest.mark.parametrize("mu, sigma, xi", [(0, 1, 0.3), (2, 0.5, -0.4), (-1, 3, 0.0),
                                           (0, 1, 1e-6), (1, 2, -0.9)])
def test_against_scipy(mu, sigma, xi):
    dist = stats.genextreme(-xi, loc=mu, scale=sigma)
    y = dist.ppf(np.linspace(0.001, 0.999, 41))
    np.testing.assert_allclose(gev_logpdf(y, (mu, sigma, xi)), dist.logpdf(y), rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(gev_cdf(y, (mu, sigma, xi)), dist.cdf(y), rtol=1e-9, atol=1e-12)


def test_return_level_examples():
    assert return_level(0.0, (1.5, 2.0, 0.3)) == pytest.approx(1.5, abs=1e-14)
    assert return_level(1.0, (0, 1, 0)) == pytest.approx(1.0, abs=1e-14)
    assert return_level(np.log(4.0), (0, 1, 0.5)) == pytest.approx(2.0, abs=1e-12)


def test_return_level_is_upper_quantile_of_continuous_time_definition():
    # exp(-1/T) is the probability of no exceedance for a level exceeded once per T on average
    for xi in (-0.3, 0.0, 0.2):
        theta = (1.0, 2.0, xi)
        for T in (2.0, 10.0, 1000.0):
            eta = return_level(np.log(T), theta)
            assert gev_cdf(eta, theta) == pytest.approx(np.exp(-1.0 / T), rel=1e-12)


def test_upper_endpoint_examples():
    assert upper_endpoint((0, 1, -0.5)) == pytest.approx(2.0)
    assert upper_endpoint((0, 1, 0)) == np.inf
    assert upper_endpoint((3, 2, -1)) == pytest.approx(5.0)
    assert upper_endpoint(GevParams(0, 1, 0.2)) == np.inf


def test_params_validation():
    with pytest.raises(DomainError):
        GevParams(0.0, 0.0, 0.1)
    with pytest.raises(DomainError):
        GevParams(0.0, 1.0, -1.5)
    assert GevParams(1.0, 2.0, 0.1).astuple() == (1.0, 2.0, 0.1)


def _fd_check(y, theta, tol):
    def val(th):
        return loglik_terms(y, th).value

    def grad(th):
        return loglik_terms(y, th).grad

    lt = loglik_terms(y, theta)
    assert lt.in_support
    assert rel_err(lt.grad, fd_grad(val, theta)) < tol
    assert rel_err(lt.hess, fd_jac(grad, theta)) < tol
    np.testing.assert_array_equal(lt.hess, lt.hess.T)


def test_loglik_terms_examples():
    lt = loglik_terms(0.0, (0.0, 1.0, 0.0))
    assert lt.value == pytest.approx(-1.0, abs=1e-12)
    _fd_check(0.0, np.array([0.0, 1.0, 0.0]), 1e-7)
    _fd_check(1.0, np.array([0.5, 2.0, 0.3]), 1e-6)


def test_loglik_terms_out_of_support():
    lt = loglik_terms(-10.0, (0, 1, 0.5))
    assert lt.value == -np.inf
    assert not lt.in_support
    assert np.all(np.isnan(lt.grad))


def test_loglik_derivatives_random_points():
    rng = np.random.default_rng(11)
    for _ in range(100):
        mu = rng.uniform(-5, 5)
        sigma = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
        xi = rng.uniform(-0.45, 1.0)
        y = float(stats.genextreme(-xi, loc=mu, scale=sigma).ppf(rng.uniform(0.02, 0.98)))
        _fd_check(y, np.array([mu, sigma, xi]), 1e-5)


def _all_outputs(y, xi):
    lt = loglik_terms(y, (0.3, 1.7, xi))
    rd = rl_derivs(np.log(80.0), (0.3, 1.7, xi))
    return (np.concatenate([[lt.value], lt.grad, lt.hess.ravel()]),
            np.concatenate([[rd.eta], rd.grad, rd.hess.ravel(), rd.cross, [rd.ds]]),
            lt, rd)


@pytest.mark.parametrize("y", [-1.2, 0.3, 2.5, 6.0])
def test_continuity_across_xi_switch(y):
    # a jump J at the centre would leave 2 * d(h/2) - d(h) = J; smooth outputs give ~0
    for centre in (XI_SWITCH, -XI_SWITCH):
        h = 1e-3 * abs(centre)
        out_p, out_m = _all_outputs(y, centre + h), _all_outputs(y, centre - h)
        in_p, in_m = _all_outputs(y, centre + h / 2), _all_outputs(y, centre - h / 2)
        for k in (0, 1):
            jump = 2.0 * (in_p[k] - in_m[k]) - (out_p[k] - out_m[k])
            assert np.max(np.abs(jump) / (1.0 + np.abs(out_p[k]))) < 1e-7
        lt, rd = in_m[2], in_m[3]
        assert abs(in_p[0][0] - in_m[0][0] - lt.grad[2] * h) < 1e-8
        assert abs(in_p[1][0] - in_m[1][0] - rd.grad[2] * h) < 1e-8


def test_continuity_at_series_switch():
    # the switch actually happens where |xi * z| crosses the series threshold
    y, mu, sigma = 3.0, 0.0, 1.0
    z = (y - mu) / sigma
    xi0 = SERIES_SWITCH / z
    xs = xi0 * np.array([1 - 1e-9, 1 + 1e-9])
    v, g, h, _ = obs_terms(y, mu, sigma, xs)
    assert abs(v[1] - v[0]) < 1e-10
    assert np.max(np.abs(g[1] - g[0])) < 1e-9
    assert np.max(np.abs(h[1] - h[0])) < 1e-8
    s = SERIES_SWITCH / xi0
    r = [rl_derivs(s, (mu, sigma, x)) for x in xs]
    assert abs(r[1].eta - r[0].eta) < 1e-10
    assert np.max(np.abs(r[1].hess - r[0].hess)) < 1e-8


def test_gumbel_limit_matches_exact_form():
    y = np.linspace(-2, 5, 15)
    np.testing.assert_allclose(gev_logpdf(y, (0, 1, 1e-12)), -y - np.exp(-y), rtol=1e-10)
    np.testing.assert_allclose(gev_logpdf(y, (0, 1, 0.0)), -y - np.exp(-y), rtol=0, atol=1e-14)


def test_rl_derivs_examples():
    rd = rl_derivs(np.log(100.0), (0.0, 1.0, 0.1))
    assert rd.grad[0] == 1.0
    rd0 = rl_derivs(2.0, (0.0, 1.5, 0.0))
    np.testing.assert_allclose(rd0.cross, [0.0, 1.0, 1.5 * 2.0], atol=1e-14)
    assert rd0.eta == pytest.approx(3.0, abs=1e-14)


def test_rl_derivs_finite_differences():
    theta = np.array([1.0, 2.0, -0.1])
    s = np.log(50.0)
    rd = rl_derivs(s, theta)
    assert rel_err(rd.grad, fd_grad(lambda th: rl_derivs(s, th).eta, theta)) < 1e-6
    assert rel_err(rd.hess, fd_jac(lambda th: rl_derivs(s, th).grad, theta)) < 1e-6
    assert rel_err(rd.cross, fd_jac(lambda v: rl_derivs(v[0], theta).grad, np.array([s]))[:, 0]) < 1e-6
    assert rd.ds == pytest.approx(fd_grad(lambda v: rl_derivs(v[0], theta).eta, np.array([s]))[0], rel=1e-7)
    np.testing.assert_array_equal(rd.hess, rd.hess.T)


def test_rl_time_derivative_nonnegative():
    rng = np.random.default_rng(5)
    for _ in range(200):
        theta = (rng.normal(), float(np.exp(rng.normal())), rng.uniform(-1, 1.5))
        s = rng.uniform(0.01, np.log(1e4))
        rd = rl_derivs(s, theta)
        assert rd.ds >= 0
        assert np.all(np.isfinite(rd.hess))


def test_cdf_decreasing_in_location():
    rng = np.random.default_rng(6)
    for _ in range(50):
        y, sigma, xi = rng.normal(), float(np.exp(rng.normal())), rng.uniform(-0.8, 0.8)
        mus = np.linspace(-3, 3, 61)
        F = np.array([gev_cdf(y, (m, sigma, xi)) for m in mus])
        assert np.all(np.diff(F) <= 0)


def test_support_consistency():
    rng = np.random.default_rng(7)
    for _ in range(200):
        theta = (rng.normal(), float(np.exp(rng.normal())), rng.uniform(-1, 1))
        y = theta[0] + theta[1] * rng.uniform(-4, 4)
        lp, F = gev_logpdf(y, theta), gev_cdf(y, theta)
        if abs(1 + theta[2] * (y - theta[0]) / theta[1]) < 0.05 or -np.inf < lp < -500:
            continue  # boundary, and the deep lower tail where the cdf underflows
        assert (lp == -np.inf) == (F in (0.0, 1.0))
