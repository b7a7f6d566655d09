import numpy as np
import pytest

from conftest import DELTA_95
from prolik.errors import DegenerateRangeError, DomainError, EmptyDataError, SchemaError
from prolik.mcmc import (McmcTrace, mcmc_interval, mcmc_profile_curve, read_trace_csv,
                         rw_metropolis, write_trace_csv)
from prolik.models import build_quadratic
from prolik.optimizer import fit_mle, profile_bound
from prolik.oracle import SliceModel, naive_profile_value
from prolik.targets import ReturnLevelTarget


@pytest.fixture(scope="module")
def normal_trace():
    model = build_quadratic([0.0], np.eye(1))
    return rw_metropolis(model, [0.5], 50_000, seed=3)


@pytest.fixture(scope="module")
def quad_setup():
    H = np.array([[2.0, 0.8], [0.8, 1.0]])
    model = build_quadratic([1.0, -1.0], H)
    return model, H, rw_metropolis(model, [1.0, -1.0], 50_000, seed=4)


@pytest.fixture(scope="module")
def venice_rl(venice_model, venice_fit):
    target = ReturnLevelTarget.for_model(venice_model, s=np.log(100.0))
    return target, (lambda th: target.value(th))


def test_standard_normal_moments(normal_trace):
    x = normal_trace.iterates[:, 0]
    assert normal_trace.size == 50_000
    assert abs(x.mean()) <= 0.05
    assert abs(x.var() - 1.0) <= 0.1


def test_acceptance_rate(normal_trace, quad_setup):
    assert 0.15 <= normal_trace.acceptance_rate <= 0.4
    assert 0.15 <= quad_setup[2].acceptance_rate <= 0.4


def test_reproducible():
    model = build_quadratic([0.0, 0.0], np.eye(2))
    a = rw_metropolis(model, [0.1, 0.1], 2000, seed=9)
    b = rw_metropolis(model, [0.1, 0.1], 2000, seed=9)
    c = rw_metropolis(model, [0.1, 0.1], 2000, seed=10)
    np.testing.assert_array_equal(a.iterates, b.iterates)
    np.testing.assert_array_equal(a.logliks, b.logliks)
    assert not np.array_equal(a.iterates, c.iterates)
    assert a.burn_in == 500


def test_sampler_errors(venice_model):
    with pytest.raises(DomainError):
        rw_metropolis(venice_model, [1.0, -1.0, 0.0], 1000, seed=0)
    with pytest.raises(ValueError):
        rw_metropolis(venice_model, [1.0, 0.2, 0.0], 999, seed=0)


def test_interval_hand_example():
    tr = McmcTrace(np.array([[1.0], [2.0], [3.0]]), [-10.0, -11.0, -13.0])
    assert mcmc_interval(tr, lambda th: th[0], 1.92) == (1.0, 2.0, 2)
    one = McmcTrace(np.array([[4.5, 1.0]]), [-3.0])
    assert mcmc_interval(one, lambda th: th[0] + th[1], 1.92) == (5.5, 5.5, 1)


def test_trace_validation():
    with pytest.raises(SchemaError):
        McmcTrace(np.zeros((3, 2)), [0.0, 1.0])


def test_interval_monotone_in_delta(quad_setup):
    _, _, tr = quad_setup
    prev = (np.inf, -np.inf, 0)
    for delta in (0.1, 0.5, 1.0, DELTA_95, 3.0):
        lo, hi, n = mcmc_interval(tr, lambda th: th[0], delta)
        assert lo <= prev[0] and hi >= prev[1] and n >= prev[2]
        prev = (lo, hi, n)


def test_interval_inside_optimiser_interval(venice_model, venice_fit, venice_rl):
    target, eta = venice_rl
    tr = rw_metropolis(venice_model, venice_fit.theta_hat, 10_000, seed=5)
    lo, hi, n = mcmc_interval(tr, eta, DELTA_95)
    # the trace's own maximum sits below the true one, which widens its feasible set
    # to exactly the optimiser's feasible set at this enlarged level
    delta = DELTA_95 + venice_fit.loglik_max - tr.logliks.max()
    assert delta >= DELTA_95
    olo = profile_bound(venice_model, target, venice_fit, delta, "lower").value
    ohi = profile_bound(venice_model, target, venice_fit, delta, "upper").value
    assert olo - 1e-9 <= lo <= hi <= ohi + 1e-9
    assert n > 100


def test_interval_gap_shrinks_with_length(venice_model, venice_fit, venice_rl):
    target, eta = venice_rl
    olo = profile_bound(venice_model, target, venice_fit, DELTA_95, "lower").value
    ohi = profile_bound(venice_model, target, venice_fit, DELTA_95, "upper").value
    gaps = {}
    for K in (1000, 10_000):
        g = []
        for seed in range(3):
            tr = rw_metropolis(venice_model, venice_fit.theta_hat, K, seed=seed)
            lo, hi, _ = mcmc_interval(tr, eta, DELTA_95)
            g.append(max(lo - olo, 0.0) + max(ohi - hi, 0.0))
        gaps[K] = float(np.mean(g))
    assert gaps[10_000] < gaps[1000]


def test_profile_curve_constant_loglik():
    it = np.linspace(0, 1, 200)[:, None]
    curve = mcmc_profile_curve(McmcTrace(it, np.full(200, -2.0)), lambda th: th[0], 10)
    np.testing.assert_array_equal(curve.profile, -2.0)
    assert not curve.empty.any()
    assert curve.counts.sum() == 200


def test_profile_curve_errors():
    tr = McmcTrace(np.ones((50, 1)), np.zeros(50))
    with pytest.raises(DegenerateRangeError):
        mcmc_profile_curve(tr, lambda th: th[0], 10)
    with pytest.raises(ValueError):
        mcmc_profile_curve(tr, lambda th: th[0], 4)


def test_profile_curve_empty_bins():
    it = np.array([[0.0], [0.05], [1.0]])
    curve = mcmc_profile_curve(McmcTrace(it, [-1.0, -2.0, -3.0]), lambda th: th[0], 5)
    assert curve.empty.tolist() == [False, True, True, True, False]
    assert curve.profile[0] == -1.0 and curve.argmax[0] == 0
    assert np.all(curve.profile[curve.empty] == -np.inf)
    assert np.all(curve.argmax[curve.empty] == -1)


def test_quadratic_binned_profile(quad_setup):
    model, H, tr = quad_setup
    C = np.linalg.inv(H)

    def true_prof(eta):
        return -0.5 * (eta - 1.0) ** 2 / C[0, 0]

    curve = mcmc_profile_curve(tr, lambda th: th[0], 30)
    eta_best = tr.iterates[curve.argmax[~curve.empty], 0]
    # a restricted maximum never exceeds the profile at the same eta
    assert np.all(curve.profile[~curve.empty] <= true_prof(eta_best) + 1e-12)
    # and inside the likelihood region it comes close to the profile's bin maximum
    for k in np.flatnonzero(~curve.empty):
        a, b = curve.edges[k], curve.edges[k + 1]
        ref = true_prof(np.clip(1.0, a, b))
        if ref >= -DELTA_95:
            assert ref - curve.profile[k] <= 0.1
    top = int(np.argmax(curve.profile))
    assert curve.edges[top] <= tr.best[0] <= curve.edges[top + 1]


def test_binned_curve_below_naive_profile(venice_model, venice_fit, venice_rl):
    target, eta = venice_rl
    tr = rw_metropolis(venice_model, venice_fit.theta_hat, 5000, seed=6)
    curve = mcmc_profile_curve(tr, eta, 20)
    for k in np.flatnonzero(~curve.empty):
        theta = tr.iterates[curve.argmax[k]]
        # the iterate lies on its own slice, so it is a feasible warm start
        init = SliceModel(venice_model, target, eta(theta)).restrict(theta)
        prof, _, conv = naive_profile_value(venice_model, target, eta(theta), init)
        assert conv
        assert curve.profile[k] <= prof + 1e-9


def test_csv_round_trip(tmp_path, quad_setup):
    model, _, tr = quad_setup
    short = McmcTrace(tr.iterates[:100], tr.logliks[:100])
    path = tmp_path / "trace.csv"
    write_trace_csv(short, path)
    back = read_trace_csv(path)
    np.testing.assert_array_equal(back.iterates, short.iterates)
    np.testing.assert_array_equal(back.logliks, short.logliks)
    assert back.source == "file"
    again = read_trace_csv(path, model, recompute_loglik=True)
    np.testing.assert_allclose(again.logliks, short.logliks, rtol=1e-12)


def test_csv_recompute_replaces_logliks(tmp_path):
    model = build_quadratic([0.0, 0.0], np.eye(2))
    path = tmp_path / "t.csv"
    path.write_text("theta_1,theta_2,loglik\n1.0,0.0,5.0\n0.0,2.0,5.0\n", encoding="utf-8")
    tr = read_trace_csv(path, model, recompute_loglik=True)
    np.testing.assert_allclose(tr.logliks, [-0.5, -2.0])
    assert read_trace_csv(path).logliks.tolist() == [5.0, 5.0]


def test_csv_errors(tmp_path):
    model = build_quadratic([0.0], np.eye(1))
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(EmptyDataError):
        read_trace_csv(empty)
    header_only = tmp_path / "header.csv"
    header_only.write_text("theta_1,loglik\n", encoding="utf-8")
    with pytest.raises(EmptyDataError):
        read_trace_csv(header_only)
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,loglik\n1,2,3\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_trace_csv(bad)
    two = tmp_path / "two.csv"
    two.write_text("theta_1,theta_2,loglik\n1,2,3\n", encoding="utf-8")
    with pytest.raises(SchemaError):
        read_trace_csv(two, model, recompute_loglik=True)
    with pytest.raises(ValueError):
        read_trace_csv(two, recompute_loglik=True)


def test_best_iterate_is_near_mle(venice_model, venice_fit):
    tr = rw_metropolis(venice_model, venice_fit.theta_hat, 5000, seed=7)
    assert tr.logliks.max() <= venice_fit.loglik_max + 1e-9
    assert fit_mle(venice_model, init=tr.best).loglik_max == pytest.approx(venice_fit.loglik_max,
                                                                           abs=1e-8)
