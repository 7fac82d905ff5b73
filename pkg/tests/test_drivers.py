import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bsle.drivers import (BesselPath, HorizonError, SamplerError, bessel_lifetimes, expected_remaining_lifetime,
                          extend_driver, lifetime_from_bessel, rho_lifetimes, sample_brownian_driver,
                          sample_cos_bessel, sample_rho_driver, time_change_u, u_rate, w_from_xy)
from bsle.rng import RngSpec

seeds = st.integers(0, 2 ** 63)


# ------------------------------------------------------------- brownian --

def test_brownian_driver_starts_at_zero_and_is_deterministic():
    a = sample_brownian_driver(4.0, 0.01, 1.0, RngSpec(3))
    b = sample_brownian_driver(4.0, 0.01, 1.0, RngSpec(3))
    assert a.values[0] == 0.0 and a == b and a.n_steps == 100
    assert a != sample_brownian_driver(4.0, 0.01, 1.0, RngSpec(3, 1))


@pytest.mark.parametrize("kappa", [2.0, 4.0])
def test_brownian_scaling_variance(kappa):
    t = 0.5
    vals = np.array([sample_brownian_driver(kappa, 0.05, t, RngSpec(11, k)).values[-1] for k in range(10_000)])
    v = vals / math.sqrt(t)
    se = kappa * math.sqrt(2.0 / (v.size - 1))
    assert abs(v.var(ddof=1) - kappa) <= 3 * se


def test_brownian_driver_rejects_bad_kappa():
    with pytest.raises(ValueError):
        sample_brownian_driver(5.0, 0.01, 1.0, RngSpec(1))


# ------------------------------------------------------------ rho driver --

@given(seeds)
def test_rho_driver_trace_invariants(seed):
    res = sample_rho_driver(4.0, -4.0, -4.0, 1.0, -1.0, 0.01, RngSpec(seed))
    X, Y, t = res.X_trace, res.Y_trace, res.t_trace
    assert np.all(X > 0) and np.all(Y < 0)
    gap = X - Y
    assert np.all(np.diff(gap) < 0)
    # late steps can be below the resolution of t, so compare without dividing
    assert np.all(np.diff(gap ** 2) <= -15.0 * np.diff(t) + 1e-15)
    assert res.T <= res.T_upper <= 0.25 + 1e-12
    assert X[-1] - Y[-1] < 1e-5 * 2 + 1e-15
    assert X[-1] < 2e-5 and -Y[-1] < 2e-5
    u = time_change_u(X, Y, 1.0, -1.0, 4.0)
    assert u[0] == 0.0 and np.all(np.diff(u) > 0)
    assert res.driver.lifetime_index == int(res.T // res.driver.step)


def test_rho_driver_deterministic_and_records_sidecar():
    a = sample_rho_driver(2.0, -4.0, -4.0, 0.6, -0.4, 0.005, RngSpec(4, 2))
    b = sample_rho_driver(2.0, -4.0, -4.0, 0.6, -0.4, 0.005, RngSpec(4, 2))
    assert a.T == b.T and a.driver == b.driver and np.array_equal(a.X_trace, b.X_trace)
    side = a.sidecar()
    assert side["T"] == a.T and len(side["X_trace"]) == a.X_trace.size


def test_rho_driver_step_cap_is_an_error():
    with pytest.raises(SamplerError):
        sample_rho_driver(4.0, -4.0, -4.0, 1.0, -1.0, 0.01, RngSpec(1), max_steps=5)


def test_rho_driver_argument_checks():
    with pytest.raises(ValueError):
        sample_rho_driver(4.0, -4.0, -4.0, -1.0, -2.0, 0.01, RngSpec(1))
    with pytest.raises(ValueError):
        sample_rho_driver(4.0, -4.0, -4.0, 1.0, -1.0, 0.5, RngSpec(1))


def test_rho_lifetimes_match_single_paths():
    out = rho_lifetimes(4.0, -4.0, -4.0, 1.0, -1.0, 0.01, 5, np.arange(3))
    for k in range(3):
        assert out["T"][k] == sample_rho_driver(4.0, -4.0, -4.0, 1.0, -1.0, 0.01, RngSpec(5, k)).T


def test_rho_lifetime_mean_matches_closed_form():
    out = rho_lifetimes(4.0, -4.0, -4.0, 1.0, -1.0, 0.005, 21, np.arange(4000))
    T = out["T"]
    se = T.std(ddof=1) / math.sqrt(T.size)
    assert abs(T.mean() - 0.1875) <= 3 * se + 1e-3


def test_time_change_reproduces_reduced_drift():
    # regress increments of W on W in the u clock: slope -4/kappa
    kappa = 4.0
    du = 0.05
    num = den = 0.0
    resid = []
    for k in range(200):
        r = sample_rho_driver(kappa, -4.0, -4.0, 1.0, -1.0, 0.005, RngSpec(31, k))
        u = time_change_u(r.X_trace, r.Y_trace, 1.0, -1.0, kappa)
        W = w_from_xy(r.X_trace, r.Y_trace)
        grid = np.arange(0.0, min(3.0, u[-1]), du)
        Wg = np.interp(grid, u, W)
        dW = np.diff(Wg)
        w0 = Wg[:-1]
        num += np.sum(w0 * dW)
        den += np.sum(w0 * w0) * du
        resid.append((dW, w0))
    slope = num / den
    r2 = sum(np.sum((dW - slope * w0 * du) ** 2 * w0 ** 2) for dW, w0 in resid)
    se = math.sqrt(r2) / den
    assert abs(slope + 4.0 / kappa) <= 3 * se


# ---------------------------------------------------------------- extend --

def test_extend_driver_contracts():
    r = sample_rho_driver(4.0, -4.0, -4.0, 1.0, -1.0, 0.01, RngSpec(8))
    p = extend_driver(r, 0.01, 1.0, RngSpec(8))
    k = r.driver.lifetime_index
    assert p.lifetime_index == k
    assert np.array_equal(p.values[: k + 1], r.driver.values[: k + 1])
    assert p.duration >= 1.0
    # the first post-T grid value continues from lambda(T)
    gap = (k + 1) * 0.01 - r.T
    assert abs(p.values[k + 1] - r.lam_T) < 6 * math.sqrt(4.0 * gap) + 1e-12


def test_extension_increments_have_variance_kappa_step():
    incs = []
    pre = []
    for k in range(400):
        r = sample_rho_driver(4.0, -4.0, -4.0, 1.0, -1.0, 0.02, RngSpec(13, k))
        p = extend_driver(r, 0.02, 1.0, RngSpec(13, k))
        j = p.lifetime_index
        incs.append(np.diff(p.values[j + 1:]))
        pre.append(p.values[j] - p.values[0])
    inc = np.concatenate(incs)
    se = 0.08 * math.sqrt(2.0 / inc.size)
    assert abs(inc.var() - 0.08) <= 3 * se
    # independence from the pre-T path
    first = np.array([i[0] for i in incs])
    assert abs(np.corrcoef(first, pre)[0, 1]) < 3.5 / math.sqrt(len(pre))


# ---------------------------------------------------------------- bessel --

def test_cos_bessel_start_and_range():
    bp = sample_cos_bessel(4.0, 0.0, 2 ** -6, 4.0, RngSpec(1))
    assert bp.V_values[0] == pytest.approx(math.pi / 2)
    assert np.all((bp.V_values[1:] > 0) & (bp.V_values[1:] < math.pi))
    assert bp.step == 2 ** -6
    assert sample_cos_bessel(4.0, 0.0, 0.02, 1.0, RngSpec(1)).step == 2 ** -6


@given(seeds, st.floats(-1.0, 1.0), st.sampled_from([1.0, 2.0, 4.0]))
def test_cos_bessel_never_reaches_boundary(seed, w0, kappa):
    bp = sample_cos_bessel(kappa, w0, 2 ** -7, 3.0, RngSpec(seed))
    assert np.all(np.abs(bp.W_values[1:]) < 1.0)


@pytest.mark.parametrize("kappa", [2.0, 4.0])
def test_cos_bessel_mean_decays(kappa):
    w0 = 0.8
    t = 0.5
    W = np.array([sample_cos_bessel(kappa, w0, 2 ** -8, t, RngSpec(17, k)).W_values[-1] for k in range(4000)])
    se = W.std(ddof=1) / math.sqrt(W.size)
    assert abs(W.mean() - w0 * math.exp(-4 * t / kappa)) <= 3 * se + 2e-3


def test_lifetime_from_bessel_examples():
    n = 4096
    flat = BesselPath(2 ** -8, np.full(n + 1, math.pi / 2), 0.0, 4.0)
    est = lifetime_from_bessel(flat, 1.0, -1.0, 4.0, 1e-6)
    assert est.value == pytest.approx(0.25, rel=1e-12)
    assert est.lower <= est.value <= est.upper
    edge = BesselPath(2 ** -8, np.zeros(n + 1), 1.0, 4.0)
    assert lifetime_from_bessel(edge, 1.0, -1.0, 4.0, 1e-6).value == 0.0
    bp = sample_cos_bessel(4.0, 0.0, 2 ** -8, 16.0, RngSpec(2))
    t1 = lifetime_from_bessel(bp, 1.0, -1.0, 4.0, 1e-6).value
    t2 = lifetime_from_bessel(bp, 2.0, -2.0, 4.0, 1e-5).value
    assert t2 == pytest.approx(4 * t1, rel=1e-14)
    with pytest.raises(HorizonError):
        lifetime_from_bessel(BesselPath(2 ** -8, np.full(257, 1.0), 0.0, 4.0), 1.0, -1.0, 4.0, 1e-6)


def test_bessel_lifetimes_agree_with_path_version():
    out = bessel_lifetimes(4.0, 1.0, -1.0, 3, [0, 1], horizon=16.0)
    for k in range(2):
        bp = sample_cos_bessel(4.0, 0.0, 2 ** -8, 16.0, RngSpec(3, k))
        assert out["T"][k] == pytest.approx(lifetime_from_bessel(bp, 1.0, -1.0, 4.0, 1e-6).value, rel=1e-12)


@pytest.mark.parametrize("kappa, expected", [(4.0, 0.1875), (2.0, 0.2142857142857143)])
def test_bessel_lifetime_mean_matches_closed_form(kappa, expected):
    assert expected_remaining_lifetime(1.0, -1.0, kappa) == pytest.approx(expected, rel=1e-14)
    T = bessel_lifetimes(kappa, 1.0, -1.0, 4, np.arange(8000))["T"]
    se = T.std(ddof=1) / math.sqrt(T.size)
    assert abs(T.mean() - expected) <= 3 * se + 5e-4


def test_bessel_threshold_mode_decisions():
    full = bessel_lifetimes(4.0, 1.0, -1.0, 6, np.arange(300))
    thr = bessel_lifetimes(4.0, 1.0, -1.0, 6, np.arange(300), threshold=0.18)
    dec = thr["decided"]
    assert np.all(dec >= 0)
    assert np.array_equal(dec == 1, full["T"] <= 0.18)
    assert np.all(bessel_lifetimes(4.0, 1.0, -1.0, 6, np.arange(20), threshold=0.25)["decided"] == 1)


def test_time_change_and_w_examples():
    assert time_change_u(1.0, -1.0, 1.0, -1.0, 4.0) == 0.0
    assert u_rate(1.0, -1.0, 4.0) == 4.0
    assert w_from_xy(1.0, -1.0) == 0.0
    assert w_from_xy(3.0, -1.0) == 0.5
    assert w_from_xy(1e-12, -1.0) == pytest.approx(-1.0, abs=1e-11)
