import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from bsle.greens import GreenParams, green
from bsle.harness import (VerifyConfig, c1_grid_oracle, check_rect, estimate_c1_lifetime, estimate_c1_occupation,
                          extended_endpoint_check, green_integral, ks_critical, ks_statistic, law_equivalence,
                          nonattainability_check, occupation_histogram, ratio_flatness, s_nodes, verify_theorem)
from bsle.rng import RngSpec


def test_green_integral_matches_midpoint_sum():
    rect = (0.5, 1.5, -1.5, -0.5)
    n = 400
    xs = 0.5 + (np.arange(n) + 0.5) / n
    ys = -1.5 + (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(xs, ys)
    brute = green(GreenParams(4.0), X, Y).mean()
    assert green_integral(4.0, rect) == pytest.approx(brute, rel=1e-5)
    assert green_integral(4.0, rect, density=lambda x, y: 1.0) == pytest.approx(1.0, rel=1e-9)


def test_check_rect():
    with pytest.raises(ValueError):
        check_rect((1.0, 0.5, -1.0, -0.5))
    with pytest.raises(ValueError):
        check_rect((0.5, 1.0, -1.0, 0.5))


@pytest.mark.parametrize("n", [3, 5, 12, 16])
def test_s_nodes_symmetric_and_exact_for_smooth_functions(n):
    s, w = s_nodes(n)
    assert np.all((s > 0) & (s < 1))
    assert np.allclose(s, 1.0 - s[::-1], atol=1e-15)
    assert np.allclose(w, w[::-1], rtol=1e-12)
    assert w.sum() == pytest.approx(1.0, rel=1e-12 if n >= 12 else 1e-2)
    if n >= 12:
        assert np.dot(w, s * (1 - s)) == pytest.approx(1.0 / 6.0, rel=1e-12)
    with pytest.raises(ValueError):
        s_nodes(1)


def test_lifetime_route_integrand_floor():
    res = estimate_c1_lifetime(4.0, 6, 300, RngSpec(1))
    g = np.array([green(GreenParams(4.0), s, s - 1.0) for s in res.s])
    # 1/T >= 16 on the line x - y = 1
    assert np.all(np.array(res.integrand) >= 8.0 * g)
    assert res.report.value > 16.0 * 0.5 * np.dot(res.weights, g) - 1e-12
    assert res.report.n == 1800


def test_grid_oracle_agrees_with_line_reduction():
    grid = c1_grid_oracle(4.0, RngSpec(2), extent=6, cells_per_unit=2, n_per_cell=300, n_nodes=8,
                          n_per_s=1000)
    line = estimate_c1_lifetime(4.0, 8, 1500, RngSpec(3))
    se = math.hypot(grid.std_error, line.report.std_error)
    assert abs(grid.value - line.report.value) <= 4 * se


def test_occupation_route_agrees_and_se_shrinks():
    rect = (0.5, 1.5, -1.5, -0.5)
    a = estimate_c1_occupation(4.0, rect, 2000, RngSpec(4))
    b = estimate_c1_occupation(4.0, rect, 4000, RngSpec(4))
    assert a.valid and b.valid
    assert 1.2 <= a.report.std_error / b.report.std_error <= 1.7
    assert a.green_integral == pytest.approx(green_integral(4.0, rect))
    assert a.report.step == 0.005 and a.report.tail_tol == 0.0
    line = estimate_c1_lifetime(4.0, 8, 1500, RngSpec(3))
    assert abs(b.report.value - line.report.value) <= 4 * math.hypot(b.report.std_error, line.report.std_error)


def test_ratio_flatness_on_exact_and_noisy_data():
    w = np.array([1.0, 2.0, 3.0, 4.0])
    cov = np.diag([0.01, 0.02, 0.01, 0.03])
    r, z, chi2, df, p = ratio_flatness(2.5 * w, cov, w)
    assert r == pytest.approx(2.5) and chi2 == pytest.approx(0.0, abs=1e-20) and df == 3 and p == 1.0
    rng = np.random.default_rng(0)
    chis = [ratio_flatness(2.5 * w + rng.multivariate_normal(np.zeros(4), cov), cov, w)[2] for _ in range(2000)]
    assert np.mean(chis) == pytest.approx(3.0, rel=0.1)
    assert ratio_flatness(2.5 * w + np.array([1.0, 0, 0, 0]), cov, w)[4] < 1e-6


def test_histogram_small_runs_and_reports():
    res = occupation_histogram(4.0, (0.5, 1.5, -1.5, -0.5), 2, 3000, RngSpec(5))
    assert res.df == 3 and len(res.cell_mean) == 4
    assert sum(res.cell_mean) == pytest.approx(res.pooled_ratio * sum(res.cell_green))
    assert res.passes()


@given(st.integers(5, 60), st.integers(5, 60), st.integers(0, 2 ** 32))
def test_ks_statistic_matches_scipy(n, m, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(size=n), rng.normal(0.3, 1.0, size=m)
    assert ks_statistic(a, b) == pytest.approx(stats.ks_2samp(a, b, method="asymp").statistic, abs=1e-12)


def test_ks_critical_is_the_asymptotic_quantile():
    n, m = 10_000, 10_000
    c = ks_critical(n, m, 0.01)
    assert stats.kstwobign.sf(c * math.sqrt(n * m / (n + m))) == pytest.approx(0.01, rel=1e-4)


def test_law_equivalence_small():
    res = law_equivalence(4.0, 1.0, -1.0, 800, RngSpec(6), rho_step=0.02)
    assert res.bound_fraction == 1.0 and res.max_T_upper <= 0.25
    assert res.ks < res.critical and res.ks_half < res.critical


def test_extended_endpoint_gap_shrinks_with_step():
    res = extended_endpoint_check(4.0, 1.0, -1.0, 60, RngSpec(7), steps=(0.02, 0.005))
    assert res.shrinks()


def test_nonattainability_small():
    out = nonattainability_check(2.0, 100, RngSpec(8))
    assert out["passed"] and out["max_abs_w"] < 1.0 and out["n"] == 300


def test_verify_quick_report_shape():
    cfg = VerifyConfig.quick()
    cfg.parts = ("zero_driver", "bound", "hcap", "nonattain")
    r = verify_theorem(4.0, cfg, RngSpec(9))
    assert [c["id"] for c in r["criteria"]] == [1, 2, 9, 10]
    assert r["passed"] and r["backend"] in ("cython", "python")
