"""Acceptance suite: every criterion at its stated sample size and tolerance.

Each test prints one PASS/FAIL line. The heavy Monte Carlo runs happen once per
module (about five minutes on one core with the compiled backend).
"""

import json
import math

import pytest

from bsle import backend
from bsle.cli import main
from bsle.harness import VerifyConfig, verify_theorem
from bsle.rng import RngSpec

SEED = 20261016


@pytest.fixture(scope="module")
def reports():
    k4 = verify_theorem(4.0, VerifyConfig(), RngSpec(SEED))
    k2 = verify_theorem(2.0, VerifyConfig(parts=("c1", "nonattain")), RngSpec(SEED))
    return {4.0: {c["id"]: c for c in k4["criteria"]}, 2.0: {c["id"]: c for c in k2["criteria"]}}


def report_line(capsys, cid, name, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {cid:2d}] {'PASS' if ok else 'FAIL'}  {name}: {detail}")


def test_criterion_01_zero_driver_oracle(reports, capsys):
    n = reports[4.0][1]["numbers"]
    ok = n["max_rel_tau_error"] <= 1e-9 and abs(n["rect_occupation"] - 0.75) <= 1e-9
    report_line(capsys, 1, "zero-driver oracle", ok,
                f"max rel tau error {n['max_rel_tau_error']:.2e}, occupation {n['rect_occupation']!r}")
    assert ok


def test_criterion_02_lifetime_bound(reports, capsys):
    n = reports[4.0][2]["numbers"]
    ok = n["fraction"] == 1.0 and n["n"] >= 10_000 and n["max_T_upper"] <= 0.25
    report_line(capsys, 2, "lifetime bound", ok,
                f"{n['fraction']:.0%} of {n['n']} paths, max T_upper {n['max_T_upper']:.6f} <= 0.25")
    assert ok


def test_criterion_03_scaling_identity(reports, capsys):
    cases = reports[4.0][3]["numbers"]["cases"]
    ok = all(abs(c["diff"]) <= 3 * c["se"] for c in cases) and all(c["left"]["n"] >= 100_000 for c in cases)
    stated = [c for c in cases if (c["s"], c["r"]) in ((0.5, 2.0), (0.25, 2.0))]
    ok = ok and len(stated) == 2
    report_line(capsys, 3, "scaling identity", ok,
                ", ".join(f"(s={c['s']}, r={c['r']}) z={c['z']:+.2f}" for c in cases))
    assert ok


def test_criterion_04_lifetime_law_equivalence(reports, capsys):
    n = reports[4.0][4]["numbers"]
    margin = n["critical"] - n["ks_half"]
    ok = (n["ks"] < n["critical"] and n["ks_half"] < n["critical"]
          and abs(n["ks"] - n["ks_half"]) < 0.5 * margin and n["n"] >= 10_000)
    report_line(capsys, 4, "lifetime law equivalence", ok,
                f"KS {n['ks']:.4f} -> {n['ks_half']:.4f} (half step), 1% critical {n['critical']:.4f}")
    assert ok


def test_criterion_05_local_martingale(reports, capsys):
    n = reports[4.0][5]["numbers"]
    ratios = n["ratios"]
    ok = (n["times"] == [0.01, 0.02] and n["cap"] == 10.0
          and all(abs(r["value"] - 1) <= 3 * r["std_error"] and r["n"] >= 100_000 for r in ratios))
    report_line(capsys, 5, "local martingale", ok,
                ", ".join(f"t={t}: {r['value']:.5f} +- {r['std_error']:.5f}" for t, r in zip(n["times"], ratios)))
    assert ok


def test_criterion_06_girsanov_transfer(reports, capsys):
    cases = reports[4.0][6]["numbers"]["cases"]
    ok = all(abs(c["diff"]) <= 3 * c["se"] and c["t"] == 0.01 and c["left"]["n"] >= 100_000 for c in cases)
    report_line(capsys, 6, "Girsanov transfer", ok,
                ", ".join(f"(x={c['x']}, y={c['y']}) z={c['z']:+.2f}" for c in cases))
    assert ok


@pytest.mark.parametrize("kappa", [2.0, 4.0])
def test_criterion_07_c1_two_routes(reports, capsys, kappa):
    n = reports[kappa][7]["numbers"]
    pair = n["rect_pair"]
    ok = (abs(n["diff"]) <= 3 * n["combined_se"] and abs(n["rel_diff"]) <= 0.10
          and abs(pair["diff"]) <= 3 * pair["se"] and all(o["valid"] for o in n["occupation"]))
    life = n["lifetime"]["report"]
    report_line(capsys, 7, f"C1 two routes, kappa={kappa:g}", ok,
                f"lifetime {life['value']:.4f} +- {life['std_error']:.4f}, occupation "
                f"{n['occupation_pooled']:.4f} +- {n['occupation_pooled_se']:.4f}, rel diff {n['rel_diff']:+.2%}, "
                f"rectangles z={pair['z']:+.2f}")
    assert ok


def test_criterion_08_occupation_histogram(reports, capsys):
    n = reports[4.0][8]["numbers"]
    ok = (n["m"] == 4 and n["n"] >= 100_000 and n["p_value"] > 0.01 and n["control_p_value"] < 0.01)
    report_line(capsys, 8, "occupation histogram", ok,
                f"chi2 {n['chi2']:.2f} on {n['df']} df (p={n['p_value']:.3f}); "
                f"G=1 control chi2 {n['control_chi2']:.1f} (p={n['control_p_value']:.1e})")
    assert ok


@pytest.mark.parametrize("kappa", [2.0, 4.0])
def test_criterion_09_boundary_nonattainability(reports, capsys, kappa):
    n = reports[kappa][9]["numbers"]
    ok = n["fraction_inside"] == 1.0 and n["max_abs_w"] < 1.0
    report_line(capsys, 9, f"boundary non-attainability, kappa={kappa:g}", ok,
                f"{n['fraction_inside']:.0%} of {n['n']} paths, max |W| {n['max_abs_w']:.6f}")
    assert ok


def test_criterion_10_hcap_normalization(reports, capsys):
    n = reports[4.0][10]["numbers"]
    ok = n["residual_100"] < 1e-3 and n["ratio"] >= 3.5 and abs(n["brownian_median_ratio"] - 4.0) <= 0.4
    report_line(capsys, 10, "hcap normalization", ok,
                f"residual {n['residual_100']:.2e} at R=100, x{n['ratio']:.2f} at R=200 (zero driver), "
                f"median x{n['brownian_median_ratio']:.3f} (Brownian drivers)")
    assert ok


def test_criterion_11_reproducibility(tmp_path, capsys):
    argv = ["verify", "--kappas", "2,4", "--preset", "quick", "--seed", str(SEED)]
    outs = []
    for tag, workers in (("a", 1), ("b", 1), ("c", 8)):
        out = tmp_path / f"{tag}.json"
        code = main(argv + ["--workers", str(workers), "--out", str(out)])
        assert code in (0, 1)
        outs.append(out.read_bytes())
    doc = json.loads(outs[0])
    ok = outs[0] == outs[1] == outs[2] and len(doc["reports"]) == 2
    report_line(capsys, 11, "reproducibility", ok,
                f"verify output identical across runs and workers 1 vs 8 ({len(outs[0])} bytes, backend {backend})")
    assert ok
