import json

import numpy as np
import pytest

from bsle.cli import main
from bsle.loewner import DrivingPath


def run(*argv):
    return main([str(a) for a in argv])


def read_csv_values(path):
    lines = [l for l in open(path) if not l.startswith("#")]
    return lines[0].strip().split(","), [l.strip().split(",") for l in lines[1:]]


def test_drive_is_deterministic(tmp_path):
    for d in ("a", "b"):
        assert run("drive", "--kappa", 4, "--seed", 3, "--n", 2, "--out", tmp_path / d) == 0
    for name in ("driver_00000.csv", "driver_00001.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    p = DrivingPath.from_csv(tmp_path / "a" / "driver_00000.csv")
    assert p.step == 0.01 and p.n_steps == 100
    text = (tmp_path / "a" / "driver_00000.csv").read_text()
    assert text.startswith("# bsle 0.1.0\n# config {")


def test_rho_drive_writes_sidecar(tmp_path):
    assert run("drive", "--kappa", 4, "--rho", -4, -4, "--step", 0.005, "--out", tmp_path) == 0
    side = json.loads((tmp_path / "driver_00000.json").read_text())
    assert side["T"] <= side["T_upper"] <= 0.25
    p = DrivingPath.from_csv(tmp_path / "driver_00000.csv")
    assert p.lifetime_index is not None


def test_usage_errors_exit_2(tmp_path, capsys):
    assert run("drive", "--out", tmp_path) == 2
    assert "--kappa" in capsys.readouterr().err
    assert run("drive", "--kappa", 6, "--out", tmp_path) == 2
    assert run("occupation", "--kappa", 4, "--rect", "1,0.5,-1,-0.5") == 2
    assert run("verify", "--parts", "nonsense") == 2
    assert run("frobnicate") == 2
    assert run("c1", "--kappa", 4) == 2


def test_zero_driver_occupation(tmp_path):
    out = tmp_path / "occ.csv"
    assert run("occupation", "--driver", "zero", "--rect", "1,2,-2,-1", "--out", out) == 0
    cols, rows = read_csv_values(out)
    assert cols == ["path_index", "seed_stream", "value", "censored_flag"]
    assert float(rows[0][2]) == pytest.approx(0.75, abs=1e-9) and rows[0][3] == "0"


def test_brownian_occupation_rows(tmp_path):
    out = tmp_path / "occ.csv"
    assert run("occupation", "--kappa", 4, "--n", 20, "--stream", 5, "--out", out) == 0
    _, rows = read_csv_values(out)
    assert len(rows) == 20 and rows[3][1] == "8"
    assert all(float(r[2]) >= 0 for r in rows)


def test_weld_zero_driver(tmp_path):
    out = tmp_path / "weld.csv"
    assert run("weld", "--driver", "zero", "--step", 0.01, "--t-max", 1.0, "--mesh-n", 20, "--out", out) == 0
    _, rows = read_csv_values(out)
    for side, x, tau in rows:
        x, tau = float(x), float(tau)
        if x * x / 4 < 1.0 - 0.01:
            assert tau == pytest.approx(x * x / 4, rel=1e-9)


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults for this run\nkappa = 2\nstep = 0.05\nt-max = 0.5\n")
    assert run("drive", "--config", cfg, "--out", tmp_path / "a") == 0
    assert DrivingPath.from_csv(tmp_path / "a" / "driver_00000.csv").n_steps == 10
    assert run("drive", "--config", cfg, "--step", 0.1, "--out", tmp_path / "b") == 0
    assert DrivingPath.from_csv(tmp_path / "b" / "driver_00000.csv").n_steps == 5
    cfg.write_text("bogus = 1\n")
    assert run("drive", "--config", cfg, "--out", tmp_path / "c") == 2


def test_c1_and_martingale_commands(tmp_path):
    out = tmp_path / "c1.json"
    assert run("c1", "--kappa", 4, "--route", "lifetime", "--n", 200, "--nodes", 4, "--out", out) == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["report"]["n"] == 800 and doc["config"]["route"] == "lifetime"
    assert "workers" not in doc["config"]
    out = tmp_path / "m.json"
    code = run("martingale", "--kappa", 4, "--n", 2000, "--step", 0.001, "--out", out)
    doc = json.loads(out.read_text())
    assert code == (0 if doc["passed"] else 1)


VERIFY = ("verify", "--kappas", "4", "--preset", "quick", "--parts", "zero_driver,martingale,nonattain",
          "--seed", 11, "--chunk", 250)


def test_verify_identical_across_worker_counts(tmp_path):
    outs = []
    for w in (1, 8):
        out = tmp_path / f"v{w}.json"
        assert run(*VERIFY, "--workers", w, "--out", out) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_interrupted_verify_resumes_identically(tmp_path):
    ref = tmp_path / "ref.json"
    assert run(*VERIFY, "--out", ref) == 0
    ck = tmp_path / "ck.json"
    out = tmp_path / "res.json"
    assert run(*VERIFY, "--checkpoint", ck, "--stop-after-chunks", 3, "--out", out) == 3
    assert not out.exists() and ck.exists()
    assert run(*VERIFY, "--checkpoint", ck, "--workers", 3, "--out", out) == 0
    assert out.read_bytes() == ref.read_bytes()


def test_corrupt_checkpoint_exits_3(tmp_path, capsys):
    ck = tmp_path / "ck.json"
    assert run(*VERIFY, "--checkpoint", ck, "--stop-after-chunks", 1) == 3
    doc = json.loads(ck.read_text())
    doc["sha256"] = "0" * 64
    ck.write_text(json.dumps(doc))
    assert run(*VERIFY, "--checkpoint", ck) == 3
    assert "integrity" in capsys.readouterr().err
    # a checkpoint from another configuration is refused too
    ck2 = tmp_path / "ck2.json"
    assert run(*VERIFY, "--checkpoint", ck2, "--stop-after-chunks", 1) == 3
    assert run(*VERIFY[:-2], "--seed", 12, "--chunk", 250, "--checkpoint", ck2) == 3
