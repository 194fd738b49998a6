import json
import subprocess
import sys

import numpy as np
import pytest

from corpus import BAND, thick_band, with_whiskers, curve
from ifslab.boxdim import random_chain, write_cloud_csv
from ifslab.cli import main
from ifslab.continua import write_pbm


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)])


def test_finite_oracle(tmp_path, capsys):
    assert run(tmp_path, "finite-oracle", "--models", "500", "--max-n", "12", "--seed", "7") == 0
    assert "9/9 equivalent in 500/500 models" in capsys.readouterr().out
    data = json.loads((tmp_path / "finite_oracle.json").read_text())
    assert data["agree"] == data["models"] == 500


def test_usage_errors(tmp_path, capsys):
    assert run(tmp_path, "finite-oracle", "--models", "5") == 1
    assert "--seed is required" in capsys.readouterr().err
    assert run(tmp_path, "bogus") == 1
    assert main([]) == 1
    assert run(tmp_path, "boxdim", "--in", str(tmp_path / "missing.csv")) == 1


def test_frontier_exit_codes(tmp_path, capsys):
    write_pbm(tmp_path / "thick.pbm", thick_band())
    assert run(tmp_path / "a", "frontier", "--in", str(tmp_path / "thick.pbm"),
               "--band", *map(str, BAND)) == 2
    assert "NotEmptyInterior" in capsys.readouterr().out
    K = with_whiskers(curve(0.5), [(10, 8, 1)])
    write_pbm(tmp_path / "w.pbm", K)
    assert run(tmp_path / "b", "frontier", "--in", str(tmp_path / "w.pbm"),
               "--band", *map(str, BAND)) == 0
    assert (tmp_path / "b" / "frontier.pbm").exists()
    assert (tmp_path / "b" / "frontier.png").exists()


def test_boxdim(tmp_path, capsys):
    write_cloud_csv(tmp_path / "c.csv", random_chain(2000, np.random.default_rng(0)))
    assert run(tmp_path, "boxdim", "--in", str(tmp_path / "c.csv")) == 0
    data = json.loads((tmp_path / "boxdim.json").read_text())
    assert data["chain"] is True and data["slope"] <= 1.15


def test_coverage_and_detect_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert run(tmp_path / sub, "coverage", "--budget", "300") == 0
        assert run(tmp_path / sub, "detect") == 0
    for name in ("coverage.csv", "coverage.json", "coverage.pgm", "coverage_map.png",
                 "candidates.csv", "family.json", "family.pgm", "family.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    fam = json.loads((tmp_path / "a" / "family.json").read_text())
    assert len(fam["members"]) == 50


def test_jacobian_audit(tmp_path):
    assert run(tmp_path, "jacobian-audit", "--points", "200", "--seed", "3") == 0
    spec = tmp_path / "kick.json"
    spec.write_text(json.dumps({"kind": "kicked_twist", "params": {"k": 1.2}}))
    assert run(tmp_path, "jacobian-audit", "--config", str(spec), "--seed", "3") == 0
    assert run(tmp_path, "jacobian-audit", "--points", "50", "--seed", "3",
               "--tol", "1e-14") == 2


def test_separate(tmp_path, capsys):
    assert run(tmp_path, "separate", "--seed", "1", "--no-figures") == 0
    data = json.loads((tmp_path / "outcome.json").read_text())
    assert data["pairs_verified"] == 2500
    assert not list(tmp_path.glob("*.png"))
    cfg = tmp_path / "neg.json"
    cfg.write_text(json.dumps({"t": [0, 0, 0], "check_conjugation": False}))
    assert run(tmp_path / "neg", "separate", "--seed", "1", "--config", str(cfg)) == 2
    fails = json.loads((tmp_path / "neg" / "verification_failures.json").read_text())
    assert len(fails["pairs"]) == 144


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "ifslab.cli", "finite-oracle", "--models", "20",
                        "--seed", "1", "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "20/20" in r.stdout
