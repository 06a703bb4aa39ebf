import json
import subprocess
import sys

import numpy as np
import pytest

from depkit.cli import build_parser, main
from depkit.features import read_feature_csv
from depkit.probability import dsbs, save_joint


@pytest.fixture
def dist(tmp_path):
    p = tmp_path / "d.json"
    save_joint(dsbs(0.5), p)
    return p


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_validate(dist, capsys):
    assert main(["validate", str(dist)]) == 0
    assert _json(capsys)["mutual_information"] == pytest.approx(0.13081203594113697)


def test_validate_bad(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"x": ["a", "b"], "y": ["0", "1"], "p": [[0.5, 0.5], [0.0, 0.0]]}))
    assert main(["validate", str(p)]) == 2
    assert "error" in capsys.readouterr().err


def test_samples_with_smoothing(tmp_path, capsys):
    p = tmp_path / "s.csv"
    p.write_text("x,y\na,0\nb,1\n")
    assert main(["validate", str(p)]) == 2
    capsys.readouterr()
    assert main(["validate", str(p), "--smoothing", "1e-6"]) == 0


def test_decompose(dist, capsys):
    assert main(["decompose", str(dist)]) == 0
    out = _json(capsys)
    assert out["sigma"] == pytest.approx([0.5])
    assert out["passed"]


def test_learn(dist, tmp_path, capsys):
    out = tmp_path / "f.csv"
    rc = main(["learn", "--loss", "nested_h(k=1) + 0.01*l2(fg)", "--dist", str(dist), "--out", str(out)])
    assert rc == 0
    assert _json(capsys)["value"] == pytest.approx(-0.1152, abs=1e-9)
    f = read_feature_csv(out)
    g = read_feature_csv(tmp_path / "f_g.csv")
    assert f.k == g.k == 1
    assert abs(f.values[0, 0]) == pytest.approx(np.sqrt(0.48), abs=1e-4)


def test_learn_needs_k(dist, capsys):
    assert main(["learn", "--loss", "nested_h()", "--dist", str(dist)]) == 2


def test_verify_dloss(capsys):
    assert main(["verify-dloss", "--loss", "nested_h()", "--trials", "50"]) == 0
    out = _json(capsys)
    assert out["substitution"]["passed"] and out["projection"]["passed"]
    assert main(["verify-dloss", "--loss", "raw_index()", "--trials", "50"]) == 1


def test_bad_spec(capsys):
    assert main(["verify-dloss", "--loss", "foo()", "--trials", "5"]) == 2


def test_invariance_json(capsys):
    assert main(["invariance", "--trials", "5", "--format", "json"]) == 0
    assert _json(capsys)["passed"]


def test_collapse(capsys):
    assert main(["collapse", "--samples", "12", "--classes", "3", "--loss", "nested_h"]) == 0
    assert capsys.readouterr().out.startswith("PASS collapse")


def test_adapter(dist, tmp_path, capsys):
    out = tmp_path / "bundle.json"
    rc = main(["adapter", "--dist", str(dist), "--loss", "nested_h(k=1)",
               "--lambda-grid", "0.001,0.01,0.05", "--tune", "--out", str(out)])
    assert rc == 0
    summary = _json(capsys)
    assert summary["passed"] and summary["substitution_dev"] <= 1e-12
    bundle = json.loads(out.read_text())
    assert set(bundle) >= {"grid", "phi", "psi", "interface"}
    assert len(bundle["phi"]) == 3


def test_adapter_placeholder(dist, capsys):
    rc = main(["adapter", "--dist", str(dist), "--loss", "logloss(k=2) + {lambda}*l2(fg)",
               "--lambda-grid", "0.01,0.1"])
    assert rc == 0
    assert _json(capsys)["grid"] == [0.01, 0.1]


def test_seed_env(monkeypatch):
    monkeypatch.setenv("DEPKIT_SEED", "17")
    assert build_parser().parse_args(["invariance"]).seed == 17
    monkeypatch.delenv("DEPKIT_SEED")
    assert build_parser().parse_args(["invariance"]).seed == 0


def test_console_entry(dist):
    r = subprocess.run([sys.executable, "-m", "depkit.cli", "validate", str(dist)], capture_output=True, text=True)
    assert r.returncode == 0 and '"valid": true' in r.stdout
