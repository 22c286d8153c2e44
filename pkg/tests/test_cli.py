import json

import pytest

from torusgen.cli import dumps, main

GAMMA = ["--gamma", "0.5"]


def _run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def test_constants(tmp_path, capsys):
    code, out = _run(tmp_path, "constants", *GAMMA, "--a", "2.0")
    assert code == 0
    d = json.loads((out / "constants.json").read_text())
    assert d["constants"]["r_e"] == pytest.approx(1.3065629648763766)
    assert d["manifest_hash"] == json.loads((out / "manifest.json").read_text())["hash"]
    assert "levels" in d


def test_constants_gamma_one(tmp_path):
    code, out = _run(tmp_path, "constants", "--gamma", "1.0")
    d = json.loads((out / "constants.json").read_text())
    assert code == 0 and d["constants"]["r_i"] == pytest.approx(1.0)


def test_validation_exit(tmp_path):
    assert _run(tmp_path, "constants", "--gamma", "1.5")[0] == 2
    assert _run(tmp_path, "orbit", *GAMMA, "--class", "2++", "--b", "1.0")[0] == 2
    assert _run(tmp_path, "orbit", "--gamma", "0.9", "--class", "1+", "--b", "1.1")[0] == 2
    assert _run(tmp_path, "scan", *GAMMA, "--class", "0e", "--step", "0")[0] == 2
    assert _run(tmp_path, "surface", *GAMMA, "--class", "2++", "--bracket", "1.2", "1.201",
                "--eps", "0.5")[0] == 2


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"gamma": 0.5, "Mx": 2.0, "My": 2.0}))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"gamma": 0.5, "colour": 1}))
    assert _run(tmp_path, "constants", "--config", str(cfg))[0] == 0
    assert _run(tmp_path, "constants", "--config", str(bad))[0] == 2


def test_orbit(tmp_path):
    code, out = _run(tmp_path, "orbit", *GAMMA, "--class", "2++", "--b", "1.2")
    d = json.loads((out / "orbit.json").read_text())
    assert code == 0 and d["period_rel_diff"] < 1e-6
    assert (out / "orbit.csv").read_text().startswith("phi,C,S")


def test_scan_zero_perturbation(tmp_path):
    z = tmp_path / "zero.json"
    z.write_text(json.dumps({"X": [], "Y": []}))
    code, out = _run(tmp_path, "scan", *GAMMA, "--class", "2++", "--perturbation", str(z),
                     "--step", "0.05")
    d = json.loads((out / "brackets.json").read_text())
    assert code == 0 and d["classes"][0]["brackets"] == []


def test_scan_outer_bracket(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"gamma": 0.5, "Mx": 2.0, "My": 2.0}))
    code, out = _run(tmp_path, "scan", "--config", str(cfg), "--class", "0e")
    d = json.loads((out / "brackets.json").read_text())
    assert d["classes"][0]["refined"] == [[1.5, 1.501]]


def test_pipeline_and_determinism(tmp_path):
    args = ["--gamma", "0.5", "--class", "2++", "--bracket", "1.2", "1.201"]
    assert main(["admissible", *args, "--out", str(tmp_path / "a")]) == 0
    assert json.loads((tmp_path / "a" / "admissible.json").read_text())["admissible"]
    assert main(["surface", *args, "--eps", "0.01", "--nt", "8", "--nphi", "32",
                 "--out", str(tmp_path / "s")]) == 0
    s = json.loads((tmp_path / "s" / "surface.json").read_text())
    assert s["enclosed_equilibria"] == [[1, 1]]
    assert main(["surface", *args, "--eps", "0.01", "--nt", "8", "--nphi", "32",
                 "--out", str(tmp_path / "s2")]) == 0
    for f in ("surface.json", "surface.csv"):
        assert (tmp_path / "s" / f).read_bytes() == (tmp_path / "s2" / f).read_bytes()


def test_verify_command(tmp_path):
    code, out = _run(tmp_path, "verify", *GAMMA, "--class", "2++", "--bracket", "1.2", "1.201",
                     "--jobs", "2")
    d = json.loads((out / "verify.json").read_text())
    assert code == 0 and 1.7 <= d["slope"] <= 2.3
    assert "runtime_s" not in d


def test_dumps_format():
    text = dumps({"a": 0.1, "b": [1, 2.0, float("nan")], "c": True, "d": None})
    assert '"a": 0.10000000000000001' in text and "null" in text and "2.0" in text
    assert json.loads(text)["c"] is True
