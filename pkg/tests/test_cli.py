import json

import pytest

from chenmap.catalog import catalog_names
from chenmap.cli import EXIT_CONFIG, EXIT_ENGINE, EXIT_OK, EXIT_VIOLATION, main


def write(tmp_path, doc, name="s.json"):
    p = tmp_path / name
    p.write_text(json.dumps({"schema_version": "1", **doc}))
    return str(p)


def test_verify_ok_to_stdout(tmp_path, capsys):
    path = write(tmp_path, {"scenario": "flat_identity_r3", "checks": ["general_cfi"]})
    assert main(["verify", "--scenario", path]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["records"][0]["equality"] is True


def test_verify_violation(tmp_path):
    path = write(tmp_path, {"scenario": "sphere_in_sphere", "model": {"kind": "GCSF", "f1": -5, "f2": 0},
                            "checks": ["gcsf_cfi"]})
    assert main(["verify", "--scenario", path]) == EXIT_VIOLATION


def test_verify_config_errors(tmp_path, capsys):
    assert main(["verify", "--scenario", str(tmp_path / "none.json")]) == EXIT_CONFIG
    path = write(tmp_path, {"scenario": "flat_identity_r3", "checks": ["gcsf_cfi"]})
    assert main(["verify", "--scenario", path]) == EXIT_CONFIG
    assert "checks[0]" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["verify", "--scenario", path, "--seed", "-1"])
    assert info.value.code == 2


def test_verify_engine_error(tmp_path):
    path = write(tmp_path, {"scenario": "projection_plumbing", "checks": ["general_cfi"]})
    assert main(["verify", "--scenario", path]) == EXIT_ENGINE


def test_verify_csv_out(tmp_path, capsys):
    path = write(tmp_path, {"scenario": "sphere_in_sphere", "points": {"random": 2}})
    out = tmp_path / "r.csv"
    assert main(["verify", "--scenario", path, "--format", "csv", "--out", str(out), "--seed", "4"]) == EXIT_OK
    assert capsys.readouterr().out == ""
    assert len(out.read_text().splitlines()) == 3


def test_catalog_lists_builtins(capsys):
    assert main(["catalog"]) == EXIT_OK
    out = capsys.readouterr().out
    for name in catalog_names():
        assert name in out


def test_delta_subcommand(tmp_path, capsys):
    path = write(tmp_path, {"scenario": "cp2_chart", "model": "builtin", "checks": ["general_cfi"]})
    assert main(["delta", "--scenario", path, "--mode", "exhaustive", "--budget", "16"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert [r["name"] for r in doc["records"]] == ["delta_gcsf"]
    assert doc["provenance"]["search_mode"] == "exhaustive_grid"
    assert main(["delta", "--scenario", path, "--mode", "multistart", "--budget", "4"]) == EXIT_OK
    capsys.readouterr()
    assert main(["delta", "--scenario", path, "--budget", "10"]) == EXIT_CONFIG
    assert main(["delta", "--scenario", path, "--budget", "0"]) == EXIT_CONFIG
    bare = write(tmp_path, {"scenario": "flat_identity_r3"}, "bare.json")
    assert main(["delta", "--scenario", bare]) == EXIT_CONFIG


def test_selftest_passes(capsys):
    assert main(["selftest"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 6 and all(line.startswith("PASS") for line in lines)
