import json

import numpy as np
import pytest

from chenmap.catalog import CORE_BUILTINS, builtin
from chenmap.errors import IoError, ParseError, SchemaError, UnknownBuiltin
from chenmap.rmap_core import build_bundle
from chenmap.scenario_cli import (
    CSV_HEADER,
    RunReport,
    Status,
    emit_report,
    exit_code,
    load_report,
    load_scenario,
    parse_scenario,
    report_csv,
    report_json,
    run_checks,
    summarize,
)


def doc(**kw):
    return {"schema_version": "1", **kw}


def test_minimal_file_defaults(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(doc(scenario="flat_identity_r3", checks=["general_cfi"])))
    sf = load_scenario(p)
    assert len(sf.points) == 1 and np.all(sf.points[0] == 0)
    assert sf.planes.mode == "indices" and sf.planes.data == ((1, 2),)
    assert sf.checks == ("general_cfi",) and sf.seed == 0 and sf.model is None


@pytest.mark.parametrize(
    "bad,field",
    [
        (doc(scenario="sphere_in_sphere", model={"family": "real", "c": 1, "f1": 1, "f2": 0}), "model"),
        (doc(scenario="sphere_in_sphere", model={"kind": "GCSF"}), "model"),
        (doc(scenario="flat_identity_r3", checks=["gcsf_cfi"]), "checks[0]"),
        (doc(scenario="flat_identity_r3", checks=["nope"]), "checks[0]"),
        (doc(scenario="flat_identity_r3", model="builtin", checks=["gcsf_cfi"]), "checks[0]"),
        (doc(scenario="sphere_in_sphere", model={"kind": "GCSF", "f1": 1, "f2": 0}, checks=["corollary_gcsf"]), "checks[0]"),
        (doc(scenario="sphere_in_sphere", model={"kind": "GSSF", "f1": 1, "f2": 0}), "model.kind"),
        (doc(scenario="sphere_in_sphere", model={"family": "sasakian", "c": 1}), "model.kind"),
        (doc(scenario="sphere_in_sphere", model={"kind": "GCSF", "f1": 1, "f2": 0, "f3": 0}), "model.f3"),
        (doc(scenario="flat_identity_r3", points=[[0, 0]]), "points[0]"),
        (doc(scenario="flat_identity_r3", planes={"mode": "indices", "data": [[1, 1]]}), "planes.data[0]"),
        (doc(scenario="flat_identity_r3", planes={"mode": "grid"}), "planes.mode"),
        (doc(scenario="flat_identity_r3", tolerances={"slack": -1}), "tolerances.slack"),
        (doc(scenario="flat_identity_r3", tolerances={"bogus": 1}), "tolerances.bogus"),
        (doc(scenario="flat_identity_r3", extra=1), "extra"),
        ({"schema_version": "2", "scenario": "flat_identity_r3"}, "schema_version"),
        (doc(scenario="flat_identity_r3", seed=-1), "seed"),
    ],
)
def test_schema_errors_name_the_field(bad, field):
    with pytest.raises(SchemaError) as info:
        parse_scenario(bad)
    assert info.value.field == field


def test_unknown_builtin():
    with pytest.raises(UnknownBuiltin):
        parse_scenario(doc(scenario="klein_bottle"))
    with pytest.raises(UnknownBuiltin):
        parse_scenario(doc(scenario={"builtin": "sphere_in_sphere", "params": {"radius": 2}}))


def test_parse_error_has_position(tmp_path):
    p = tmp_path / "s.json"
    p.write_text('{\n  "schema_version": "1",\n  "scenario": flat\n}')
    with pytest.raises(ParseError) as info:
        load_scenario(p)
    assert (info.value.line, info.value.column) == (3, 15)
    p.write_bytes(b'{"a": "\xff"}')
    with pytest.raises(ParseError):
        load_scenario(p)
    with pytest.raises(IoError):
        load_scenario(tmp_path / "missing.json")


def inline(table):
    return doc(scenario={"target": {"polynomial": table}, "map": {"kind": "identity"}, "rank_min": 2})


def test_polynomial_metric_limits():
    with pytest.raises(SchemaError) as info:
        parse_scenario(inline([[1, 0], [0, [[1, [0, 0]], [1, [5, 0]]]]]))
    assert info.value.field == "scenario.target.polynomial[1][1]"
    with pytest.raises(SchemaError) as info:
        parse_scenario(inline([[1, [[0.1, [1, 0]]]], [0, 1]]))
    assert info.value.field == "scenario.target.polynomial[1][0]"
    with pytest.raises(SchemaError):
        parse_scenario(inline([[1, [[1, [1]]]], [[[1, [1]]], 1]]))


def test_polynomial_metric_runs():
    # warped plane dr^2 + (1 + r^2)^2 dt^2, degree 4
    warp = [[1.0, [0, 0]], [2.0, [2, 0]], [1.0, [4, 0]]]
    sf = parse_scenario(inline([[1, 0], [0, warp]]))
    g = sf.scenario.target.metric(np.array([0.5, 0.0]))
    np.testing.assert_allclose(g, np.diag([1.0, 1.25**2]))


def test_seed_and_scale_overrides():
    sf = parse_scenario(doc(scenario="sphere_in_sphere", points={"random": 2}, seed=3), seed=9, tolerance_scale=2.0)
    assert sf.seed == 9
    assert sf.tolerances.slack == pytest.approx(2e-4)
    again = parse_scenario(doc(scenario="sphere_in_sphere", points={"random": 2}), seed=9)
    np.testing.assert_array_equal(np.array(sf.points), np.array(again.points))


def test_flat_identity_single_record():
    r = run_checks(parse_scenario(doc(scenario="flat_identity_r3", checks=["general_cfi"])))
    assert len(r.records) == 1
    rec = r.records[0]
    assert rec["status"] == "OK" and rec["holds"] and rec["equality"]
    assert exit_code(r) == 0 and r.summary["counts"]["records"] == 1


def test_sphere_in_sphere_three_points():
    sf = parse_scenario(doc(scenario="sphere_in_sphere", points={"random": 3}, checks=["general_cfi"]))
    r = run_checks(sf)
    assert len(r.records) == 3
    assert all(rec["equality"] and abs(rec["slack"]) < 1e-5 for rec in r.records)


def test_rank_deficient_record():
    r = run_checks(parse_scenario(doc(scenario="projection_plumbing", checks=["general_cfi"])))
    assert len(r.records) == 1
    rec = r.records[0]
    assert rec["status"] == "ERROR" and rec["error"].startswith("RankDeficient")
    assert len(r.summary["failures"]) == 1 and exit_code(r) == 3


def test_core_builtins_pass_the_gate():
    for name in CORE_BUILTINS:
        b = builtin(name)
        bundle = build_bundle(b.scenario(), rank_min=1)
        assert bundle.gauss < 1e-3, name


def test_violation_sets_exit_code():
    sf = parse_scenario(doc(scenario="sphere_in_sphere", model={"kind": "GCSF", "f1": -5, "f2": 0},
                            checks=["gcsf_cfi"]))
    r = run_checks(sf)
    assert r.records[0]["status"] == "VIOLATION" and exit_code(r) == 1


def test_gauss_gate_skips_records():
    sf = parse_scenario(doc(scenario="graph_in_cp2", checks=["general_cfi"], tolerances={"gauss": 1e-30}))
    r = run_checks(sf)
    assert r.records[0]["status"] == "SKIPPED" and r.records[0]["error"].startswith("GaussGate")
    assert exit_code(r) == 3


def test_records_are_ordered_and_complete():
    sf = parse_scenario(doc(scenario="cp2_chart", model="builtin", points={"random": 2},
                            planes={"mode": "indices", "data": [[1, 2], [3, 4]]},
                            checks=["gcsf_cfi", "general_cfi", "delta_gcsf"]))
    r = run_checks(sf)
    keys = [(rec["point_index"], rec["plane_id"], rec["name"]) for rec in r.records]
    assert len(keys) == 2 * (2 * 2 + 1)
    assert all(rec["status"] == "OK" for rec in r.records)
    delta = [rec for rec in r.records if rec["name"] == "delta_gcsf"]
    assert all(rec["plane_id"] == "min" and rec["slack"] >= -1e-4 for rec in delta)
    assert r.summary["counts"]["OK"] == len(r.records)
    assert r.summary["min_slack"] == min(rec["slack"] for rec in r.records)


def test_sweep_and_angle_planes():
    sf = parse_scenario(doc(scenario={"builtin": "cosymplectic_xi_range", "params": {"c": 0.5}},
                            model={"family": "cosymplectic", "c": 0.5}, planes={"mode": "sweep", "data": 3},
                            checks=["gssf_cfi", "corollary_gssf"]))
    r = run_checks(sf)
    assert [rec["plane_id"] for rec in r.records] == ["s0", "s0", "s1", "s1", "s2", "s2"]
    assert exit_code(r) == 0
    sf = parse_scenario(doc(scenario="flat_identity_r3", planes={"mode": "angles", "data": [[0.5, 1.0, 0.2]]}))
    assert run_checks(sf).records[0]["plane_id"] == "a0"


def test_inline_polynomial_scenario():
    comps = [[[1, [1, 0, 0]]], [[1, [0, 1, 0]]], [[1, [0, 0, 1]]], [[0.3, [2, 0, 0]], [-0.2, [0, 1, 1]]]]
    sf = parse_scenario(doc(scenario={"target": {"family": "euclidean", "dim": 4},
                                      "map": {"kind": "polynomial", "dim_in": 3, "components": comps}},
                            model={"kind": "GCSF", "f1": 0, "f2": 0}, checks=["general_cfi", "gcsf_cfi", "delta_gcsf"]))
    r = run_checks(sf)
    assert exit_code(r) == 0 and len(r.records) == 3


def test_empty_report():
    r = RunReport([], summarize([]), {"tool": "chenmap"})
    doc_ = json.loads(report_json(r))
    assert doc_["records"] == []
    assert doc_["summary"]["counts"]["records"] == 0
    assert all(v == 0 for v in doc_["summary"]["counts"].values())
    assert doc_["summary"]["min_slack"] is None and doc_["summary"]["failures"] == []
    assert report_csv(r) == ",".join(CSV_HEADER) + "\n"
    assert exit_code(r) == 0


def test_one_record_csv_and_round_trip(tmp_path):
    r = run_checks(parse_scenario(doc(scenario="sphere_in_sphere", checks=["general_cfi"])))
    text = emit_report(r, "csv", tmp_path / "r.csv")
    lines = text.splitlines()
    assert len(lines) == 2 and lines[0] == ",".join(CSV_HEADER)
    assert float(lines[1].split(",")[5]) == r.records[0]["slack"]
    first = emit_report(r, "json", tmp_path / "r.json")
    assert emit_report(load_report(tmp_path / "r.json"), "json") == first
    with pytest.raises(IoError):
        emit_report(r, "json", tmp_path / "missing" / "r.json")
    with pytest.raises(ValueError):
        emit_report(r, "xml")


def test_determinism_and_threads():
    d = doc(scenario="graph_in_cp2", model="builtin", points={"random": 4}, planes={"mode": "sweep", "data": 2},
            checks=["general_cfi", "gcsf_cfi", "delta_gcsf"], seed=123)
    a = report_json(run_checks(parse_scenario(d), threads=1))
    b = report_json(run_checks(parse_scenario(d), threads=4))
    assert a == b
    assert "wall_time_s" not in a
    assert "wall_time_s" in run_checks(parse_scenario(d), timing=True).provenance


def test_status_values():
    assert {s.value for s in Status} == {"OK", "VIOLATION", "ERROR", "SKIPPED"}
