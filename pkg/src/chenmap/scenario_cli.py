"""Scenario files, check orchestration and report emission.

A scenario file is UTF-8 JSON with ``schema_version`` ``"1"``::

    {
      "schema_version": "1",
      "scenario": "sphere_in_sphere" | {"builtin": name, "params": {...}}
                  | {"source": chart | "induced", "target": chart, "map": map, "rank_min": 3},
      "model": "builtin" | {"family": ..., "c": ..., "alpha": ...} | {"kind": ..., "f1": ..., "f2": ..., "f3": ...},
      "points": [[...], ...] | {"random": k},
      "planes": {"mode": "indices" | "angles" | "sweep", "data": ...},
      "checks": ["general_cfi", ...],
      "tolerances": {"slack": 1e-4, ...},
      "seed": 0
    }

Charts are ``{"family": "euclidean" | "sphere" | "fubini_study" | "polar", ...}``
or ``{"polynomial": [[terms, ...], ...]}`` with terms ``[coef, [exponents]]``.
Maps are ``{"kind": "identity" | "linear" | "polynomial" | "sphere_embedding", ...}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from chenmap import __version__
from chenmap.catalog import STRUCTURES, Builtin, builtin
from chenmap.chart_geometry import MetricChart
from chenmap.chen_inequalities import (
    InequalityReport,
    plane_coefficients,
    verify_corollary_gcsf,
    verify_corollary_gssf,
    verify_gcsf_cfi,
    verify_general_cfi,
    verify_gssf_cfi,
)
from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.delta_invariants import (
    EXHAUSTIVE,
    MULTISTART,
    DeltaReport,
    plane_from_angles,
    verify_delta_bound_gcsf,
    verify_delta_bound_gssf,
    verify_harmonic_corollaries,
)
from chenmap.errors import EngineError, IoError, ParseError, SchemaError
from chenmap.geometries import (
    AnalyticMap,
    euclidean_chart,
    fubini_study_chart,
    linear_map,
    polar_chart,
    polynomial_chart,
    pullback_chart,
    sphere_embedding,
    stereographic_sphere_chart,
)
from chenmap.polynomial import Polynomial
from chenmap.rmap_core import MapBundle, build_bundle
from chenmap.space_forms import GCSF, GCSF_FAMILIES, GSSF, GSSF_FAMILIES, SpaceFormModel, family_kind

SCHEMA_VERSION = "1"
MAX_POLY_DEGREE = 4
DEFAULT_SWEEP_PLANES = 16

PLANE_CHECKS = ("general_cfi", "gcsf_cfi", "gssf_cfi", "corollary_gcsf", "corollary_gssf")
POINT_CHECKS = ("delta_gcsf", "delta_gssf", "harmonic_delta")
CHECKS = PLANE_CHECKS + POINT_CHECKS
DELTA_CHECKS = POINT_CHECKS

# checks that only make sense for one model kind
_KIND_OF = {"gcsf_cfi": GCSF, "corollary_gcsf": GCSF, "delta_gcsf": GCSF,
            "gssf_cfi": GSSF, "corollary_gssf": GSSF, "delta_gssf": GSSF}

_TOP_KEYS = {"schema_version", "scenario", "model", "points", "planes", "checks", "tolerances", "seed"}

CSV_HEADER = ("name", "point_index", "plane_id", "lhs", "rhs", "slack", "holds", "equality", "error")


class Status(str, Enum):
    OK = "OK"
    VIOLATION = "VIOLATION"
    ERROR = "ERROR"
    SKIPPED = "SKIPPED"


# ---------------------------------------------------------------------------
# scenario file


@dataclass(frozen=True)
class ModelSpec:
    model: SpaceFormModel
    family: str | None
    c: float
    alpha: float
    xi_case: str | None
    spec: dict


@dataclass(frozen=True)
class PlaneSpec:
    mode: str
    data: tuple  # index pairs, angle tuples, or (count,)

    def ids(self) -> list[str]:
        if self.mode == "indices":
            return [f"{i}-{j}" for i, j in self.data]
        if self.mode == "angles":
            return [f"a{k}" for k in range(len(self.data))]
        return [f"s{k}" for k in range(self.data[0])]


@dataclass(frozen=True)
class ScenarioFile:
    schema_version: str
    name: str
    scenario: Builtin
    model: ModelSpec | None
    points: tuple
    planes: PlaneSpec
    checks: tuple
    tolerances: Tolerances
    seed: int
    spec: dict = field(default_factory=dict)


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(where, f"expected a finite number, got {value!r}")
    return float(value)


def _integer(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise SchemaError(where, f"must be >= {minimum}, got {value}")
    return value


def _mapping(value, where: str, allowed: set) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(where, f"expected an object, got {type(value).__name__}")
    extra = set(value) - allowed
    if extra:
        raise SchemaError(f"{where}.{sorted(extra)[0]}", "unknown field")
    return value


def _polynomial(terms, nvars: int, where: str) -> Polynomial:
    if isinstance(terms, (int, float)) and not isinstance(terms, bool):
        return Polynomial.constant(nvars, _number(terms, where))
    if not isinstance(terms, list):
        raise SchemaError(where, "expected a number or a list of [coef, [exponents]] terms")
    parsed = []
    for k, term in enumerate(terms):
        tw = f"{where}[{k}]"
        if not (isinstance(term, list) and len(term) == 2 and isinstance(term[1], list)):
            raise SchemaError(tw, "term must be [coef, [exponents]]")
        exps = [_integer(e, tw, 0) for e in term[1]]
        if len(exps) != nvars:
            raise SchemaError(tw, f"expected {nvars} exponents, got {len(exps)}")
        parsed.append((_number(term[0], tw), exps))
    poly = Polynomial.from_terms(nvars, parsed) if parsed else Polynomial.constant(nvars, 0.0)
    if poly.degree > MAX_POLY_DEGREE:
        raise SchemaError(where, f"degree {poly.degree} exceeds {MAX_POLY_DEGREE}")
    return poly


def _chart(spec, where: str) -> MetricChart:
    if not isinstance(spec, dict):
        raise SchemaError(where, "expected a chart object")
    if "polynomial" in spec:
        _mapping(spec, where, {"polynomial"})
        rows = spec["polynomial"]
        if not (isinstance(rows, list) and rows and all(isinstance(r, list) and len(r) == len(rows) for r in rows)):
            raise SchemaError(f"{where}.polynomial", "expected a square table of polynomial entries")
        n = len(rows)
        entries = [[_polynomial(rows[i][j], n, f"{where}.polynomial[{i}][{j}]") for j in range(n)] for i in range(n)]
        for i in range(n):
            for j in range(i):
                if entries[i][j] != entries[j][i]:
                    raise SchemaError(f"{where}.polynomial[{i}][{j}]", "metric table must be symmetric")
        return polynomial_chart(entries, name="polynomial")
    _mapping(spec, where, {"family", "dim", "c"})
    fam = spec.get("family")
    c = _number(spec.get("c", 1.0), f"{where}.c")
    if fam == "polar":
        return polar_chart()
    dim = _integer(spec.get("dim"), f"{where}.dim", 1)
    if fam == "euclidean":
        return euclidean_chart(dim)
    if fam == "sphere":
        return stereographic_sphere_chart(dim, c)
    if fam == "fubini_study":
        if dim % 2:
            raise SchemaError(f"{where}.dim", "fubini_study needs an even real dimension")
        return fubini_study_chart(dim // 2, c)
    raise SchemaError(f"{where}.family", f"unknown chart family {fam!r}")


def _map(spec, dim_in: int | None, dim_out: int, where: str) -> AnalyticMap:
    if not isinstance(spec, dict):
        raise SchemaError(where, "expected a map object")
    kind = spec.get("kind")
    if kind == "identity":
        _mapping(spec, where, {"kind"})
        return linear_map(np.eye(dim_out))
    if kind == "linear":
        _mapping(spec, where, {"kind", "matrix"})
        A = spec.get("matrix")
        if not (isinstance(A, list) and A and all(isinstance(r, list) and len(r) == len(A[0]) for r in A)):
            raise SchemaError(f"{where}.matrix", "expected a rectangular matrix")
        A = np.array([[_number(v, f"{where}.matrix") for v in row] for row in A])
        if A.shape[0] != dim_out:
            raise SchemaError(f"{where}.matrix", f"expected {dim_out} rows, got {A.shape[0]}")
        return linear_map(A)
    if kind == "polynomial":
        _mapping(spec, where, {"kind", "dim_in", "components"})
        comps = spec.get("components")
        if not isinstance(comps, list) or len(comps) != dim_out:
            raise SchemaError(f"{where}.components", f"expected {dim_out} component polynomials")
        m = _integer(spec.get("dim_in", dim_in), f"{where}.dim_in", 1)
        polys = [_polynomial(p, m, f"{where}.components[{k}]") for k, p in enumerate(comps)]
        return AnalyticMap(m, dim_out, lambda x: np.array([p(x) for p in polys]),
                           lambda x: np.array([p.gradient(x) for p in polys]))
    if kind == "sphere_embedding":
        _mapping(spec, where, {"kind", "c"})
        c = _number(spec.get("c", 1.0), f"{where}.c")
        if not c > 0:
            raise SchemaError(f"{where}.c", "sphere_embedding needs c > 0")
        return sphere_embedding(dim_out - 1, c)
    raise SchemaError(f"{where}.kind", f"unknown map kind {kind!r}")


def _inline_scenario(spec: dict) -> Builtin:
    _mapping(spec, "scenario", {"source", "target", "map", "rank_min", "point", "box", "name"})
    if "target" not in spec or "map" not in spec:
        raise SchemaError("scenario", "inline scenarios need 'target' and 'map'")
    target = _chart(spec["target"], "scenario.target")
    src_spec = spec.get("source", "induced")
    source = None if src_spec == "induced" else _chart(src_spec, "scenario.source")
    f = _map(spec["map"], None if source is None else source.dim, target.dim, "scenario.map")
    if source is None:
        source = pullback_chart(target, f, name="induced")
    if f.dim_in != source.dim:
        raise SchemaError("scenario.map", f"map takes {f.dim_in} coordinates, source has {source.dim}")
    rank_min = _integer(spec.get("rank_min", 3), "scenario.rank_min", 1)
    point = spec.get("point")
    point = np.zeros(source.dim) if point is None else _point(point, source.dim, "scenario.point")
    box = _number(spec.get("box", 0.3), "scenario.box")
    name = spec.get("name", "inline")
    if not isinstance(name, str):
        raise SchemaError("scenario.name", "expected a string")
    return Builtin(name, "inline scenario", source, target, f, point, box, rank_min)


def _scenario(spec) -> Builtin:
    if isinstance(spec, str):
        return builtin(spec)
    if isinstance(spec, dict) and "builtin" in spec:
        _mapping(spec, "scenario", {"builtin", "params"})
        if not isinstance(spec["builtin"], str):
            raise SchemaError("scenario.builtin", "expected a built-in name")
        params = spec.get("params", {})
        if not isinstance(params, dict):
            raise SchemaError("scenario.params", "expected an object")
        clean = {}
        for k, v in params.items():
            if k == "seed":
                clean[k] = _integer(v, "scenario.params.seed", 0)
            else:
                clean[k] = _number(v, f"scenario.params.{k}")
        return builtin(spec["builtin"], **clean)
    if isinstance(spec, dict):
        return _inline_scenario(spec)
    raise SchemaError("scenario", "expected a built-in name or an object")


def _structure(spec, kind: str, n: int, c: float, fallback: dict):
    if spec is None:
        if fallback:
            return next(iter(fallback.values()))
        spec = "standard_complex" if kind == GCSF else "product_cosymplectic"
    if isinstance(spec, dict):
        _mapping(spec, "model.structure", {"name", "c"})
        name, c = spec.get("name"), _number(spec.get("c", c), "model.structure.c")
    else:
        name = spec
    if name not in STRUCTURES:
        raise SchemaError("model.structure", f"unknown structure {name!r}")
    try:
        return STRUCTURES[name](n, c)
    except ValueError as exc:
        raise SchemaError("model.structure", str(exc)) from None


def _model(spec, b: Builtin) -> ModelSpec | None:
    if spec is None:
        return None
    if spec == "builtin":
        if b.model is None:
            raise SchemaError("model", f"scenario {b.name!r} has no built-in model")
        return ModelSpec(b.model, b.family, b.c, 0.0, None, {"builtin": b.name})
    _mapping(spec, "model", {"kind", "family", "c", "alpha", "f1", "f2", "f3", "structure", "xi_case"})
    has_family = "family" in spec
    has_f = any(k in spec for k in ("f1", "f2", "f3"))
    if has_family == has_f:
        raise SchemaError("model", "give exactly one of (family, c[, alpha]) or (f1, f2[, f3])")
    kind = spec.get("kind")
    if kind is not None and kind not in (GCSF, GSSF):
        raise SchemaError("model.kind", f"expected GCSF or GSSF, got {kind!r}")
    alpha = _number(spec.get("alpha", 0.0), "model.alpha")
    xi_case = spec.get("xi_case")
    if xi_case not in (None, "IN_RANGE", "IN_RANGE_PERP"):
        raise SchemaError("model.xi_case", f"expected IN_RANGE or IN_RANGE_PERP, got {xi_case!r}")
    n = b.target.dim
    if has_family:
        family = spec["family"]
        if family not in GCSF_FAMILIES + GSSF_FAMILIES:
            raise SchemaError("model.family", f"unknown family {family!r}")
        if "c" not in spec:
            raise SchemaError("model.c", "required with family")
        c = _number(spec["c"], "model.c")
        fk = family_kind(family)
        if kind is not None and kind != fk:
            raise SchemaError("model.kind", f"family {family!r} is a {fk} family")
        kind = fk
    else:
        if "c" in spec or "alpha" in spec:
            raise SchemaError("model", "c and alpha only go with a family")
        if kind is None:
            raise SchemaError("model.kind", "required with explicit coefficients")
        if "f1" not in spec or "f2" not in spec:
            raise SchemaError("model", "f1 and f2 are required")
        if kind == GCSF and "f3" in spec:
            raise SchemaError("model.f3", "GCSF models take no f3")
        family, c = None, 1.0
    if (kind == GCSF) != (n % 2 == 0):
        raise SchemaError("model.kind", f"{kind} does not fit a target of dimension {n}")
    st = _structure(spec.get("structure"), kind, n, c, b.structures)
    try:
        if has_family:
            model = SpaceFormModel.from_family(family, c, alpha, b.target, st)
        elif kind == GCSF:
            model = SpaceFormModel.gcsf(_number(spec["f1"], "model.f1"), _number(spec["f2"], "model.f2"),
                                        b.target, st.J_at)
        else:
            model = SpaceFormModel.gssf(_number(spec["f1"], "model.f1"), _number(spec["f2"], "model.f2"),
                                        _number(spec.get("f3", 0.0), "model.f3"), b.target, st)
    except AttributeError:
        raise SchemaError("model.structure", f"structure does not fit a {kind} model") from None
    return ModelSpec(model, family, c, alpha, xi_case, dict(spec))


def _point(value, dim: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != dim:
        raise SchemaError(where, f"expected a list of {dim} coordinates")
    return np.array([_number(v, where) for v in value])


def _points(spec, b: Builtin, seed: int) -> tuple:
    if spec is None:
        return (np.asarray(b.default_point, dtype=float),)
    if isinstance(spec, dict):
        _mapping(spec, "points", {"random"})
        k = _integer(spec.get("random"), "points.random", 1)
        return tuple(b.sample_points(np.random.default_rng([seed, 0x9E37]), k))
    if not isinstance(spec, list) or not spec:
        raise SchemaError("points", "expected a non-empty list of points or {\"random\": k}")
    return tuple(_point(p, b.source.dim, f"points[{k}]") for k, p in enumerate(spec))


def _planes(spec) -> PlaneSpec:
    if spec is None:
        return PlaneSpec("indices", ((1, 2),))
    _mapping(spec, "planes", {"mode", "data"})
    mode = spec.get("mode")
    data = spec.get("data")
    if mode == "indices":
        if not isinstance(data, list) or not data:
            raise SchemaError("planes.data", "expected a list of [i, j] index pairs")
        pairs = []
        for k, p in enumerate(data):
            if not (isinstance(p, list) and len(p) == 2):
                raise SchemaError(f"planes.data[{k}]", "expected [i, j]")
            i, j = (_integer(v, f"planes.data[{k}]", 1) for v in p)
            if i == j:
                raise SchemaError(f"planes.data[{k}]", "indices must differ")
            pairs.append((i, j))
        return PlaneSpec(mode, tuple(pairs))
    if mode == "angles":
        if not isinstance(data, list) or not data or not all(isinstance(a, list) for a in data):
            raise SchemaError("planes.data", "expected a list of angle lists")
        return PlaneSpec(mode, tuple(tuple(_number(v, f"planes.data[{k}]") for v in a) for k, a in enumerate(data)))
    if mode == "sweep":
        if data is None:
            count = DEFAULT_SWEEP_PLANES
        elif isinstance(data, dict):
            _mapping(data, "planes.data", {"count"})
            count = _integer(data.get("count", DEFAULT_SWEEP_PLANES), "planes.data.count", 1)
        else:
            count = _integer(data, "planes.data", 1)
        return PlaneSpec(mode, (count,))
    raise SchemaError("planes.mode", f"expected indices, angles or sweep, got {mode!r}")


def _checks(spec, model: ModelSpec | None) -> tuple:
    if spec is None:
        spec = ["general_cfi"]
    if not isinstance(spec, list) or not spec:
        raise SchemaError("checks", "expected a non-empty list of check names")
    out = []
    for k, name in enumerate(spec):
        if name not in CHECKS:
            raise SchemaError(f"checks[{k}]", f"unknown check {name!r}")
        if name != "general_cfi":
            if model is None:
                raise SchemaError(f"checks[{k}]", f"{name!r} needs a model block")
            want = _KIND_OF.get(name)
            if want is not None and model.model.kind != want:
                raise SchemaError(f"checks[{k}]", f"{name!r} needs a {want} model, got {model.model.kind}")
            if name.startswith("corollary") and model.family is None:
                raise SchemaError(f"checks[{k}]", f"{name!r} needs a model given by family")
        if name not in out:
            out.append(name)
    return tuple(out)


def _tolerances(spec, scale: float | None) -> Tolerances:
    tol = DEFAULT_TOLERANCES
    if spec is not None:
        if not isinstance(spec, dict):
            raise SchemaError("tolerances", "expected an object")
        known = set(tol.as_dict())
        for k, v in spec.items():
            if k not in known:
                raise SchemaError(f"tolerances.{k}", "unknown tolerance")
            if not _number(v, f"tolerances.{k}") > 0:
                raise SchemaError(f"tolerances.{k}", "must be positive")
        tol = tol.with_overrides(spec)
    if scale is not None:
        if not (isinstance(scale, (int, float)) and scale > 0 and math.isfinite(scale)):
            raise SchemaError("tolerance_scale", f"must be a positive number, got {scale!r}")
        tol = tol.scaled(scale)
    return tol


def parse_scenario(doc, seed: int | None = None, tolerance_scale: float | None = None) -> ScenarioFile:
    """Validate a decoded scenario document and fill in defaults.

    ``seed`` and ``tolerance_scale`` override the file (command-line flags).
    """
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise SchemaError(sorted(extra)[0], "unknown field")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError("schema_version", f"expected {SCHEMA_VERSION!r}, got {version!r}")
    if "scenario" not in doc:
        raise SchemaError("scenario", "required")
    if seed is None:
        seed = _integer(doc.get("seed", 0), "seed", 0)
    else:
        seed = _integer(seed, "seed", 0)
    b = _scenario(doc["scenario"])
    model = _model(doc.get("model"), b)
    checks = _checks(doc.get("checks"), model)
    name = doc["scenario"] if isinstance(doc["scenario"], str) else b.name
    return ScenarioFile(SCHEMA_VERSION, name, b, model, _points(doc.get("points"), b, seed), _planes(doc.get("planes")),
                        checks, _tolerances(doc.get("tolerances"), tolerance_scale), seed, dict(doc))


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


def load_scenario(path, seed: int | None = None, tolerance_scale: float | None = None) -> ScenarioFile:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read scenario {str(path)!r}: {exc.strerror or exc}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        head = raw[: exc.start].decode("utf-8", errors="replace")
        raise ParseError("scenario is not valid UTF-8", *_line_col(head, len(head))) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None
    return parse_scenario(doc, seed, tolerance_scale)


# ---------------------------------------------------------------------------
# running


@dataclass
class RunReport:
    records: list
    summary: dict
    provenance: dict

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "records": self.records, "summary": self.summary,
                "provenance": self.provenance}

    @classmethod
    def from_dict(cls, doc: dict) -> "RunReport":
        return cls(list(doc["records"]), dict(doc["summary"]), dict(doc["provenance"]))

    @property
    def statuses(self) -> set:
        return {r["status"] for r in self.records}


def _clean(value):
    """Plain JSON values; non-finite floats become None."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _record(name, point_index, plane_id, status, lhs=None, rhs=None, slack=None, holds=None, equality=None,
            error=None, diagnostics=None) -> dict:
    return {
        "name": name,
        "point_index": point_index,
        "plane_id": plane_id,
        "status": status.value,
        "lhs": _clean(lhs),
        "rhs": _clean(rhs),
        "slack": _clean(slack),
        "holds": holds,
        "equality": equality,
        "error": error,
        "diagnostics": _clean(diagnostics or {}),
    }


def _error_text(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _from_inequality(name, idx, pid, rep: InequalityReport, C, gauss) -> dict:
    diag = {"report": rep.name, "plane": C, "gauss_residual": gauss, **rep.details}
    if rep.equality_structure is not None:
        diag["equality_structure"] = rep.equality_structure.to_dict()
    status = Status.OK if rep.holds else Status.VIOLATION
    return _record(name, idx, pid, status, rep.lhs, rep.rhs, rep.slack, bool(rep.holds), bool(rep.equality),
                   diagnostics=diag)


def _from_delta(name, idx, rep: DeltaReport, gauss) -> dict:
    diag = {"report": rep.bound_name, "gauss_residual": gauss, "statement_flags": rep.statement_flags, **rep.details}
    status = Status.OK if rep.holds else Status.VIOLATION
    return _record(name, idx, POINT_PLANE_ID, status, rep.delta, rep.bound_value, rep.bound_value - rep.delta,
                   bool(rep.holds), bool(rep.equality), diagnostics=diag)


POINT_PLANE_ID = "min"


def _plane_list(sf: ScenarioFile, bundle: MapBundle, rng: np.random.Generator) -> list:
    """``(plane_id, plane or exception)`` for the point's bundle."""
    ids = sf.planes.ids()
    r = bundle.rank
    out = []
    if sf.planes.mode == "sweep":
        for pid in ids:
            out.append((pid, rng.normal(size=(r, 2)) if r >= 1 else None))
        return out
    for pid, data in zip(ids, sf.planes.data):
        try:
            if sf.planes.mode == "indices":
                out.append((pid, tuple(data)))
            else:
                out.append((pid, plane_from_angles(data, r)))
        except EngineError as exc:
            out.append((pid, exc))
    return out


def _inequality(check: str, bundle: MapBundle, m: ModelSpec | None, plane, tol: Tolerances) -> InequalityReport:
    if check == "general_cfi":
        return verify_general_cfi(bundle, plane, tol)
    if check == "gcsf_cfi":
        return verify_gcsf_cfi(bundle, m.model, plane, tol)
    if check == "gssf_cfi":
        return verify_gssf_cfi(bundle, m.model, plane, tol, m.xi_case)
    if check == "corollary_gcsf":
        return verify_corollary_gcsf(bundle, m.model, m.family, m.c, m.alpha, plane, tol)
    return verify_corollary_gssf(bundle, m.model, m.family, m.c, m.alpha, m.xi_case, plane, tol)


def _delta(check: str, bundle: MapBundle, m: ModelSpec, mode, budget, seed, tol) -> DeltaReport:
    if mode == EXHAUSTIVE and bundle.rank > 4:
        mode = MULTISTART
    if check == "delta_gcsf":
        return verify_delta_bound_gcsf(bundle, m.model, mode=mode, budget=budget, seed=seed, tol=tol)
    if check == "delta_gssf":
        return verify_delta_bound_gssf(bundle, m.model, m.xi_case, mode=mode, budget=budget, seed=seed, tol=tol)
    return verify_harmonic_corollaries(bundle, m.model, m.xi_case, mode=mode, budget=budget, seed=seed, tol=tol)


def _run_point(sf: ScenarioFile, idx: int, point, mode, budget) -> list:
    tol = sf.tolerances
    rng = np.random.default_rng([sf.seed, idx])
    plane_checks = [c for c in sf.checks if c in PLANE_CHECKS]
    point_checks = [c for c in sf.checks if c in POINT_CHECKS]
    ids = sf.planes.ids()

    def blanket(status, error, diag=None):
        recs = [_record(c, idx, pid, status, error=error, diagnostics=diag) for pid in ids for c in plane_checks]
        return recs + [_record(c, idx, POINT_PLANE_ID, status, error=error, diagnostics=diag) for c in point_checks]

    try:
        # rank_min = 1 so that rank-deficient maps still reach the checks and fail there
        bundle = build_bundle(sf.scenario.scenario(point), tol=tol, rank_min=1)
    except (EngineError, ValueError, np.linalg.LinAlgError) as exc:
        return blanket(Status.ERROR, _error_text(exc))
    gauss = bundle.gauss
    if not gauss < tol.gauss:
        return blanket(Status.SKIPPED, f"GaussGate: residual {gauss:.3e} exceeds {tol.gauss:.1e}",
                       {"gauss_residual": gauss})
    records = []
    for pid, plane in _plane_list(sf, bundle, rng):
        C = None
        if not isinstance(plane, Exception):
            try:
                C = plane_coefficients(bundle, plane)
            except EngineError:
                C = None
        for check in plane_checks:
            if isinstance(plane, Exception):
                records.append(_record(check, idx, pid, Status.ERROR, error=_error_text(plane)))
                continue
            try:
                rep = _inequality(check, bundle, sf.model, plane, tol)
            except (EngineError, ValueError, np.linalg.LinAlgError) as exc:
                records.append(_record(check, idx, pid, Status.ERROR, error=_error_text(exc),
                                       diagnostics={"gauss_residual": gauss, "rank": bundle.rank}))
                continue
            records.append(_from_inequality(check, idx, pid, rep, C, gauss))
    search_seed = int(rng.integers(1 << 31))
    for check in point_checks:
        try:
            rep = _delta(check, bundle, sf.model, mode, budget, search_seed, tol)
        except (EngineError, ValueError, np.linalg.LinAlgError) as exc:
            records.append(_record(check, idx, POINT_PLANE_ID, Status.ERROR, error=_error_text(exc),
                                   diagnostics={"gauss_residual": gauss, "rank": bundle.rank}))
            continue
        records.append(_from_delta(check, idx, rep, gauss))
    order = {pid: k for k, pid in enumerate(ids)}
    order[POINT_PLANE_ID] = len(ids)
    records.sort(key=lambda r: (order[r["plane_id"]], r["name"]))
    return records


def thread_count() -> int:
    raw = os.environ.get("CHENMAP_THREADS", "").strip()
    try:
        n = int(raw) if raw else 0
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def summarize(records: list) -> dict:
    counts = {s.value: 0 for s in Status}
    for r in records:
        counts[r["status"]] += 1
    slacks = [r["slack"] for r in records if r["slack"] is not None]
    failures = [
        {"name": r["name"], "point_index": r["point_index"], "plane_id": r["plane_id"], "status": r["status"]}
        for r in records
        if r["status"] != Status.OK.value
    ]
    return {
        "counts": {"records": len(records), **counts,
                   "holds": sum(1 for r in records if r["holds"] is True),
                   "equality": sum(1 for r in records if r["equality"] is True)},
        "min_slack": min(slacks) if slacks else None,
        "failures": failures,
    }


def run_checks(sf: ScenarioFile, mode: str | None = None, budget: int | None = None,
               threads: int | None = None, timing: bool = False) -> RunReport:
    """Evaluate every (point, plane, check) record of the scenario.

    Points run in parallel (``CHENMAP_THREADS``); the report is assembled in
    (point index, plane id, check name) order, so it does not depend on the
    thread count.
    """
    import time

    start = time.perf_counter()
    workers = max(1, min(threads or thread_count(), len(sf.points)))
    jobs = list(enumerate(sf.points))
    if workers == 1:
        chunks = [_run_point(sf, i, p, mode, budget) for i, p in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda job: _run_point(sf, job[0], job[1], mode, budget), jobs))
    records = [r for chunk in chunks for r in chunk]
    provenance = {
        "tool": "chenmap",
        "version": __version__,
        "scenario": sf.name,
        "seed": sf.seed,
        "points": len(sf.points),
        "plane_mode": sf.planes.mode,
        "search_mode": mode,
        "search_budget": budget,
        "tolerances": sf.tolerances.as_dict(),
    }
    if timing:
        provenance["wall_time_s"] = time.perf_counter() - start
    return RunReport(records, summarize(records), _clean(provenance))


# ---------------------------------------------------------------------------
# emission


def report_json(r: RunReport | dict) -> str:
    doc = r.to_dict() if isinstance(r, RunReport) else r
    return json.dumps(_clean(doc), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v
    return str(v)


def report_csv(r: RunReport | dict) -> str:
    records = r.records if isinstance(r, RunReport) else r["records"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for rec in records:
        w.writerow([_csv_value(rec.get(k)) for k in CSV_HEADER])
    return buf.getvalue()


def emit_report(r: RunReport | dict, format: str = "json", path=None) -> str:
    """Serialize ``r``; write it to ``path`` when given and return the text."""
    if format == "json":
        text = report_json(r)
    elif format == "csv":
        text = report_csv(r)
    else:
        raise ValueError(f"unknown report format {format!r}")
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(f"cannot write report {str(path)!r}: {exc.strerror or exc}") from None
    return text


def load_report(path) -> RunReport:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read report {str(path)!r}: {exc.strerror or exc}") from None
    try:
        return RunReport.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno, exc.colno) from None


def exit_code(r: RunReport) -> int:
    """0 all hold, 1 any violation, 3 any engine error or skipped record."""
    st = r.statuses
    if Status.VIOLATION.value in st:
        return 1
    if Status.ERROR.value in st or Status.SKIPPED.value in st:
        return 3
    return 0
