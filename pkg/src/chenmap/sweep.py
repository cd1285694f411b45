"""Seeded soundness sweeps over random (scenario, point, plane) triples."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from chenmap.catalog import Builtin, builtin
from chenmap.chen_inequalities import (
    InequalityReport,
    verify_corollary_gcsf,
    verify_corollary_gssf,
    verify_gcsf_cfi,
    verify_general_cfi,
    verify_gssf_cfi,
)
from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.delta_invariants import DeltaReport, verify_delta_bound_gcsf, verify_delta_bound_gssf
from chenmap.rmap_core import MapBundle, build_bundle
from chenmap.space_forms import GCSF, GSSF_FAMILIES

# (factory name, parameter choices); graph seeds are drawn per triple
SWEEP_FAMILIES = (
    ("graph_in_cp2", {"c": (1.0, 0.5, -0.5)}),
    ("graph_in_cp2_fibered", {"c": (1.0, -0.25)}),
    ("graph_hypersurface", {}),
    ("sphere_in_flat", {"c": (1.0, 0.25)}),
    ("sphere_in_sphere", {"c": (1.0, 0.25, -1.0)}),
    ("cp2_chart", {"c": (1.0, -0.5)}),
    ("odd_sphere_contact", {"c": (1.0, 0.25)}),
    ("sphere_in_odd_sphere", {"c": (1.0,)}),
    ("legendrian_sphere", {"c": (1.0,)}),
    ("cosymplectic_xi_range", {"c": (1.0, 0.5, -0.5)}),
    ("cosymplectic_xi_perp", {"c": (1.0, 0.5, -0.5)}),
    ("cosymplectic_identity", {"c": (1.0, -0.5)}),
    ("linear_submersion", {}),
    ("flat_identity_r3", {}),
    ("flat_identity_r4", {}),
)

SEEDED = {"graph_in_cp2", "graph_in_cp2_fibered", "graph_hypersurface", "cosymplectic_xi_range",
          "cosymplectic_xi_perp", "linear_submersion"}


@dataclass
class SweepTriple:
    scenario: str
    params: dict
    point: np.ndarray
    plane: np.ndarray
    bundle: MapBundle | None = None
    reports: list[InequalityReport] = field(default_factory=list)
    delta: DeltaReport | None = None


def draw_builtin(rng: np.random.Generator) -> tuple[Builtin, dict]:
    name, choices = SWEEP_FAMILIES[int(rng.integers(len(SWEEP_FAMILIES)))]
    params = {k: float(v[int(rng.integers(len(v)))]) for k, v in choices.items()}
    if name in SEEDED:
        params["seed"] = int(rng.integers(1 << 31))
    return builtin(name, **params), params


def run_triple(b: Builtin, params: dict, point, plane, tol: Tolerances = DEFAULT_TOLERANCES,
               with_delta: bool = True, seed: int = 0, bundle: MapBundle | None = None) -> SweepTriple:
    if bundle is None:
        bundle = build_bundle(b.scenario(point), tol=tol)
    t = SweepTriple(b.name, params, np.asarray(point), np.asarray(plane), bundle)
    t.reports.append(verify_general_cfi(bundle, plane, tol))
    model = b.model
    if model is not None:
        if model.kind == GCSF:
            t.reports.append(verify_gcsf_cfi(bundle, model, plane, tol))
            if b.family is not None:
                t.reports.append(verify_corollary_gcsf(bundle, model, b.family, b.c, 0.0, plane, tol))
            if with_delta:
                t.delta = verify_delta_bound_gcsf(bundle, model, seed=seed, tol=tol)
        else:
            t.reports.append(verify_gssf_cfi(bundle, model, plane, tol))
            if b.family in GSSF_FAMILIES:
                t.reports.append(verify_corollary_gssf(bundle, model, b.family, b.c, 0.0, None, plane, tol))
            if with_delta:
                t.delta = verify_delta_bound_gssf(bundle, model, seed=seed, tol=tol)
    return t


def soundness_sweep(count: int = 200, seed: int = 0, tol: Tolerances = DEFAULT_TOLERANCES,
                    with_delta: bool = True) -> list[SweepTriple]:
    """``count`` random triples with rank >= 3 that pass the Gauss gate."""
    rng = np.random.default_rng(seed)
    out: list[SweepTriple] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 20 * count:
            raise RuntimeError("sweep could not produce enough valid triples")
        b, params = draw_builtin(rng)
        point = b.sample_points(rng, 1)[0]
        bundle = build_bundle(b.scenario(point), tol=tol)
        if bundle.rank < 3 or bundle.gauss >= tol.gauss:
            continue
        plane = rng.normal(size=(bundle.rank, 2))
        out.append(run_triple(b, params, point, plane, tol, with_delta, int(rng.integers(1 << 31)), bundle))
    return out
