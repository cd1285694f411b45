"""Built-in property checks run by ``chenmap selftest``."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from chenmap.catalog import CORE_BUILTINS, builtin
from chenmap.chart_geometry import CurvatureTensor, christoffel, riemann
from chenmap.chen_inequalities import verify_general_cfi
from chenmap.config import DEFAULT_TOLERANCES
from chenmap.delta_invariants import EXHAUSTIVE, MULTISTART, delta_h, min_sectional_curvature, symmetrize_curvature
from chenmap.geometries import (
    polar_chart,
    polar_christoffel,
    sphere_christoffel,
    stereographic_sphere_chart,
)
from chenmap.rmap_core import build_bundle
from chenmap.space_forms import model_curvature
from chenmap.sweep import soundness_sweep


@dataclass(frozen=True)
class SelfCheck:
    name: str
    passed: bool
    detail: str


def gauss_gate(points: int = 10, seed: int = 0) -> SelfCheck:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in CORE_BUILTINS:
        b = builtin(name)
        for x in b.sample_points(rng, points):
            worst = max(worst, build_bundle(b.scenario(x), rank_min=1).gauss)
    return SelfCheck("gauss_gate", worst < DEFAULT_TOLERANCES.gauss, f"max residual {worst:.2e}")


def model_curvature_match(seed: int = 0) -> SelfCheck:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name, params in (("sphere_in_sphere", {"c": 1.0}), ("sphere_in_sphere", {"c": 0.25}), ("cp1_chart", {}),
                         ("cp2_chart", {}), ("odd_sphere_contact", {})):
        b = builtin(name, **params)
        for x in b.sample_points(rng, 3):
            y = b.map_at(x)
            dev = np.abs(model_curvature(b.model, y).components - riemann(b.target, y).components).max()
            worst = max(worst, float(dev))
    return SelfCheck("model_curvature", worst < 1e-4, f"max deviation {worst:.2e}")


def equality_reproduction() -> SelfCheck:
    worst = 0.0
    ok = True
    for name in ("flat_identity_r3", "sphere_in_sphere"):
        b = builtin(name)
        rep = verify_general_cfi(build_bundle(b.scenario()), (1, 2))
        worst = max(worst, abs(rep.slack))
        ok = ok and rep.equality_structure.is_equality_form
    return SelfCheck("equality", ok and worst < 1e-5, f"max |slack| {worst:.2e}")


def constant_curvature_tensor(r: int, c: float) -> CurvatureTensor:
    """``R_ijkl = c (g_jk g_il - g_ik g_jl)`` on an orthonormal basis."""
    g = np.eye(r)
    return CurvatureTensor(r, c * (np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g)), g)


def delta_constant_curvature() -> SelfCheck:
    worst = 0.0
    for r in (3, 4, 5):
        for c in (-1.0, 0.0, 1.0):
            RM, H = constant_curvature_tensor(r, c), np.eye(r)
            d = delta_h(RM, H, min_sectional_curvature(RM, H, EXHAUSTIVE if r <= 4 else MULTISTART))
            worst = max(worst, abs(d - (r * (r - 1) / 2 - 1) * c))
    return SelfCheck("delta_constant_curvature", worst < 1e-9, f"max deviation {worst:.2e}")


def christoffel_convergence(chart, exact: np.ndarray, x, h: float = 1e-2) -> tuple[float, float]:
    """Max Christoffel errors at steps ``h`` and ``h / 2``."""
    e1 = float(np.abs(christoffel(chart, x, h) - exact).max())
    e2 = float(np.abs(christoffel(chart, x, h / 2) - exact).max())
    return e1, e2


def second_order(e1: float, e2: float, floor: float = 1e-10) -> bool:
    """Error ratio >= 3 on halving, or both errors already at rounding level."""
    return (e1 <= floor and e2 <= floor) or e1 >= 3.0 * e2


def hygiene() -> SelfCheck:
    x = np.array([2.0, 0.3])
    p1, p2 = christoffel_convergence(polar_chart(), polar_christoffel(x), x)
    y = np.array([0.3, -0.2, 0.25])
    s1, s2 = christoffel_convergence(stereographic_sphere_chart(3, 1.0), sphere_christoffel(y, 1.0), y)
    R = riemann(stereographic_sphere_chart(3, 1.0), np.array([0.1, -0.2, 0.05])).components
    sym = np.abs(R - symmetrize_curvature(R)).max()
    ok = second_order(p1, p2) and second_order(s1, s2) and s1 > 1e-10 and sym < 1e-6
    return SelfCheck("hygiene", ok, f"polar {p1:.1e}/{p2:.1e}, sphere ratio {s1 / s2:.2f}, symmetry {sym:.1e}")


def sweep(count: int = 40, seed: int = 0) -> SelfCheck:
    triples = soundness_sweep(count, seed)
    bad = sum(1 for t in triples if not all(r.holds for r in t.reports) or (t.delta and not t.delta.holds))
    return SelfCheck("soundness_sweep", bad == 0, f"{count} triples, {bad} failures")


CHECKS: tuple[Callable[[], SelfCheck], ...] = (
    gauss_gate, model_curvature_match, equality_reproduction, delta_constant_curvature, hygiene, sweep,
)


def run_selftest(full: bool = False, out=print) -> bool:
    ok = True
    for check in CHECKS:
        t0 = time.perf_counter()
        res = sweep(200) if full and check is sweep else check()
        ok = ok and res.passed
        out(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail} ({time.perf_counter() - t0:.1f}s)")
    return ok
