"""Built-in Riemannian maps with matching space-form models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from chenmap.chart_geometry import MetricChart
from chenmap.errors import UnknownBuiltin
from chenmap.geometries import (
    AnalyticMap,
    ComplexStructure,
    ContactStructure,
    constant_complex_structure,
    euclidean_chart,
    fubini_study_chart,
    graph_map,
    hopf_contact_structure,
    linear_map,
    product_chart,
    product_cosymplectic_structure,
    pullback_chart,
    sphere_embedding,
    stereographic_sphere_chart,
)
from chenmap.polynomial import Polynomial, random_polynomial
from chenmap.rmap_core import MapScenario
from chenmap.space_forms import SpaceFormModel


@dataclass(frozen=True)
class Builtin:
    name: str
    description: str
    source: MetricChart
    target: MetricChart
    map_at: Callable[[np.ndarray], np.ndarray]
    default_point: np.ndarray
    box: float = 0.3
    rank_min: int = 3
    model: SpaceFormModel | None = None
    structures: dict = field(default_factory=dict)
    family: str | None = None
    c: float = 0.0

    def scenario(self, point=None) -> MapScenario:
        x = self.default_point if point is None else np.asarray(point, dtype=float)
        return MapScenario(self.source, self.target, self.map_at, x, self.rank_min, self.name)

    def sample_points(self, rng: np.random.Generator, k: int) -> list[np.ndarray]:
        return [rng.uniform(-self.box, self.box, self.source.dim) for _ in range(k)]


def _identity(x):
    return np.asarray(x, dtype=float)


def _lift(poly: Polynomial, lead: int) -> Polynomial:
    """Same polynomial as a function of ``lead`` extra leading variables it ignores."""
    return Polynomial(poly.nvars + lead, poly.coefs, tuple((0,) * lead + p for p in poly.powers))


def _graph_source(target: MetricChart, f: AnalyticMap, name: str) -> MetricChart:
    return pullback_chart(target, f, name=name)


def _gcsf_flat(n: int) -> tuple[SpaceFormModel, dict]:
    chart = euclidean_chart(n)
    st = constant_complex_structure(n)
    return SpaceFormModel.gcsf(0.0, 0.0, chart, st.J_at, "flat_complex"), {"standard_complex": st}


def _gssf_flat(n: int) -> tuple[SpaceFormModel, dict]:
    chart = euclidean_chart(n)
    st = product_cosymplectic_structure(n)
    return SpaceFormModel.gssf(0.0, 0.0, 0.0, chart, st, "flat_cosymplectic"), {"product_cosymplectic": st}


def flat_identity(dim: int) -> Builtin:
    chart = euclidean_chart(dim)
    model, structures = _gcsf_flat(dim) if dim % 2 == 0 else _gssf_flat(dim)
    family = "complex" if dim % 2 == 0 else "cosymplectic"
    return Builtin(f"flat_identity_r{dim}", f"identity of flat R^{dim}", chart, chart, _identity, np.zeros(dim),
                   1.0, 3, model, structures, family, 0.0)


def projection_plumbing() -> Builtin:
    A = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    model, structures = _gcsf_flat(2)
    return Builtin("projection_plumbing", "orthogonal projection R^3 -> R^2 (rank 2)", euclidean_chart(3),
                   euclidean_chart(2), linear_map(A), np.zeros(3), 1.0, 1, model, structures, "complex", 0.0)


def sphere_inclusion() -> Builtin:
    """Unit S^2 in R^3 over the graph chart of the upper hemisphere."""

    def metric(x):
        return np.eye(2) + np.outer(x, x) / (1.0 - x @ x)

    src = MetricChart(2, metric, lambda x: x @ x < 0.81, "S2_graph")
    return Builtin("sphere_inclusion", "unit S^2 in R^3 (graph chart, rank 2)", src, euclidean_chart(3),
                   lambda x: np.append(x, np.sqrt(1.0 - x @ x)), np.zeros(2), 0.4, 1)


def sphere_in_sphere(c: float = 1.0) -> Builtin:
    src = stereographic_sphere_chart(3, c)
    tgt = stereographic_sphere_chart(4, c)
    st = constant_complex_structure(4)
    model = SpaceFormModel.gcsf(c, 0.0, tgt, st.J_at, "real_space_form")
    return Builtin("sphere_in_sphere", f"totally geodesic S^3 in S^4 (c={c:g})", src, tgt,
                   lambda x: np.append(x, 0.0), np.zeros(3), 0.4, 3, model, {"standard_complex": st}, "real", c)


def cp_chart(s: int, c: float = 1.0) -> Builtin:
    chart = fubini_study_chart(s, c)
    st = constant_complex_structure(2 * s)
    model = SpaceFormModel.gcsf(c, c, chart, st.J_at, "complex_space_form")
    return Builtin(f"cp{s}_chart", f"identity of CP^{s} with holomorphic curvature {4 * c:g}", chart, chart,
                   _identity, np.zeros(2 * s), 0.3, 3 if 2 * s >= 3 else 1, model, {"standard_complex": st},
                   "complex", c)


def odd_sphere_contact(c: float = 1.0) -> Builtin:
    chart = stereographic_sphere_chart(3, c)
    st = hopf_contact_structure(3, c)
    model = SpaceFormModel.gssf(c, 0.0, 0.0, chart, st, "round_contact_sphere")
    return Builtin("odd_sphere_contact", f"identity of S^3 (c={c:g}) with its standard contact structure", chart,
                   chart, _identity, np.zeros(3), 0.4, 3, model, {"hopf_contact": st}, None, c)


def product_s2xr() -> Builtin:
    chart = product_chart(stereographic_sphere_chart(2, 1.0), euclidean_chart(1))
    return Builtin("product_s2xr", "identity of S^2 x R", chart, chart, _identity, np.zeros(3), 0.4, 3)


def sphere_in_flat(c: float = 1.0) -> Builtin:
    src = stereographic_sphere_chart(3, c)
    model, structures = _gcsf_flat(4)
    return Builtin("sphere_in_flat", f"round S^3 (c={c:g}) in R^4", src, euclidean_chart(4),
                   sphere_embedding(3, c), np.zeros(3), 0.4, 3, model, structures, "complex", 0.0)


def sphere_in_odd_sphere(c: float = 1.0) -> Builtin:
    """Great S^3 in S^5 tangent to the contact field."""
    src = stereographic_sphere_chart(3, c)
    tgt = stereographic_sphere_chart(5, c)
    st = hopf_contact_structure(5, c)
    model = SpaceFormModel.gssf(c, 0.0, 0.0, tgt, st, "round_contact_sphere")
    return Builtin("sphere_in_odd_sphere", f"great S^3 in S^5 (c={c:g}), xi tangent", src, tgt,
                   lambda x: np.concatenate([[0.0, 0.0], x]), np.zeros(3), 0.4, 3, model, {"hopf_contact": st}, None, c)


def legendrian_sphere(c: float = 1.0) -> Builtin:
    """Great S^3 in S^7 through a Lagrangian subspace; xi is normal to it."""
    src = stereographic_sphere_chart(3, c)
    tgt = stereographic_sphere_chart(7, c)
    st = hopf_contact_structure(7, c)
    model = SpaceFormModel.gssf(c, 0.0, 0.0, tgt, st, "round_contact_sphere")

    def f(x):
        y = np.zeros(7)
        y[[0, 2, 4]] = x
        return y

    return Builtin("legendrian_sphere", f"Legendrian great S^3 in S^7 (c={c:g}), xi normal", src, tgt, f,
                   np.zeros(3), 0.4, 3, model, {"hopf_contact": st}, None, c)


def graph_hypersurface(seed: int = 7) -> Builtin:
    f = graph_map(random_polynomial(np.random.default_rng(seed), 3), [0, 1, 2, 3], 4)
    tgt = euclidean_chart(4)
    model, structures = _gcsf_flat(4)
    return Builtin("graph_hypersurface", "polynomial graph hypersurface in R^4", _graph_source(tgt, f, "graph3"),
                   tgt, f, np.zeros(3), 0.4, 3, model, structures, "complex", 0.0)


def graph_in_cp2(c: float = 1.0, seed: int = 11) -> Builtin:
    tgt = fubini_study_chart(2, c)
    f = graph_map(random_polynomial(np.random.default_rng(seed), 3), [0, 1, 2, 3], 4)
    st = constant_complex_structure(4)
    model = SpaceFormModel.gcsf(c, c, tgt, st.J_at, "complex_space_form")
    return Builtin("graph_in_cp2", f"polynomial graph hypersurface in CP^2 (4c={4 * c:g})",
                   _graph_source(tgt, f, "graph_cp2"), tgt, f, np.zeros(3), 0.3, 3, model, {"standard_complex": st},
                   "complex", c)


def graph_in_cp2_fibered(c: float = 1.0, seed: int = 13) -> Builtin:
    """Riemannian map with a one-dimensional kernel onto a hypersurface of CP^2."""
    tgt = fubini_study_chart(2, c)
    f = graph_map(random_polynomial(np.random.default_rng(seed), 3), [0, 1, 2, 3], 4)
    src = product_chart(_graph_source(tgt, f, "graph_cp2"), euclidean_chart(1))
    st = constant_complex_structure(4)
    model = SpaceFormModel.gcsf(c, c, tgt, st.J_at, "complex_space_form")
    return Builtin("graph_in_cp2_fibered", f"R^4 -> CP^2 (4c={4 * c:g}) with kernel, onto a graph hypersurface",
                   src, tgt, lambda x: f(x[:3]), np.zeros(4), 0.3, 3, model, {"standard_complex": st}, "complex", c)


def linear_submersion(seed: int = 3) -> Builtin:
    Q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(4, 4)))
    model, structures = _gssf_flat(3)
    return Builtin("linear_submersion", "orthogonal projection R^4 -> R^3 along a random direction",
                   euclidean_chart(4), euclidean_chart(3), linear_map(Q[:3]), np.zeros(4), 1.0, 3, model, structures,
                   "cosymplectic", 0.0)


def _cosymplectic_target(c: float):
    tgt = product_chart(euclidean_chart(1), fubini_study_chart(2, c))
    st = product_cosymplectic_structure(5)
    return tgt, st, SpaceFormModel.gssf(c, c, c, tgt, st, "cosymplectic_space_form")


def cosymplectic_identity(c: float = 1.0) -> Builtin:
    tgt, st, model = _cosymplectic_target(c)
    return Builtin("cosymplectic_identity", f"identity of R x CP^2 (c={c:g})", tgt, tgt, _identity, np.zeros(5),
                   0.3, 3, model, {"product_cosymplectic": st}, "cosymplectic", c)


def cosymplectic_xi_range(c: float = 1.0, seed: int = 17) -> Builtin:
    """``(t, u, v) -> (t, u, v, f(u, v), 0)`` in R x CP^2; xi = d/dt lies in the range."""
    tgt, st, model = _cosymplectic_target(c)
    f = graph_map(_lift(random_polynomial(np.random.default_rng(seed), 2), 1), [0, 1, 2, 3], 5)
    return Builtin("cosymplectic_xi_range", f"R^3 -> R x CP^2 (c={c:g}), xi in the range",
                   _graph_source(tgt, f, "graph_xi_range"), tgt, f, np.zeros(3), 0.3, 3, model,
                   {"product_cosymplectic": st}, "cosymplectic", c)


def cosymplectic_xi_perp(c: float = 1.0, seed: int = 19) -> Builtin:
    """``(u, v, w) -> (0, u, v, w, f(u, v, w))``; xi = d/dt is normal to the range."""
    tgt, st, model = _cosymplectic_target(c)
    f = graph_map(random_polynomial(np.random.default_rng(seed), 3), [1, 2, 3, 4], 5)
    return Builtin("cosymplectic_xi_perp", f"R^3 -> R x CP^2 (c={c:g}), xi normal to the range",
                   _graph_source(tgt, f, "graph_xi_perp"), tgt, f, np.zeros(3), 0.3, 3, model,
                   {"product_cosymplectic": st}, "cosymplectic", c)


FACTORIES: dict[str, Callable[..., Builtin]] = {
    "flat_identity_r3": lambda: flat_identity(3),
    "flat_identity_r4": lambda: flat_identity(4),
    "flat_identity_r5": lambda: flat_identity(5),
    "projection_plumbing": projection_plumbing,
    "sphere_inclusion": sphere_inclusion,
    "sphere_in_sphere": sphere_in_sphere,
    "cp1_chart": lambda c=1.0: cp_chart(1, c),
    "cp2_chart": lambda c=1.0: cp_chart(2, c),
    "odd_sphere_contact": odd_sphere_contact,
    "product_s2xr": product_s2xr,
    "sphere_in_flat": sphere_in_flat,
    "sphere_in_odd_sphere": sphere_in_odd_sphere,
    "legendrian_sphere": legendrian_sphere,
    "graph_hypersurface": graph_hypersurface,
    "graph_in_cp2": graph_in_cp2,
    "graph_in_cp2_fibered": graph_in_cp2_fibered,
    "linear_submersion": linear_submersion,
    "cosymplectic_identity": cosymplectic_identity,
    "cosymplectic_xi_range": cosymplectic_xi_range,
    "cosymplectic_xi_perp": cosymplectic_xi_perp,
}

CORE_BUILTINS = (
    "flat_identity_r3",
    "flat_identity_r4",
    "flat_identity_r5",
    "projection_plumbing",
    "sphere_inclusion",
    "sphere_in_sphere",
    "cp1_chart",
    "cp2_chart",
    "odd_sphere_contact",
    "product_s2xr",
)


def builtin(name: str, **params) -> Builtin:
    try:
        factory = FACTORIES[name]
    except KeyError:
        raise UnknownBuiltin(f"unknown built-in scenario {name!r}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise UnknownBuiltin(f"bad parameters for {name!r}: {exc}") from None


def catalog_names() -> list[str]:
    return list(FACTORIES)


STRUCTURES: dict[str, Callable[[int, float], ComplexStructure | ContactStructure]] = {
    "standard_complex": lambda n, c: constant_complex_structure(n),
    "hopf_contact": lambda n, c: hopf_contact_structure(n, c),
    "product_cosymplectic": lambda n, c: product_cosymplectic_structure(n),
}
