"""Closed-form curvature of generalized complex and generalized Sasakian space forms.

With ``Omega[a, b] = g(e_a, J e_b)`` (or ``phi`` in place of ``J``) the lowered
tensors are

    GCSF: R_ijkl = f1 (g_jk g_il - g_ik g_jl)
                 + f2 (Omega_ik Omega_lj - Omega_jk Omega_li + 2 Omega_ij Omega_lk)
    GSSF: the above plus
          f3 (eta_i eta_k g_jl - eta_j eta_k g_il + g_ik eta_j eta_l - g_jk eta_i eta_l)

so that ``R(u, v, v, u) = f1 + 3 f2 g(u, J v)^2 - f3 (eta(u)^2 + eta(v)^2)`` on
orthonormal pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from chenmap.chart_geometry import CurvatureTensor, MetricChart
from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.errors import DimensionMismatch, StructureViolation, UnknownFamily
from chenmap.rmap_core import SplitFrames

GCSF = "GCSF"
GSSF = "GSSF"

GCSF_FAMILIES = ("real", "complex", "real_kahler")
GSSF_FAMILIES = ("sasakian", "kenmotsu", "cosymplectic", "almost_C_alpha")


class XiPosition(str, Enum):
    IN_RANGE = "IN_RANGE"
    IN_RANGE_PERP = "IN_RANGE_PERP"
    MIXED = "MIXED"


def table_coefficients(family: str, c: float, alpha: float = 0.0) -> tuple[float, float, float | None]:
    """Constants ``(f1, f2, f3)`` of a named space form; ``f3`` is None for the complex families."""
    table = {
        "real": (c, 0.0, None),
        "complex": (c, c, None),
        "real_kahler": (c + 3 * alpha, c - alpha, None),
        "sasakian": (c + 3, c - 1, c - 1),
        "kenmotsu": (c - 3, c + 1, c + 1),
        "cosymplectic": (c, c, c),
        "almost_C_alpha": (c + 3 * alpha**2, c - alpha**2, c - alpha**2),
    }
    try:
        f1, f2, f3 = table[family]
    except KeyError:
        raise UnknownFamily(f"unknown space-form family {family!r}") from None
    return float(f1), float(f2), None if f3 is None else float(f3)


def family_kind(family: str) -> str:
    if family in GCSF_FAMILIES:
        return GCSF
    if family in GSSF_FAMILIES:
        return GSSF
    raise UnknownFamily(f"unknown space-form family {family!r}")


@dataclass(frozen=True)
class SpaceFormModel:
    """Ambient structure together with constant curvature coefficients.

    For ``GCSF`` only ``J_at`` is used; for ``GSSF`` the triple
    ``phi_at, xi_at, eta_at``. ``chart`` supplies the target metric.
    """

    kind: str
    f1: float
    f2: float
    f3: float
    chart: MetricChart
    J_at: Callable | None = None
    phi_at: Callable | None = None
    xi_at: Callable | None = None
    eta_at: Callable | None = None
    name: str = "model"

    @classmethod
    def gcsf(cls, f1, f2, chart, J_at, name="gcsf") -> "SpaceFormModel":
        return cls(GCSF, float(f1), float(f2), 0.0, chart, J_at=J_at, name=name)

    @classmethod
    def gssf(cls, f1, f2, f3, chart, structure, name="gssf") -> "SpaceFormModel":
        return cls(GSSF, float(f1), float(f2), float(f3), chart,
                   phi_at=structure.phi_at, xi_at=structure.xi_at, eta_at=structure.eta_at, name=name)

    @classmethod
    def from_family(cls, family, c, alpha, chart, structure, name=None) -> "SpaceFormModel":
        f1, f2, f3 = table_coefficients(family, c, alpha)
        if family_kind(family) == GCSF:
            return cls.gcsf(f1, f2, chart, structure.J_at, name or family)
        return cls.gssf(f1, f2, f3, chart, structure, name or family)

    def with_coefficients(self, f1, f2, f3=0.0) -> "SpaceFormModel":
        return SpaceFormModel(self.kind, float(f1), float(f2), float(f3), self.chart,
                              self.J_at, self.phi_at, self.xi_at, self.eta_at, self.name)

    def structure_at(self, x, tol: Tolerances = DEFAULT_TOLERANCES):
        """Validated ``(g, J)`` or ``(g, phi, xi, eta)`` at ``x``."""
        x = np.asarray(x, dtype=float)
        g = self.chart.metric(x, tol)
        n = g.shape[0]
        eye = np.eye(n)
        if self.kind == GCSF:
            if n % 2:
                raise DimensionMismatch(f"{self.name}: GCSF needs even dimension, got {n}")
            J = np.asarray(self.J_at(x), dtype=float)
            _require(np.abs(J @ J + eye).max(), tol, f"{self.name}: J^2 != -I")
            _require(np.abs(J.T @ g @ J - g).max(), tol, f"{self.name}: J is not g-orthogonal")
            return g, J
        if self.kind != GSSF:
            raise StructureViolation(f"unknown model kind {self.kind!r}")
        if n % 2 == 0:
            raise DimensionMismatch(f"{self.name}: GSSF needs odd dimension, got {n}")
        phi = np.asarray(self.phi_at(x), dtype=float)
        xi = np.asarray(self.xi_at(x), dtype=float)
        eta = np.asarray(self.eta_at(x), dtype=float)
        _require(abs(eta @ xi - 1.0), tol, f"{self.name}: eta(xi) != 1")
        _require(np.abs(phi @ phi + eye - np.outer(xi, eta)).max(), tol, f"{self.name}: phi^2 != -I + eta (x) xi")
        _require(np.abs(phi.T @ g @ phi - g + np.outer(eta, eta)).max(), tol, f"{self.name}: phi is not compatible with g")
        _require(np.abs(phi @ xi).max(), tol, f"{self.name}: phi xi != 0")
        _require(np.abs(eta @ phi).max(), tol, f"{self.name}: eta o phi != 0")
        return g, phi, xi, eta


def _require(dev: float, tol: Tolerances, message: str) -> None:
    if not dev <= tol.structure:
        raise StructureViolation(f"{message} (deviation {dev:.3e})")


def _gcsf_components(f1, f2, g, Om) -> np.ndarray:
    R = f1 * (np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g))
    if f2 != 0.0:
        R = R + f2 * (
            np.einsum("ik,lj->ijkl", Om, Om) - np.einsum("jk,li->ijkl", Om, Om) + 2.0 * np.einsum("ij,lk->ijkl", Om, Om)
        )
    return R


def model_curvature_gcsf(model: SpaceFormModel, x, tol: Tolerances = DEFAULT_TOLERANCES) -> CurvatureTensor:
    if model.kind != GCSF:
        raise StructureViolation(f"{model.name}: model_curvature_gcsf needs a GCSF model")
    g, J = model.structure_at(x, tol)
    return CurvatureTensor(g.shape[0], _gcsf_components(model.f1, model.f2, g, g @ J), g)


def model_curvature_gssf(model: SpaceFormModel, x, tol: Tolerances = DEFAULT_TOLERANCES) -> CurvatureTensor:
    if model.kind != GSSF:
        raise StructureViolation(f"{model.name}: model_curvature_gssf needs a GSSF model")
    g, phi, xi, eta = model.structure_at(x, tol)
    R = _gcsf_components(model.f1, model.f2, g, g @ phi)
    if model.f3 != 0.0:
        xb = g @ xi
        R = R + model.f3 * (
            np.einsum("i,k,jl->ijkl", eta, eta, g)
            - np.einsum("j,k,il->ijkl", eta, eta, g)
            + np.einsum("ik,j,l->ijkl", g, eta, xb)
            - np.einsum("jk,i,l->ijkl", g, eta, xb)
        )
    return CurvatureTensor(g.shape[0], R, g)


def model_curvature(model: SpaceFormModel, x, tol: Tolerances = DEFAULT_TOLERANCES) -> CurvatureTensor:
    if model.kind == GCSF:
        return model_curvature_gcsf(model, x, tol)
    return model_curvature_gssf(model, x, tol)


def _structure_operator(model: SpaceFormModel, x, tol: Tolerances) -> np.ndarray:
    parts = model.structure_at(x, tol)
    return parts[1]


def range_endomorphism_P(model: SpaceFormModel, f: SplitFrames | np.ndarray, x,
                         tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """``P[i, j] = g2(R_i, J R_j)`` (``phi`` for GSSF) on an orthonormal range frame."""
    R = f.R_frame if isinstance(f, SplitFrames) else np.asarray(f, dtype=float)
    g = model.chart.metric(np.asarray(x, dtype=float), tol)
    op = _structure_operator(model, x, tol)
    P = R.T @ g @ op @ R
    skew = float(np.max(np.abs(P + P.T), initial=0.0))
    if skew > tol.structure * max(1.0, float(np.max(np.abs(P), initial=0.0))) * 10:
        raise StructureViolation(f"{model.name}: range structure matrix not skew ({skew:.3e})")
    return 0.5 * (P - P.T)


@dataclass(frozen=True)
class PlaneInvariants:
    P_norm_sq: float
    theta: float
    phi: float
    psi: float


def plane_invariants(model: SpaceFormModel, f: SplitFrames | np.ndarray, plane, x,
                     tol: Tolerances = DEFAULT_TOLERANCES) -> PlaneInvariants:
    """Invariants of the range structure and a plane given by two orthonormal range vectors.

    ``plane`` holds target vectors ``(pi_* h1, pi_* h2)``.
    """
    P = range_endomorphism_P(model, f, x, tol)
    g = model.chart.metric(np.asarray(x, dtype=float), tol)
    u, v = (np.asarray(w, dtype=float) for w in plane)
    op = _structure_operator(model, x, tol)
    theta = float((u @ g @ op @ v) ** 2)
    if model.kind == GSSF:
        eta = np.asarray(model.eta_at(np.asarray(x, dtype=float)), dtype=float)
        phi = float((eta @ u) ** 2 + (eta @ v) ** 2)
    else:
        phi = 0.0
    pn = float(np.sum(P**2))
    return PlaneInvariants(pn, theta, phi, 1.5 * pn - 3.0 * theta + phi)


def xi_components(model: SpaceFormModel, f: SplitFrames, x, tol: Tolerances = DEFAULT_TOLERANCES):
    """Norms of the range and range-orthogonal parts of ``xi``."""
    if model.kind != GSSF:
        raise StructureViolation(f"{model.name}: xi is only defined for GSSF models")
    x = np.asarray(x, dtype=float)
    xi = np.asarray(model.xi_at(x), dtype=float)
    g = f.g2
    along_r = f.R_frame.T @ g @ xi
    along_perp = f.Rperp_frame.T @ g @ xi
    return float(np.linalg.norm(along_r)), float(np.linalg.norm(along_perp))


def xi_position(model: SpaceFormModel, f: SplitFrames, x, tol: Tolerances = DEFAULT_TOLERANCES) -> XiPosition:
    in_r, in_perp = xi_components(model, f, x, tol)
    if in_perp < tol.xi:
        return XiPosition.IN_RANGE
    if in_r < tol.xi:
        return XiPosition.IN_RANGE_PERP
    return XiPosition.MIXED
