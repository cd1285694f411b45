"""Chen-type first inequalities for Riemannian maps, evaluated at a point and a plane.

Every ``verify_*`` function returns an :class:`InequalityReport` whose ``lhs``
is the horizontal sectional curvature ``K^H`` of the plane and whose ``rhs`` is
the corresponding lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.errors import DegeneratePlane, DimensionMismatch, RankDeficient, XiCaseMismatch, XiMixed
from chenmap.rmap_core import MapBundle
from chenmap.space_forms import (
    GCSF,
    GCSF_FAMILIES,
    GSSF,
    GSSF_FAMILIES,
    SpaceFormModel,
    XiPosition,
    model_curvature,
    range_endomorphism_P,
    table_coefficients,
    xi_position,
)

# ---------------------------------------------------------------------------
# reports and planes


@dataclass(frozen=True)
class EqualityStructure:
    is_equality_form: bool
    violations: tuple = ()

    def to_dict(self) -> dict:
        return {"is_equality_form": self.is_equality_form, "violations": [list(v) for v in self.violations]}


@dataclass(frozen=True)
class InequalityReport:
    name: str
    lhs: float
    rhs: float
    slack: float
    holds: bool
    equality: bool
    equality_structure: EqualityStructure | None = None
    details: dict = field(default_factory=dict)


def _report(name, lhs, rhs, tol: Tolerances, structure=None, details=None) -> InequalityReport:
    slack = float(lhs - rhs)
    return InequalityReport(
        name, float(lhs), float(rhs), slack, slack >= -tol.slack, abs(slack) < tol.equality, structure, details or {}
    )


def plane_coefficients(bundle: MapBundle, plane) -> np.ndarray:
    """Orthonormal ``r x 2`` coefficient matrix of a plane in the horizontal frame.

    ``plane`` is either a pair of 1-based frame indices or an ``r x 2`` array of
    coefficients (columns need only be independent).
    """
    r = bundle.rank
    if isinstance(plane, (tuple, list)) and len(plane) == 2 and all(isinstance(i, (int, np.integer)) for i in plane):
        i, j = int(plane[0]), int(plane[1])
        if not (1 <= i <= r and 1 <= j <= r) or i == j:
            raise DegeneratePlane(f"plane indices {(i, j)} invalid for rank {r}")
        C = np.zeros((r, 2))
        C[i - 1, 0] = 1.0
        C[j - 1, 1] = 1.0
        return C
    C = np.asarray(plane, dtype=float)
    if C.shape == (2, r):
        C = C.T
    if C.shape != (r, 2):
        raise DegeneratePlane(f"plane coefficients must have shape ({r}, 2), got {C.shape}")
    a = C[:, 0] / np.linalg.norm(C[:, 0])
    b = C[:, 1] - (a @ C[:, 1]) * a
    nb = np.linalg.norm(b)
    if nb < 1e-9 * max(1.0, np.linalg.norm(C[:, 1])):
        raise DegeneratePlane("plane vectors are dependent")
    return np.column_stack([a, b / nb])


def plane_from_source_vectors(bundle: MapBundle, u, v, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Coefficients of a plane given by two horizontal source coordinate vectors."""
    f = bundle.frames
    out = []
    for w in (u, v):
        w = np.asarray(w, dtype=float)
        c = f.H_frame.T @ f.g1 @ w
        if np.linalg.norm(w - f.H_frame @ c) > tol.isometry * max(1.0, np.linalg.norm(w)):
            raise DegeneratePlane("plane vector is not horizontal")
        out.append(c)
    return plane_coefficients(bundle, np.column_stack(out))


def complete_frame(C: np.ndarray) -> np.ndarray:
    """Orthogonal ``r x r`` matrix whose first two columns are ``C``."""
    r = C.shape[0]
    Q, _ = np.linalg.qr(np.column_stack([C, np.eye(r)]))
    Q = Q[:, :r]
    # QR may flip signs of the leading columns
    for a in range(2):
        if Q[:, a] @ C[:, a] < 0:
            Q[:, a] = -Q[:, a]
    return Q


def _sym_sectional(R: np.ndarray, u, v) -> float:
    a = float(np.einsum("ijkl,i,j,k,l->", R, u, v, v, u))
    b = float(np.einsum("ijkl,i,j,k,l->", R, v, u, u, v))
    return 0.5 * (a + b)


@dataclass(frozen=True)
class _Terms:
    r: int
    rho_h2: float
    rho_r2: float
    tau_sq: float
    grad_sq: float
    k_h: float
    k_r: float
    C: np.ndarray


def _terms(bundle: MapBundle, plane) -> _Terms:
    r = bundle.rank
    if r < 3:
        raise RankDeficient(f"Chen inequalities need rank >= 3, got {r}")
    C = plane_coefficients(bundle, plane)
    RH = bundle.RM.restrict(bundle.frames.H_frame).components
    RR = bundle.RN.restrict(bundle.frames.R_frame).components
    return _Terms(
        r,
        float(np.einsum("ijji->", RH)),
        float(np.einsum("ijji->", RR)),
        bundle.tension.norm_sq,
        bundle.sff.norm_sq(),
        _sym_sectional(RH, C[:, 0], C[:, 1]),
        _sym_sectional(RR, C[:, 0], C[:, 1]),
        C,
    )


def _general_rhs(t: _Terms, rho_r2: float, k_r: float) -> float:
    return 0.5 * (t.rho_h2 - (t.r - 2) / (t.r - 1) * t.tau_sq - rho_r2 + 2.0 * k_r)


# ---------------------------------------------------------------------------
# equality structure


def detect_equality_structure(B, tol: Tolerances = DEFAULT_TOLERANCES) -> EqualityStructure:
    """Check the block pattern of the equality case in the given frames.

    ``B`` is a ``SecondFundamentalForm`` or an array ``B[k, i, j]``. Violations
    are reported as 1-based ``(k, i, j)`` with ``k`` counted from ``r + 1``.
    """
    B = np.asarray(getattr(B, "B", B), dtype=float)
    if B.ndim != 3 or B.shape[1] != B.shape[2]:
        raise ValueError(f"B must have shape (codim, r, r), got {B.shape}")
    codim, r, _ = B.shape
    eps = tol.equality
    bad = []
    for k0 in range(codim):
        S = B[k0]
        k = r + 1 + k0
        if k0 == 0:
            target = S[0, 0] + S[1, 1]
            for i in range(r):
                for j in range(r):
                    if i != j and j > i and abs(S[i, j]) >= eps:
                        bad.append((k, i + 1, j + 1))
                if i >= 2 and abs(S[i, i] - target) >= eps:
                    bad.append((k, i + 1, i + 1))
        else:
            for i in range(r):
                for j in range(i, r):
                    if (i >= 2 or j >= 2) and abs(S[i, j]) >= eps:
                        bad.append((k, i + 1, j + 1))
            if abs(S[0, 0] + S[1, 1]) >= eps:
                bad.append((k, 1, 1))
    return EqualityStructure(not bad, tuple(bad))


def adapted_second_fundamental_form(bundle: MapBundle, C: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """``B`` in a frame adapted to the plane: first normal along the tension
    field and ``B^{r+1}_{12} = 0`` after a rotation inside the plane."""
    B = bundle.sff.B
    if B.shape[0] == 0:
        return B
    Q = complete_frame(C)
    B = np.einsum("kab,ai,bj->kij", B, Q, Q)
    tau = bundle.tension.tau
    if np.linalg.norm(tau) >= tol.harmonic:
        N, _ = np.linalg.qr(np.column_stack([tau, np.eye(tau.size)]))
        N = N[:, : tau.size]
        if N[:, 0] @ tau < 0:
            N[:, 0] = -N[:, 0]
        B = np.einsum("kij,kl->lij", B, N)
    _, G = np.linalg.eigh(B[0, :2, :2])
    rot = np.eye(B.shape[1])
    rot[:2, :2] = G
    return np.einsum("kab,ai,bj->kij", B, rot, rot)


def equality_structure_for_plane(bundle: MapBundle, plane, tol: Tolerances = DEFAULT_TOLERANCES) -> EqualityStructure:
    if bundle.rank < 3:
        raise RankDeficient(f"equality structure needs rank >= 3, got {bundle.rank}")
    return detect_equality_structure(adapted_second_fundamental_form(bundle, plane_coefficients(bundle, plane), tol), tol)


# ---------------------------------------------------------------------------
# general inequality


def verify_general_cfi(bundle: MapBundle, plane=(1, 2), tol: Tolerances = DEFAULT_TOLERANCES) -> InequalityReport:
    t = _terms(bundle, plane)
    rhs = _general_rhs(t, t.rho_r2, t.k_r)
    eps = t.rho_h2 - t.rho_r2 - (t.r - 2) / (t.r - 1) * t.tau_sq
    details = {
        "r": t.r,
        "two_rho_H": t.rho_h2,
        "two_rho_R": t.rho_r2,
        "tau_norm_sq": t.tau_sq,
        "sff_norm_sq": t.grad_sq,
        "K_R": t.k_r,
        "epsilon": eps,
        "epsilon_form_slack": t.k_h - (eps / 2 + t.k_r),
        "proof_identity_residual": abs(t.rho_h2 - (t.rho_r2 - t.grad_sq + t.tau_sq)),
        "gauss_residual": bundle.gauss,
    }
    return _report("general_cfi", t.k_h, rhs, tol, equality_structure_for_plane(bundle, t.C, tol), details)


# ---------------------------------------------------------------------------
# space forms


def _space_form_terms(bundle: MapBundle, model: SpaceFormModel, t: _Terms, tol: Tolerances):
    y = bundle.image_point
    P = range_endomorphism_P(model, bundle.frames, y, tol)
    a, b = t.C[:, 0], t.C[:, 1]
    theta = float((a @ P @ b) ** 2)
    phi = 0.0
    if model.kind == GSSF:
        eta = np.asarray(model.eta_at(y), dtype=float)
        u, v = bundle.frames.R_frame @ a, bundle.frames.R_frame @ b
        phi = float((eta @ u) ** 2 + (eta @ v) ** 2)
    RN = model_curvature(model, y, tol)
    RR = RN.restrict(bundle.frames.R_frame).components
    numeric = bundle.RN.restrict(bundle.frames.R_frame).components
    return {
        "P_norm_sq": float(np.sum(P**2)),
        "theta": theta,
        "phi": phi,
        "psi": 1.5 * float(np.sum(P**2)) - 3.0 * theta + phi,
        "model_two_rho_R": float(np.einsum("ijji->", RR)),
        "model_K_R": _sym_sectional(RR, a, b),
        "model_deviation": float(np.max(np.abs(RR - numeric), initial=0.0)),
    }


def _gcsf_rhs(t: _Terms, f1, f2, pn, theta) -> float:
    r = t.r
    return 0.5 * (t.rho_h2 - (r - 2) / (r - 1) * t.tau_sq - (r - 2) * (r + 1) * f1 - 3 * f2 * (pn - 2 * theta))


def _gssf_range_rhs(t: _Terms, f1, f2, f3, pn, theta, phi) -> float:
    r = t.r
    return 0.5 * (
        t.rho_h2 - (r - 2) / (r - 1) * t.tau_sq - f1 * (r * r - r - 2) - 3 * f2 * (pn - 2 * theta)
        + 2 * f3 * (r - 1 - phi)
    )


def _consistency(t: _Terms, sf: dict, rhs: float, tol: Tolerances) -> dict:
    via_general = _general_rhs(t, sf["model_two_rho_R"], sf["model_K_R"])
    dev = abs(via_general - rhs)
    scale = max(1.0, abs(rhs), abs(t.rho_h2))
    return {
        "rhs_via_general": via_general,
        "derivation_deviation": dev,
        "derivation_consistent": dev <= tol.consistency * scale,
        "numeric_rhs": _general_rhs(t, t.rho_r2, t.k_r),
    }


def verify_gcsf_cfi(bundle: MapBundle, model: SpaceFormModel, plane=(1, 2),
                    tol: Tolerances = DEFAULT_TOLERANCES) -> InequalityReport:
    if model.kind != GCSF:
        raise DimensionMismatch(f"{model.name}: verify_gcsf_cfi needs a GCSF model")
    t = _terms(bundle, plane)
    sf = _space_form_terms(bundle, model, t, tol)
    rhs = _gcsf_rhs(t, model.f1, model.f2, sf["P_norm_sq"], sf["theta"])
    details = {"r": t.r, "f1": model.f1, "f2": model.f2, "tau_norm_sq": t.tau_sq, "two_rho_H": t.rho_h2, **sf}
    details.update(_consistency(t, sf, rhs, tol))
    return _report("gcsf_cfi", t.k_h, rhs, tol, equality_structure_for_plane(bundle, t.C, tol), details)


def verify_gssf_cfi(bundle: MapBundle, model: SpaceFormModel, plane=(1, 2),
                    tol: Tolerances = DEFAULT_TOLERANCES, xi_case: XiPosition | str | None = None) -> InequalityReport:
    if model.kind != GSSF:
        raise DimensionMismatch(f"{model.name}: verify_gssf_cfi needs a GSSF model")
    pos = xi_position(model, bundle.frames, bundle.image_point, tol)
    if pos == XiPosition.MIXED:
        raise XiMixed(f"{model.name}: xi is neither in the range nor orthogonal to it")
    if xi_case is not None and XiPosition(xi_case) != pos:
        raise XiCaseMismatch(f"{model.name}: requested xi case {XiPosition(xi_case).value}, found {pos.value}")
    t = _terms(bundle, plane)
    sf = _space_form_terms(bundle, model, t, tol)
    if pos == XiPosition.IN_RANGE:
        rhs = _gssf_range_rhs(t, model.f1, model.f2, model.f3, sf["P_norm_sq"], sf["theta"], sf["phi"])
    else:
        rhs = _gcsf_rhs(t, model.f1, model.f2, sf["P_norm_sq"], sf["theta"])
    details = {
        "r": t.r, "f1": model.f1, "f2": model.f2, "f3": model.f3, "xi_position": pos.value,
        "tau_norm_sq": t.tau_sq, "two_rho_H": t.rho_h2, **sf,
    }
    details.update(_consistency(t, sf, rhs, tol))
    name = "gssf_cfi_xi_range" if pos == XiPosition.IN_RANGE else "gssf_cfi_xi_perp"
    return _report(name, t.k_h, rhs, tol, equality_structure_for_plane(bundle, t.C, tol), details)


# ---------------------------------------------------------------------------
# named families


def printed_gcsf_rhs(family: str, c: float, alpha: float, r: int, rho_h: float, tau_sq: float,
                     pn: float, theta: float) -> float:
    """Per-family closed forms of the complex space form bounds (``rho_h`` is half the scalar curvature)."""
    q = r * r - r - 2
    if family == "real":
        return rho_h - (r - 2) / 2 * ((r + 1) * c + tau_sq / (r - 1))
    if family == "complex":
        return 0.5 * (2 * rho_h - (r - 2) / (r - 1) * tau_sq - c * q - 3 * c * (pn - 2 * theta))
    if family == "real_kahler":
        return 0.5 * (2 * rho_h - (r - 2) / (r - 1) * tau_sq - (c + 3 * alpha) * q - 3 * (c - alpha) * (pn - 2 * theta))
    raise DimensionMismatch(f"{family!r} is not a complex space-form family")


def printed_gssf_rhs(family: str, c: float, alpha: float, r: int, rho_h: float, tau_sq: float,
                     pn: float, theta: float, phi: float, xi_case: XiPosition) -> float:
    """Per-family closed forms of the Sasakian-type bounds, exactly as tabulated.

    For ``xi`` orthogonal to the range the tabulated constants omit a factor
    1/2 on the ``f1`` and ``f2`` terms; the delegated theorem bound is the one
    used for ``holds``.
    """
    base = rho_h - (r - 2) / (2 * (r - 1)) * tau_sq
    a2 = alpha * alpha
    if xi_case == XiPosition.IN_RANGE:
        psi = 1.5 * pn - 3 * theta + phi
        if family == "sasakian":
            return base - r * ((r - 3) * c + 3 * r - 1) / 2 + 4 - (c - 1) * psi
        if family == "kenmotsu":
            return base - r * ((r - 3) * c - 3 * r + 1) / 2 - 4 - (c + 1) * psi
        if family == "cosymplectic":
            return base - c / 2 * r * (r - 3) - c * psi
        if family == "almost_C_alpha":
            return base - r * ((r - 3) * c + a2 * (3 * r - 1)) / 2 + 4 * a2 - (c - a2) * psi
    else:
        q = r * r - r - 2
        w = pn - 2 * theta
        f1, f2, _ = table_coefficients(family, c, alpha)
        if family in GSSF_FAMILIES:
            return base - q * f1 - 3 * f2 * w
    raise DimensionMismatch(f"{family!r} is not a Sasakian-type family")


def _with_family(model: SpaceFormModel, family: str, c: float, alpha: float) -> SpaceFormModel:
    f1, f2, f3 = table_coefficients(family, c, alpha)
    return model.with_coefficients(f1, f2, 0.0 if f3 is None else f3)


def _attach_printed(rep: InequalityReport, printed: float, tol: Tolerances, family: str) -> InequalityReport:
    dev = abs(printed - rep.rhs)
    details = dict(rep.details)
    details.update(
        {
            "family": family,
            "printed_rhs": printed,
            "printed_deviation": dev,
            "printed_agrees": dev <= tol.consistency * max(1.0, abs(rep.rhs)),
        }
    )
    return InequalityReport(rep.name, rep.lhs, rep.rhs, rep.slack, rep.holds, rep.equality, rep.equality_structure, details)


def verify_corollary_gcsf(bundle: MapBundle, model: SpaceFormModel, family: str, c: float, alpha: float = 0.0,
                          plane=(1, 2), tol: Tolerances = DEFAULT_TOLERANCES) -> InequalityReport:
    if family not in GCSF_FAMILIES:
        raise DimensionMismatch(f"{family!r} is not a complex space-form family")
    n = bundle.frames.n
    if family == "real_kahler" and n != 4:
        raise DimensionMismatch(f"real Kaehler space forms are only admitted in dimension 4, target has {n}")
    rep = verify_gcsf_cfi(bundle, _with_family(model, family, c, alpha), plane, tol)
    d = rep.details
    printed = printed_gcsf_rhs(family, c, alpha, d["r"], 0.5 * d["two_rho_H"], d["tau_norm_sq"], d["P_norm_sq"], d["theta"])
    rep = _attach_printed(rep, printed, tol, family)
    return InequalityReport(f"corollary_gcsf_{family}", rep.lhs, rep.rhs, rep.slack, rep.holds, rep.equality,
                            rep.equality_structure, rep.details)


def verify_corollary_gssf(bundle: MapBundle, model: SpaceFormModel, family: str, c: float, alpha: float = 0.0,
                          xi_case: XiPosition | str | None = None, plane=(1, 2),
                          tol: Tolerances = DEFAULT_TOLERANCES) -> InequalityReport:
    if family not in GSSF_FAMILIES:
        raise DimensionMismatch(f"{family!r} is not a Sasakian-type family")
    rep = verify_gssf_cfi(bundle, _with_family(model, family, c, alpha), plane, tol, xi_case)
    d = rep.details
    pos = XiPosition(d["xi_position"])
    printed = printed_gssf_rhs(family, c, alpha, d["r"], 0.5 * d["two_rho_H"], d["tau_norm_sq"], d["P_norm_sq"],
                               d["theta"], d["phi"], pos)
    rep = _attach_printed(rep, printed, tol, family)
    suffix = "xi_range" if pos == XiPosition.IN_RANGE else "xi_perp"
    return InequalityReport(f"corollary_gssf_{family}_{suffix}", rep.lhs, rep.rhs, rep.slack, rep.holds,
                            rep.equality, rep.equality_structure, rep.details)
