"""Minimal horizontal sectional curvature and the first Chen invariant delta^H.

Planes are handled through their unit bivectors ``w = u ^ v``; on those the
sectional curvature is the quadratic form ``w^T M w`` with
``M[(ab), (cd)] = -R_abcd`` (``a < b``, ``c < d``). The smallest eigenvalue of
``M`` (corrected with the Hodge star when ``r = 4``) is a lower bound for the
minimum over planes and gives the certified gap of the grid search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
from scipy.optimize import minimize_scalar

from chenmap.chart_geometry import CurvatureTensor, check_orthonormal
from chenmap.chen_inequalities import complete_frame, equality_structure_for_plane
from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.errors import DegeneratePlane, NotHarmonic, RankDeficient, XiCaseMismatch, XiMixed
from chenmap.rmap_core import MapBundle
from chenmap.space_forms import GCSF, GSSF, SpaceFormModel, XiPosition, range_endomorphism_P, xi_position

EXHAUSTIVE = "exhaustive_grid"
MULTISTART = "multistart_local"
DEFAULT_GRID = 24
DEFAULT_STARTS = 32
GRAD_TOL = 1e-8
MAX_SWEEPS = 500
STALL_TOL = 1e-13


@dataclass(frozen=True)
class PlaneSearchResult:
    min_value: float
    argmin_plane: np.ndarray  # r x 2 coefficients in the horizontal frame
    method: str
    evaluations: int
    certified_gap: float | None = None
    lower_bound: float | None = None
    argmin_angles: tuple | None = None


def symmetrize_curvature(R: np.ndarray) -> np.ndarray:
    """Project onto tensors with the antisymmetries and pair symmetry of a curvature tensor."""
    S = 0.25 * (R - R.transpose(1, 0, 2, 3) - R.transpose(0, 1, 3, 2) + R.transpose(1, 0, 3, 2))
    return 0.5 * (S + S.transpose(2, 3, 0, 1))


def bivector_form(R: np.ndarray) -> tuple[np.ndarray, list]:
    r = R.shape[0]
    pairs = list(combinations(range(r), 2))
    M = np.empty((len(pairs), len(pairs)))
    for p, (a, b) in enumerate(pairs):
        for q, (c, d) in enumerate(pairs):
            M[p, q] = -R[a, b, c, d]
    return 0.5 * (M + M.T), pairs


def _hodge4(pairs) -> np.ndarray:
    """Hodge star on 2-vectors of R^4 in the ``pairs`` basis."""
    star = np.zeros((6, 6))
    idx = {p: k for k, p in enumerate(pairs)}
    for (a, b), (c, d) in product(pairs, pairs):
        if len({a, b, c, d}) == 4:
            perm = [a, b, c, d]
            sign = 1
            for i in range(4):
                for j in range(i + 1, 4):
                    if perm[i] > perm[j]:
                        sign = -sign
            star[idx[(a, b)], idx[(c, d)]] = sign
    return star


def plane_lower_bound(R: np.ndarray) -> float:
    """Lower bound for the minimal sectional curvature (exact for ``r <= 4``)."""
    M, pairs = bivector_form(symmetrize_curvature(R))
    r = R.shape[0]
    lam = float(np.linalg.eigvalsh(M)[0])
    if r != 4:
        return lam
    star = _hodge4(pairs)
    span = float(np.abs(np.linalg.eigvalsh(M)).max()) + 1.0
    res = minimize_scalar(lambda t: -np.linalg.eigvalsh(M + t * star)[0], bounds=(-span, span), method="bounded",
                          options={"xatol": 1e-12})
    return max(lam, float(-res.fun))


def _hemisphere(dim: int, N: int):
    """Angle tuples and unit vectors covering a closed hemisphere of S^{dim-1} (``x_0 >= 0``)."""
    step = 2 * np.pi / N
    if dim == 1:
        return [()], np.ones((1, 1))
    if dim == 2:
        angles = [(k * step,) for k in range(N // 2)]
        return angles, np.array([[np.cos(t), np.sin(t)] for (t,) in angles])
    first = [k * step for k in range(N // 4 + 1)]
    middle = [k * step for k in range(N // 2 + 1)]
    last = [k * step for k in range(N)]
    grids = [first] + [middle] * (dim - 3) + [last]
    angles = list(product(*grids))
    pts = np.empty((len(angles), dim))
    for row, ang in enumerate(angles):
        s = 1.0
        for i, t in enumerate(ang):
            pts[row, i] = s * np.cos(t)
            s *= np.sin(t)
        pts[row, dim - 1] = s
    return angles, pts


def _sphere_point(angles) -> np.ndarray:
    """Unit vector with hyperspherical coordinates ``angles`` (``len + 1`` components)."""
    out = np.empty(len(angles) + 1)
    s = 1.0
    for i, t in enumerate(angles):
        out[i] = s * np.cos(t)
        s *= np.sin(t)
    out[-1] = s
    return out


def plane_from_angles(angles, r: int) -> np.ndarray:
    """Orthonormal ``r x 2`` plane from ``2r - 3`` grid angles (see ``argmin_angles``)."""
    angles = [float(a) for a in angles]
    if r < 3 or len(angles) != 2 * r - 3:
        raise DegeneratePlane(f"a plane in rank {r} needs {2 * r - 3} angles, got {len(angles)}")
    u = _sphere_point(angles[: r - 1])
    s = _sphere_point(angles[r - 1 :])
    w = -u.copy()
    w[0] += 1.0
    nw = w @ w
    Q = np.eye(r) if nw < 1e-30 else np.eye(r) - 2.0 * np.outer(w, w) / nw
    return np.column_stack([u, Q[:, 1:] @ s])


def _restricted(RM: CurvatureTensor, H_frame, tol: Tolerances) -> np.ndarray:
    H = np.asarray(H_frame, dtype=float)
    if RM.metric is not None:
        check_orthonormal(H, RM.metric, tol.frame, "horizontal frame")
    r = H.shape[1]
    if r < 3:
        raise RankDeficient(f"delta invariants need rank >= 3, got {r}")
    return symmetrize_curvature(RM.restrict(H).components)


def exhaustive_search(R: np.ndarray, N: int = DEFAULT_GRID) -> PlaneSearchResult:
    r = R.shape[0]
    if r > 4:
        raise ValueError("the exhaustive grid is limited to rank <= 4")
    if N < 4 or N % 4:
        raise ValueError("grid resolution must be a positive multiple of 4")
    M, pairs = bivector_form(R)
    u_angles, U = _hemisphere(r, N)
    s_angles, S = _hemisphere(r - 1, N)
    # batched Householder reflections sending e_0 to each u
    Wh = -U.copy()
    Wh[:, 0] += 1.0
    nw = np.einsum("ua,ua->u", Wh, Wh)
    scale = np.where(nw < 1e-30, 0.0, 2.0 / np.where(nw < 1e-30, 1.0, nw))
    Q = np.eye(r)[None] - scale[:, None, None] * np.einsum("ua,ub->uab", Wh, Wh)
    V = np.einsum("sk,uak->usa", S, Q[:, :, 1:])
    Ub = np.broadcast_to(U[:, None, :], V.shape)
    W = np.stack([Ub[..., a] * V[..., b] - Ub[..., b] * V[..., a] for a, b in pairs], axis=-1)
    K = np.einsum("usp,pq,usq->us", W, M, W)
    flat = int(np.argmin(K))
    iu, js = divmod(flat, K.shape[1])
    best = (float(K[iu, js]), (u_angles[iu], s_angles[js]), np.column_stack([U[iu], V[iu, js]]))
    evals = K.size
    lb = plane_lower_bound(R)
    return PlaneSearchResult(best[0], best[2], EXHAUSTIVE, evals, max(0.0, best[0] - lb), lb,
                             tuple(float(a) for a in best[1][0] + best[1][1]))


def _local_descent(R: np.ndarray, Q: np.ndarray):
    r = R.shape[0]
    evals = 0
    best = np.inf
    for _ in range(MAX_SWEEPS):
        before = best
        grad_sq = 0.0
        for a in (0, 1):
            o = 1 - a
            # y stays fixed while column a rotates against the complement
            Ry = np.einsum("ijkl,j,k->il", R, Q[:, o], Q[:, o])
            for k in range(2, r):
                x, z = Q[:, a].copy(), Q[:, k].copy()
                A, D, C = x @ Ry @ x, z @ Ry @ z, x @ Ry @ z
                evals += 1
                best = min(best, A)
                grad_sq += 4.0 * C * C
                t = 0.5 * np.arctan2(-C, -(A - D) / 2)
                c, s = np.cos(t), np.sin(t)
                Q[:, a], Q[:, k] = c * x + s * z, -s * x + c * z
                best = min(best, (A + D) / 2 - np.hypot((A - D) / 2, C))
        # degenerate minima (e.g. a circle of holomorphic planes) make the gradient decay slowly
        if np.sqrt(grad_sq) < GRAD_TOL or before - best < STALL_TOL * max(1.0, abs(best)):
            break
    val = float(np.einsum("ijkl,i,j,k,l->", R, Q[:, 0], Q[:, 1], Q[:, 1], Q[:, 0]))
    return min(best, val), val, Q[:, :2].copy(), evals + 1


def multistart_search(R: np.ndarray, starts: int = DEFAULT_STARTS, seed: int = 0) -> PlaneSearchResult:
    r = R.shape[0]
    rng = np.random.default_rng(seed)
    results = []
    evals = 0
    for _ in range(starts):
        Q, _ = np.linalg.qr(rng.normal(size=(r, r)))
        probe_min, final, plane, e = _local_descent(R, Q)
        evals += e
        results.append((final, probe_min, plane))
    idx = int(np.argmin([f for f, _, _ in results]))
    min_value = min(min(p for _, p, _ in results), results[idx][0])
    return PlaneSearchResult(min_value, results[idx][2], MULTISTART, evals)


def min_sectional_curvature(RM: CurvatureTensor, H_frame, mode: str = EXHAUSTIVE, budget: int | None = None,
                            seed: int = 0, tol: Tolerances = DEFAULT_TOLERANCES) -> PlaneSearchResult:
    """Minimise the sectional curvature of ``RM`` over planes in span(H_frame).

    ``budget`` is the number of samples per full turn for the grid and the
    number of starts for the multistart search.
    """
    R = _restricted(RM, H_frame, tol)
    if mode == EXHAUSTIVE:
        return exhaustive_search(R, budget or DEFAULT_GRID)
    if mode == MULTISTART:
        return multistart_search(R, budget or DEFAULT_STARTS, seed)
    raise ValueError(f"unknown search mode {mode!r}")


def delta_h(RM: CurvatureTensor, H_frame, search: PlaneSearchResult, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    R = _restricted(RM, H_frame, tol)
    return 0.5 * float(np.einsum("ijji->", R)) - search.min_value


# ---------------------------------------------------------------------------
# bounds


@dataclass(frozen=True)
class DeltaReport:
    delta: float
    bound_name: str
    bound_value: float
    holds: bool
    equality: bool
    statement_flags: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)


def gcsf_delta_bound(item: int, r: int, tau_sq: float, f1: float, f2: float) -> float:
    base = (r - 2) / 2 * (tau_sq / (r - 1) + (r + 1) * f1)
    return base + 1.5 * r * f2 if item == 1 else base


def gssf_delta_bound(xi_case: XiPosition, item: int, r: int, tau_sq: float, f1: float, f2: float, f3: float) -> float:
    base = (r - 2) / 2 * (tau_sq / (r - 1) + (r + 1) * f1)
    if xi_case == XiPosition.IN_RANGE:
        return {
            1: base - f3 * (r - 1),
            2: base + 1.5 * r * f2 - f3 * (r - 1),
            3: base - (r - 2) * f3,
            4: base + 1.5 * r * f2 - (r - 2) * f3,
        }[item]
    return base if item == 1 else base + 1.5 * r * f2


GCSF_STATEMENTS = {1: "ABCD", 2: "CDE"}
GSSF_RANGE_STATEMENTS = {1: "CDEF", 2: "CDGH", 3: "CDEI", 4: "BCDGI"}
GSSF_PERP_STATEMENTS = {1: "CDE", 2: "CDGH"}


def _gcsf_item(f2: float) -> int:
    return 1 if f2 > 0 else 2


def _gssf_item(xi_case: XiPosition, f2: float, f3: float) -> int:
    if xi_case == XiPosition.IN_RANGE_PERP:
        return 2 if f2 > 0 else 1
    return {(False, False): 1, (True, False): 2, (False, True): 3, (True, True): 4}[(f2 > 0, f3 > 0)]


def _search_for(bundle: MapBundle, search, mode, budget, seed, tol) -> PlaneSearchResult:
    if search is not None:
        return search
    if mode is None:
        mode = EXHAUSTIVE if bundle.rank <= 4 else MULTISTART
    return min_sectional_curvature(bundle.RM, bundle.frames.H_frame, mode, budget, seed, tol)


def statement_flags(bundle: MapBundle, model: SpaceFormModel, C: np.ndarray,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> dict:
    """Numerical truth of the structural statements A-I in the frame adapted to ``C``."""
    eps = 1e-6
    r = bundle.rank
    y = bundle.image_point
    Q = complete_frame(C)
    P = Q.T @ range_endomorphism_P(model, bundle.frames, y, tol) @ Q
    g = bundle.frames.g2
    op = model.structure_at(y, tol)[1]
    R = bundle.frames.R_frame @ Q
    image = op @ R
    pn = float(np.sum(P**2))
    full = float(np.einsum("ai,ab,bi->", image, g, image))
    flags = {
        "A": r % 2 == 0 and abs(pn - r) < eps,
        "B": abs(P[0, 1]) < eps,
        "C": equality_structure_for_plane(bundle, C, tol).is_equality_form,
        "D": True,
        "E": bool(np.all(np.abs(P[2:, 2:]) < eps)),
    }
    if model.kind == GSSF:
        eta = np.asarray(model.eta_at(y), dtype=float)
        e1, e2 = eta @ R[:, 0], eta @ R[:, 1]
        flags.update(
            {
                "F": abs(e1) < eps and abs(e2) < eps,
                "G": abs(full - pn) < eps,
                "H": abs(P[0, 1]) < eps,
                "I": abs(abs(e1) - 1) < eps or abs(abs(e2) - 1) < eps,
            }
        )
    return flags


def _delta_report(bundle, model, search, name, item, bound, alt, statements, tol, extra) -> DeltaReport:
    rh2 = float(np.einsum("ijji->", symmetrize_curvature(bundle.RM.restrict(bundle.frames.H_frame).components)))
    delta = 0.5 * rh2 - search.min_value
    flags = statement_flags(bundle, model, search.argmin_plane, tol)
    details = {
        "r": bundle.rank,
        "rho_H": 0.5 * rh2,
        "min_sectional": search.min_value,
        "search_method": search.method,
        "certified_gap": search.certified_gap,
        "tau_norm_sq": bundle.tension.norm_sq,
        "item": item,
        "equality_statements": statements,
        "equality_statements_hold": all(flags.get(s, False) for s in statements),
        "boundary_deviation": max((abs(bound - a) for a in alt), default=None),
        **extra,
    }
    return DeltaReport(delta, name, bound, delta <= bound + tol.slack, abs(bound - delta) < tol.equality, flags, details)


def verify_delta_bound_gcsf(bundle: MapBundle, model: SpaceFormModel, search: PlaneSearchResult | None = None,
                            mode: str | None = None, budget: int | None = None, seed: int = 0,
                            tol: Tolerances = DEFAULT_TOLERANCES, tau_sq: float | None = None) -> DeltaReport:
    if model.kind != GCSF:
        raise XiCaseMismatch(f"{model.name}: GCSF bound requested for a {model.kind} model")
    if bundle.rank < 3:
        raise RankDeficient(f"delta invariants need rank >= 3, got {bundle.rank}")
    search = _search_for(bundle, search, mode, budget, seed, tol)
    r, t2 = bundle.rank, bundle.tension.norm_sq if tau_sq is None else tau_sq
    item = _gcsf_item(model.f2)
    bound = gcsf_delta_bound(item, r, t2, model.f1, model.f2)
    alt = [gcsf_delta_bound(3 - item, r, t2, model.f1, model.f2)] if model.f2 == 0 else []
    return _delta_report(bundle, model, search, f"delta_gcsf_{item}", item, bound, alt, GCSF_STATEMENTS[item], tol,
                         {"f1": model.f1, "f2": model.f2})


def _resolve_xi(bundle: MapBundle, model: SpaceFormModel, xi_case, tol) -> XiPosition:
    pos = xi_position(model, bundle.frames, bundle.image_point, tol)
    if pos == XiPosition.MIXED:
        raise XiMixed(f"{model.name}: xi is neither in the range nor orthogonal to it")
    if xi_case is not None and XiPosition(xi_case) != pos:
        raise XiCaseMismatch(f"{model.name}: requested xi case {XiPosition(xi_case).value}, found {pos.value}")
    return pos


def verify_delta_bound_gssf(bundle: MapBundle, model: SpaceFormModel, xi_case=None,
                            search: PlaneSearchResult | None = None, mode: str | None = None,
                            budget: int | None = None, seed: int = 0, tol: Tolerances = DEFAULT_TOLERANCES,
                            tau_sq: float | None = None) -> DeltaReport:
    if model.kind != GSSF:
        raise XiCaseMismatch(f"{model.name}: GSSF bound requested for a {model.kind} model")
    if bundle.rank < 3:
        raise RankDeficient(f"delta invariants need rank >= 3, got {bundle.rank}")
    pos = _resolve_xi(bundle, model, xi_case, tol)
    search = _search_for(bundle, search, mode, budget, seed, tol)
    r, t2 = bundle.rank, bundle.tension.norm_sq if tau_sq is None else tau_sq
    f1, f2, f3 = model.f1, model.f2, model.f3
    item = _gssf_item(pos, f2, f3)
    bound = gssf_delta_bound(pos, item, r, t2, f1, f2, f3)
    alt = []
    if pos == XiPosition.IN_RANGE:
        if f2 == 0:
            alt.append(gssf_delta_bound(pos, _gssf_item(pos, 1.0, f3), r, t2, f1, f2, f3))
        if f3 == 0:
            alt.append(gssf_delta_bound(pos, _gssf_item(pos, f2, 1.0), r, t2, f1, f2, f3))
        if f2 == 0 and f3 == 0:
            alt.append(gssf_delta_bound(pos, 4, r, t2, f1, f2, f3))
        statements = GSSF_RANGE_STATEMENTS[item]
    else:
        if f2 == 0:
            alt.append(gssf_delta_bound(pos, 2, r, t2, f1, f2, f3))
        statements = GSSF_PERP_STATEMENTS[item]
    suffix = "xi_range" if pos == XiPosition.IN_RANGE else "xi_perp"
    return _delta_report(bundle, model, search, f"delta_gssf_{suffix}_{item}", item, bound, alt, statements, tol,
                         {"f1": f1, "f2": f2, "f3": f3, "xi_position": pos.value})


def harmonic_constant(model: SpaceFormModel, r: int, xi_case: XiPosition | None = None) -> float:
    """Bounds for harmonic maps in the tabulated closed form."""
    f1, f2, f3 = model.f1, model.f2, model.f3
    if model.kind == GCSF or xi_case == XiPosition.IN_RANGE_PERP:
        if f2 <= 0:
            return (r + 1) * (r - 2) * f1 / 2
        return ((r + 1) * (r - 2) * f1 + 3 * r * f2) / 2
    if f2 <= 0 and f3 <= 0:
        return (r + 1) * (r - 2) / 2 * f1 - (r - 1) * f3
    if f2 > 0 and f3 <= 0:
        return (r + 1) * (r - 2) / 2 * f1 + 1.5 * r * f2 - (r - 1) * f3
    if f3 > 0 and f2 <= 0:
        return (r - 2) * ((r + 1) / 2 * f1 - f3)
    return (r - 2) * ((r + 1) / 2 * f1 - f3) + 1.5 * r * f2


def verify_harmonic_corollaries(bundle: MapBundle, model: SpaceFormModel, xi_case=None,
                                search: PlaneSearchResult | None = None, mode: str | None = None,
                                budget: int | None = None, seed: int = 0,
                                tol: Tolerances = DEFAULT_TOLERANCES) -> DeltaReport:
    if not bundle.tension.harmonic:
        raise NotHarmonic(f"tension field norm {np.sqrt(bundle.tension.norm_sq):.3e} exceeds harmonic tolerance")
    if model.kind == GCSF:
        rep = verify_delta_bound_gcsf(bundle, model, search, mode, budget, seed, tol, tau_sq=0.0)
        pos = None
    else:
        rep = verify_delta_bound_gssf(bundle, model, xi_case, search, mode, budget, seed, tol, tau_sq=0.0)
        pos = XiPosition(rep.details["xi_position"])
    const = harmonic_constant(model, bundle.rank, pos)
    dev = abs(const - rep.bound_value)
    details = dict(rep.details)
    details.update({"corollary_constant": const, "corollary_deviation": dev, "corollary_agrees": dev <= 1e-12 * max(1.0, abs(const))})
    return DeltaReport(rep.delta, "harmonic_" + rep.bound_name, rep.bound_value, rep.holds, rep.equality,
                       rep.statement_flags, details)
