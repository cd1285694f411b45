"""Riemannian maps at a point.

Given a smooth map between two charts, this module splits the tangent spaces
into vertical/horizontal and range/range-orthogonal parts, computes the second
fundamental form on horizontal vectors, its trace (the tension field), the
shape operators and the Gauss-equation residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from chenmap.chart_geometry import (
    CurvatureTensor,
    MetricChart,
    check_orthonormal,
    christoffel,
    riemann,
)
from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.errors import IsometryViolation, OutOfDomain, RankDeficient

TIE_REL = 1e-8


@dataclass(frozen=True)
class MapScenario:
    """A candidate Riemannian map evaluated at ``base_point``."""

    source: MetricChart
    target: MetricChart
    map_at: Callable[[np.ndarray], np.ndarray]
    base_point: np.ndarray
    declared_rank_min: int = 3
    name: str = "scenario"

    def __post_init__(self):
        object.__setattr__(self, "base_point", np.asarray(self.base_point, dtype=float))

    @property
    def image_point(self) -> np.ndarray:
        return np.asarray(self.map_at(self.base_point), dtype=float)

    def at(self, point) -> "MapScenario":
        return MapScenario(self.source, self.target, self.map_at, point, self.declared_rank_min, self.name)


@dataclass(frozen=True)
class SplitFrames:
    """Orthonormal frames of V, H (source) and R, R-perp (target); frames are columns."""

    J_push: np.ndarray
    H_frame: np.ndarray
    V_frame: np.ndarray
    R_frame: np.ndarray
    Rperp_frame: np.ndarray
    g1: np.ndarray = field(repr=False)
    g2: np.ndarray = field(repr=False)
    singular_values: np.ndarray = field(repr=False)

    @property
    def rank(self) -> int:
        return self.H_frame.shape[1]

    @property
    def m(self) -> int:
        return self.J_push.shape[1]

    @property
    def n(self) -> int:
        return self.J_push.shape[0]

    def rotated(self, Q) -> "SplitFrames":
        """Same subspaces with ``H`` (and correspondingly ``R``) rotated by the orthogonal ``Q``."""
        Q = np.asarray(Q, dtype=float)
        return SplitFrames(
            self.J_push,
            self.H_frame @ Q,
            self.V_frame,
            self.R_frame @ Q,
            self.Rperp_frame,
            self.g1,
            self.g2,
            self.singular_values,
        )

    def with_normal_rotation(self, Q) -> "SplitFrames":
        Q = np.asarray(Q, dtype=float)
        return SplitFrames(
            self.J_push, self.H_frame, self.V_frame, self.R_frame, self.Rperp_frame @ Q,
            self.g1, self.g2, self.singular_values,
        )


@dataclass(frozen=True)
class SecondFundamentalForm:
    """``B[k, i, j] = g2((nabla pi_*)(h_i, h_j), V_k)``."""

    B: np.ndarray
    range_residual: float = 0.0
    symmetry_residual: float = 0.0

    @property
    def rank(self) -> int:
        return self.B.shape[1]

    @property
    def codim(self) -> int:
        return self.B.shape[0]

    def norm_sq(self) -> float:
        return float(np.sum(self.B**2))


@dataclass(frozen=True)
class Tension:
    tau: np.ndarray
    norm_sq: float
    harmonic: bool


def jacobian_fd(f: Callable, x, step: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cols = []
    for a in range(x.size):
        e = np.zeros(x.size)
        e[a] = step
        cols.append((np.asarray(f(x + e), dtype=float) - np.asarray(f(x - e), dtype=float)) / (2.0 * step))
    return np.column_stack(cols)


def _pivoted_mgs(vectors: np.ndarray, g: np.ndarray, count: int) -> np.ndarray:
    """``count`` g-orthonormal vectors from the columns of ``vectors`` by pivoted Gram-Schmidt.

    Pivots pick the largest remaining norm; near-ties resolve to the lowest column index.
    """
    W = np.array(vectors, dtype=float, copy=True)
    out = []
    for _ in range(count):
        norms = np.sqrt(np.maximum(np.einsum("ia,ij,ja->a", W, g, W), 0.0))
        best = norms.max()
        if best <= 0.0:
            break
        pivot = int(np.flatnonzero(norms >= best * (1.0 - TIE_REL))[0])
        q = W[:, pivot] / norms[pivot]
        out.append(q)
        W = W - np.outer(q, q @ g @ W)
    if len(out) < count:
        raise RankDeficient("could not build a full frame")
    return np.column_stack(out) if out else np.zeros((g.shape[0], 0))


def _lowdin(F: np.ndarray, g: np.ndarray) -> np.ndarray:
    if F.shape[1] == 0:
        return F
    gram = F.T @ g @ F
    w, U = np.linalg.eigh(gram)
    return F @ (U @ np.diag(w**-0.5) @ U.T)


def split_frames(
    s: MapScenario,
    step: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    rank_min: int | None = None,
) -> SplitFrames:
    """Decompose the tangent spaces at ``s.base_point`` and build canonical orthonormal frames."""
    step = tol.fd_step if step is None else step
    x = s.base_point
    y = s.image_point
    if not s.target.is_valid(y):
        raise OutOfDomain(f"{s.name}: image point {y.tolist()} outside target chart")
    g1 = s.source.metric(x, tol)
    g2 = s.target.metric(y, tol)
    D = jacobian_fd(s.map_at, x, step)
    m, n = g1.shape[0], g2.shape[0]
    if D.shape != (n, m):
        raise ValueError(f"{s.name}: map Jacobian has shape {D.shape}, expected {(n, m)}")

    L1 = np.linalg.cholesky(g1)
    L2 = np.linalg.cholesky(g2)
    A = L2.T @ D @ np.linalg.inv(L1.T)
    U, sv, Wt = np.linalg.svd(A)
    smax = sv[0] if sv.size else 0.0
    r = int(np.sum(sv > tol.rank_rel * smax)) if smax > 0 else 0
    need = s.declared_rank_min if rank_min is None else rank_min
    if r < need:
        raise RankDeficient(f"{s.name}: rank {r} below required {need}")

    L1inv_T = np.linalg.inv(L1.T)
    L2inv_T = np.linalg.inv(L2.T)
    H0 = L1inv_T @ Wt[:r].T
    R0 = L2inv_T @ U[:, :r]
    proj_H = H0 @ H0.T @ g1
    proj_V = np.eye(m) - proj_H
    proj_Rp = np.eye(n) - R0 @ R0.T @ g2

    H = _pivoted_mgs(proj_H, g1, r)
    V = _pivoted_mgs(proj_V, g1, m - r)
    Rp = _pivoted_mgs(proj_Rp, g2, n - r)
    pushed = D @ H
    dev = np.max(np.abs(pushed.T @ g2 @ pushed - np.eye(r)), initial=0.0)
    if dev > tol.isometry:
        raise IsometryViolation(f"{s.name}: g1(X,Y) != g2(pi*X, pi*Y) on H, deviation {dev:.3e}")
    R = _lowdin(pushed, g2)

    frames = SplitFrames(D, H, V, R, Rp, g1, g2, sv)
    check_orthonormal(np.column_stack([V, H]), g1, tol.frame, "source frame")
    check_orthonormal(np.column_stack([R, Rp]), g2, tol.frame, "target frame")
    return frames


def second_derivative_fd(f: Callable, x, a, b, step: float) -> np.ndarray:
    """``D^2 f(x)[a, b]`` by the four-point central stencil."""
    a = step * np.asarray(a, dtype=float)
    b = step * np.asarray(b, dtype=float)
    return (
        np.asarray(f(x + a + b)) - np.asarray(f(x + a - b)) - np.asarray(f(x - a + b)) + np.asarray(f(x - a - b))
    ) / (4.0 * step * step)


def second_fundamental_vectors(s: MapScenario, f: SplitFrames, step: float | None = None,
                               tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """``b[:, i, j] = (nabla pi_*)(h_i, h_j)`` in target coordinates."""
    step = tol.fd_step if step is None else step
    x = s.base_point
    y = s.image_point
    gM = christoffel(s.source, x, step, tol)
    gN = christoffel(s.target, y, step, tol)
    H = f.H_frame
    pushed = f.J_push @ H
    r = H.shape[1]
    b = np.empty((f.n, r, r))
    for i in range(r):
        for j in range(i, r):
            d2 = second_derivative_fd(s.map_at, x, H[:, i], H[:, j], step)
            val = d2 + np.einsum("kab,a,b->k", gN, pushed[:, i], pushed[:, j]) - f.J_push @ np.einsum(
                "kab,a,b->k", gM, H[:, i], H[:, j]
            )
            b[:, i, j] = b[:, j, i] = val
    return b


def second_fundamental_form(s: MapScenario, f: SplitFrames, step: float | None = None,
                            tol: Tolerances = DEFAULT_TOLERANCES) -> SecondFundamentalForm:
    """Normal components of ``nabla pi_*`` on the horizontal frame.

    Raises IsometryViolation if a tangential (range) component exceeds ``sff``.
    """
    b = second_fundamental_vectors(s, f, step, tol)
    B = np.einsum("aij,ab,bk->kij", b, f.g2, f.Rperp_frame)
    tangential = np.einsum("aij,ab,bk->kij", b, f.g2, f.R_frame)
    scale = max(1.0, float(np.max(np.abs(b), initial=0.0)))
    resid = float(np.max(np.abs(tangential), initial=0.0))
    if resid > tol.sff * scale:
        raise IsometryViolation(f"{s.name}: second fundamental form has range component {resid:.3e}")
    sym = float(np.max(np.abs(B - B.transpose(0, 2, 1)), initial=0.0))
    return SecondFundamentalForm(0.5 * (B + B.transpose(0, 2, 1)), resid, sym)


def tension_field(B: SecondFundamentalForm, tol: Tolerances = DEFAULT_TOLERANCES) -> Tension:
    tau = np.einsum("kii->k", B.B) if B.B.size else np.zeros(B.codim)
    norm_sq = float(tau @ tau)
    return Tension(tau, norm_sq, bool(np.sqrt(norm_sq) < tol.harmonic))


def shape_operator(f: SplitFrames | None, B: SecondFundamentalForm, k: int) -> np.ndarray:
    """Matrix of ``S_{V_k}`` in the horizontal frame (``k`` is 0-based into R-perp)."""
    if not 0 <= k < B.codim:
        raise IndexError(f"normal index {k} out of range for codimension {B.codim}")
    S = B.B[k]
    return 0.5 * (S + S.T)


def gauss_residual(f: SplitFrames, B: SecondFundamentalForm, RM: CurvatureTensor, RN: CurvatureTensor) -> float:
    """Max over horizontal frame 4-tuples of |R^M - R^N(pi_*) - (B B - B B)|."""
    lhs = RM.restrict(f.H_frame).components
    rn = RN.restrict(f.R_frame).components
    b = B.B
    quad = np.einsum("xjk,xil->ijkl", b, b) - np.einsum("xik,xjl->ijkl", b, b)
    return float(np.max(np.abs(lhs - rn - quad), initial=0.0))


@dataclass(frozen=True)
class MapBundle:
    """Everything evaluated at one point of a Riemannian map."""

    scenario: MapScenario
    frames: SplitFrames
    sff: SecondFundamentalForm
    RM: CurvatureTensor
    RN: CurvatureTensor
    tension: Tension
    gauss: float

    @property
    def rank(self) -> int:
        return self.frames.rank

    @property
    def image_point(self) -> np.ndarray:
        return self.scenario.image_point

    def rotated(self, Q) -> "MapBundle":
        """Bundle expressed in the horizontal frame rotated by the orthogonal ``Q``."""
        Q = np.asarray(Q, dtype=float)
        B = np.einsum("kab,ai,bj->kij", self.sff.B, Q, Q)
        sff = SecondFundamentalForm(B, self.sff.range_residual, self.sff.symmetry_residual)
        return MapBundle(self.scenario, self.frames.rotated(Q), sff, self.RM, self.RN, self.tension, self.gauss)


def build_bundle(
    s: MapScenario,
    step: float | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    rank_min: int | None = None,
    RN: CurvatureTensor | None = None,
) -> MapBundle:
    frames = split_frames(s, step, tol, rank_min)
    sff = second_fundamental_form(s, frames, step, tol)
    RM = riemann(s.source, s.base_point, step, tol)
    if RN is None:
        RN = riemann(s.target, s.image_point, step, tol)
    return MapBundle(s, frames, sff, RM, RN, tension_field(sff, tol), gauss_residual(frames, sff, RM, RN))


def proof_identity_residual(b: MapBundle) -> float:
    """|2 rho^H - (2 rho^R - |nabla pi_*|^2 + |tau|^2)| on the horizontal frame."""
    rh = float(np.einsum("ijji->", b.RM.restrict(b.frames.H_frame).components))
    rr = float(np.einsum("ijji->", b.RN.restrict(b.frames.R_frame).components))
    return abs(rh - (rr - b.sff.norm_sq() + b.tension.norm_sq))
