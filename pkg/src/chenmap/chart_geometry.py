"""Chart-level tensor calculus.

Metrics are sampled pointwise from a coordinate chart and differentiated with
second-order central differences. Curvature follows the convention

    R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z,
    R(X, Y, Z, W) = g(R(X, Y)Z, W),

so that ``R(u, v, v, u) / |u ^ v|^2`` is the sectional curvature and the unit
round sphere has K = +1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.errors import (
    DegeneratePlane,
    NonOrthonormalFrame,
    OutOfDomain,
    SingularMetric,
)


def _always_valid(x: np.ndarray) -> bool:
    return True


@dataclass(frozen=True)
class MetricChart:
    """A coordinate chart carrying a smooth Riemannian metric.

    ``metric_at`` maps a coordinate vector of length ``dim`` to a ``dim x dim``
    matrix; ``domain_check`` marks the coordinates where the chart is valid.
    """

    dim: int
    metric_at: Callable[[np.ndarray], np.ndarray]
    domain_check: Callable[[np.ndarray], bool] = _always_valid
    name: str = "chart"

    def is_valid(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all(np.isfinite(x))) and bool(self.domain_check(x))

    def metric(self, x, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
        """Evaluate and validate the metric at ``x``.

        Raises OutOfDomain outside the chart and SingularMetric when the matrix
        is not symmetric positive definite.
        """
        x = np.asarray(x, dtype=float)
        if not self.is_valid(x):
            raise OutOfDomain(f"{self.name}: point {x.tolist()} outside chart domain")
        g = np.asarray(self.metric_at(x), dtype=float)
        if g.shape != (self.dim, self.dim):
            raise SingularMetric(f"{self.name}: metric has shape {g.shape}, expected {(self.dim, self.dim)}")
        if np.max(np.abs(g - g.T), initial=0.0) > tol.metric_symmetry * max(1.0, np.max(np.abs(g))):
            raise SingularMetric(f"{self.name}: metric not symmetric at {x.tolist()}")
        g = 0.5 * (g + g.T)
        _check_positive_definite(g, tol, self.name)
        return g


def _check_positive_definite(g: np.ndarray, tol: Tolerances, name: str) -> None:
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(f"{name}: metric not positive definite") from exc
    pivots = np.diag(L) ** 2
    if pivots.min() <= tol.pd_pivot * max(1.0, np.abs(np.diag(g)).max()):
        raise SingularMetric(f"{name}: Cholesky pivot {pivots.min():.3e} below threshold")


def _inverse(g: np.ndarray, tol: Tolerances, name: str) -> np.ndarray:
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > tol.max_condition:
        raise SingularMetric(f"{name}: metric condition number {cond:.3e} too large")
    return np.linalg.inv(g)


@dataclass(frozen=True)
class CurvatureTensor:
    """Fully covariant curvature tensor ``R[i, j, k, l]`` at one point.

    ``metric`` is the metric at the same point, used for orthonormality checks.
    """

    dim: int
    components: np.ndarray
    metric: np.ndarray | None = field(default=None, repr=False)

    def __call__(self, X, Y, Z, W) -> float:
        return float(np.einsum("ijkl,i,j,k,l->", self.components, X, Y, Z, W))

    def restrict(self, frame) -> "CurvatureTensor":
        """Components in the basis given by the columns of ``frame``."""
        F = _as_frame(frame, self.dim)
        comps = np.einsum("ijkl,ia,jb,kc,ld->abcd", self.components, F, F, F, F)
        return CurvatureTensor(F.shape[1], comps, np.eye(F.shape[1]))

    def symmetry_residuals(self) -> dict[str, float]:
        R = self.components
        return {
            "antisym_ij": float(np.max(np.abs(R + R.transpose(1, 0, 2, 3)), initial=0.0)),
            "antisym_kl": float(np.max(np.abs(R + R.transpose(0, 1, 3, 2)), initial=0.0)),
            "pair": float(np.max(np.abs(R - R.transpose(2, 3, 0, 1)), initial=0.0)),
            # R_ijkl + R_jkil + R_kijl
            "bianchi": float(np.max(np.abs(R + R.transpose(2, 0, 1, 3) + R.transpose(1, 2, 0, 3)), initial=0.0)),
        }


def _as_frame(frame, dim: int) -> np.ndarray:
    if isinstance(frame, (list, tuple)):
        F = np.column_stack([np.asarray(v, dtype=float) for v in frame]) if frame else np.zeros((dim, 0))
    else:
        F = np.asarray(frame, dtype=float)
    if F.ndim != 2 or F.shape[0] != dim:
        raise ValueError(f"frame must have shape ({dim}, r), got {F.shape}")
    return F


def metric_derivatives(chart: MetricChart, x, step: float, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """``dg[a, i, j] = d_a g_ij`` by central differences."""
    x = np.asarray(x, dtype=float)
    n = chart.dim
    dg = np.empty((n, n, n))
    for a in range(n):
        e = np.zeros(n)
        e[a] = step
        try:
            gp = chart.metric(x + e, tol)
            gm = chart.metric(x - e, tol)
        except OutOfDomain as exc:
            raise OutOfDomain(f"{chart.name}: finite-difference stencil leaves the domain at {x.tolist()}") from exc
        dg[a] = (gp - gm) / (2.0 * step)
    return dg


def christoffel(chart: MetricChart, x, step: float | None = None, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Christoffel symbols ``gamma[k, i, j]`` of the Levi-Civita connection."""
    step = tol.fd_step if step is None else step
    if not step > 0:
        raise ValueError("step must be positive")
    g = chart.metric(x, tol)
    ginv = _inverse(g, tol, chart.name)
    dg = metric_derivatives(chart, x, step, tol)
    # term[i, j, l] = d_i g_jl + d_j g_il - d_l g_ij
    term = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
    gamma = 0.5 * np.einsum("kl,ijl->kij", ginv, term)
    return 0.5 * (gamma + gamma.transpose(0, 2, 1))


def riemann(chart: MetricChart, x, step: float | None = None, tol: Tolerances = DEFAULT_TOLERANCES) -> CurvatureTensor:
    step = tol.fd_step if step is None else step
    x = np.asarray(x, dtype=float)
    n = chart.dim
    g = chart.metric(x, tol)
    gamma = christoffel(chart, x, step, tol)
    dgamma = np.empty((n, n, n, n))  # dgamma[a, l, j, k] = d_a Gamma^l_jk
    for a in range(n):
        e = np.zeros(n)
        e[a] = step
        try:
            gp = christoffel(chart, x + e, step, tol)
            gm = christoffel(chart, x - e, step, tol)
        except OutOfDomain as exc:
            raise OutOfDomain(f"{chart.name}: finite-difference stencil leaves the domain at {x.tolist()}") from exc
        dgamma[a] = (gp - gm) / (2.0 * step)
    # up[i, j, k, l] = (R(d_i, d_j) d_k)^l
    up = (
        dgamma.transpose(0, 2, 3, 1)
        - dgamma.transpose(2, 0, 3, 1)
        + np.einsum("lim,mjk->ijkl", gamma, gamma)
        - np.einsum("ljm,mik->ijkl", gamma, gamma)
    )
    low = np.einsum("ijkm,ml->ijkl", up, g)
    return CurvatureTensor(n, low, g)


def sectional_curvature(R: CurvatureTensor, g, u, v, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    g = R.metric if g is None else np.asarray(g, dtype=float)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    uu, vv, uv = u @ g @ u, v @ g @ v, u @ g @ v
    gram = uu * vv - uv * uv
    if not gram > tol.plane_gram * uu * vv:
        raise DegeneratePlane("vectors do not span a 2-plane")
    # averaging both orders keeps K exactly symmetric under u <-> v for numerical tensors
    return 0.5 * (R(u, v, v, u) + R(v, u, u, v)) / gram


def check_orthonormal(frame, g, tol: float, what: str = "frame") -> np.ndarray:
    F = np.asarray(frame, dtype=float)
    if F.shape[1] == 0:
        return F
    dev = np.max(np.abs(F.T @ g @ F - np.eye(F.shape[1])))
    if dev > tol:
        raise NonOrthonormalFrame(f"{what} deviates from orthonormality by {dev:.3e}")
    return F


def scalar_curvature_on_subspace(R: CurvatureTensor, frame, g=None, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Doubled scalar curvature ``sum_{i,j} R(e_i, e_j, e_j, e_i)`` over an orthonormal frame."""
    F = _as_frame(frame, R.dim)
    g = R.metric if g is None else np.asarray(g, dtype=float)
    if g is None:
        raise ValueError("a metric is required to validate the frame")
    check_orthonormal(F, g, tol.frame)
    return float(np.einsum("ijkl,ia,jb,kb,la->", R.components, F, F, F, F))
