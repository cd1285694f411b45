"""Concrete charts, analytic maps and almost-complex / almost-contact structures.

All charts here have closed-form metrics so that curvature can be obtained by
finite differences without nesting differentiation of the map itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from chenmap.chart_geometry import MetricChart
from chenmap.polynomial import Polynomial

# ---------------------------------------------------------------------------
# charts


def euclidean_chart(dim: int, scale: float = 1.0) -> MetricChart:
    eye = scale * np.eye(dim)
    return MetricChart(dim, lambda x: eye, name=f"euclidean{dim}")


def polar_chart() -> MetricChart:
    """The flat plane in polar coordinates ``(r, theta)``."""
    return MetricChart(
        2,
        lambda x: np.diag([1.0, x[0] ** 2]),
        domain_check=lambda x: x[0] > 1e-6,
        name="polar",
    )


def polar_christoffel(x) -> np.ndarray:
    """Closed-form Christoffel symbols of :func:`polar_chart`."""
    r = float(x[0])
    gamma = np.zeros((2, 2, 2))
    gamma[0, 1, 1] = -r
    gamma[1, 0, 1] = gamma[1, 1, 0] = 1.0 / r
    return gamma


def stereographic_sphere_chart(dim: int, c: float = 1.0) -> MetricChart:
    """Constant curvature ``c`` via ``g = 4 I / (1 + c|x|^2)^2``.

    For ``c < 0`` this is the Poincare ball of radius ``1/sqrt(-c)``.
    """
    eye = np.eye(dim)

    def metric_at(x):
        return 4.0 * eye / (1.0 + c * (x @ x)) ** 2

    return MetricChart(dim, metric_at, lambda x: 1.0 + c * (x @ x) > 1e-3, name=f"sphere{dim}(c={c:g})")


def conformal_factor_sphere(x, c: float) -> float:
    """``lambda`` with ``g = lambda^2 I`` for :func:`stereographic_sphere_chart`."""
    return 2.0 / (1.0 + c * (x @ x))


def sphere_christoffel(x, c: float) -> np.ndarray:
    """Closed-form Christoffel symbols of :func:`stereographic_sphere_chart`.

    For ``g = e^{2u} I``: ``Gamma^k_ij = delta_ik u_j + delta_jk u_i - delta_ij u_k``.
    """
    x = np.asarray(x, dtype=float)
    du = -2.0 * c * x / (1.0 + c * (x @ x))
    eye = np.eye(x.size)
    return np.einsum("ki,j->kij", eye, du) + np.einsum("kj,i->kij", eye, du) - np.einsum("ij,k->kij", eye, du)


def fubini_study_chart(s: int, c: float = 1.0) -> MetricChart:
    """Affine chart of CP^s with holomorphic sectional curvature ``4c``.

    Real coordinates are ordered ``(x_1..x_s, y_1..y_s)`` with ``z = x + i y``.
    For ``c < 0`` the same formula gives complex hyperbolic space on the ball
    ``|z|^2 < 1/|c|``.
    """

    def metric_at(p):
        z = p[:s] + 1j * p[s:]
        q = 1.0 + c * np.real(np.vdot(z, z))
        h = (q * np.eye(s) - c * np.outer(np.conj(z), z)) / q**2
        A, B = h.real, h.imag
        return np.block([[A, B], [-B, A]])

    def domain(p):
        return 1.0 + c * (p @ p) > 1e-3

    return MetricChart(2 * s, metric_at, domain, name=f"CP{s}(4c={4 * c:g})")


def product_chart(a: MetricChart, b: MetricChart) -> MetricChart:
    def metric_at(x):
        out = np.zeros((a.dim + b.dim, a.dim + b.dim))
        out[: a.dim, : a.dim] = a.metric_at(x[: a.dim])
        out[a.dim :, a.dim :] = b.metric_at(x[a.dim :])
        return out

    def domain(x):
        return a.domain_check(x[: a.dim]) and b.domain_check(x[a.dim :])

    return MetricChart(a.dim + b.dim, metric_at, domain, name=f"{a.name}x{b.name}")


def pullback_chart(target: MetricChart, f: "AnalyticMap", domain=None, name: str = "pullback") -> MetricChart:
    """Chart on the source of ``f`` carrying the induced metric ``f^* g``."""

    def metric_at(x):
        D = f.jacobian(x)
        return D.T @ target.metric_at(f(x)) @ D

    def check(x):
        if domain is not None and not domain(x):
            return False
        return target.is_valid(f(x))

    return MetricChart(f.dim_in, metric_at, check, name=name)


def polynomial_chart(entries: list[list[Polynomial]], name: str = "polynomial") -> MetricChart:
    """Metric whose entries are polynomials in the coordinates."""
    dim = len(entries)

    def metric_at(x):
        return np.array([[entries[i][j](x) for j in range(dim)] for i in range(dim)])

    return MetricChart(dim, metric_at, name=name)


# ---------------------------------------------------------------------------
# maps


@dataclass(frozen=True)
class AnalyticMap:
    dim_in: int
    dim_out: int
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.value(np.asarray(x, dtype=float)), dtype=float)


def linear_map(A) -> AnalyticMap:
    A = np.asarray(A, dtype=float)
    return AnalyticMap(A.shape[1], A.shape[0], lambda x: A @ x, lambda x: A)


def graph_map(f: Polynomial, slots: list[int], dim_out: int, offset=None) -> AnalyticMap:
    """``x -> y`` with ``y[slots[i]] = x[i]``, ``y[slots[-1]] = f(x)``.

    ``slots`` has ``len(x) + 1`` entries; the remaining output coordinates are
    taken from ``offset`` (default zero).
    """
    m = f.nvars
    if len(slots) != m + 1:
        raise ValueError("graph_map needs one output slot per input plus one for the graph value")
    base = np.zeros(dim_out) if offset is None else np.asarray(offset, dtype=float)

    def value(x):
        y = base.copy()
        y[slots[:m]] = x
        y[slots[m]] = f(x)
        return y

    def jacobian(x):
        D = np.zeros((dim_out, m))
        D[slots[:m], np.arange(m)] = 1.0
        D[slots[m]] = f.gradient(x)
        return D

    return AnalyticMap(m, dim_out, value, jacobian)


def _unit_stereo(y):
    s = 1.0 + y @ y
    p = np.append(2.0 * y, y @ y - 1.0) / s
    D = np.zeros((y.size + 1, y.size))
    D[:-1] = 2.0 * np.eye(y.size) / s - 4.0 * np.outer(y, y) / s**2
    D[-1] = 4.0 * y / s**2
    return p, D


def sphere_embedding(dim: int, c: float = 1.0) -> AnalyticMap:
    """Inverse stereographic map of the curvature-``c`` chart into R^{dim+1} (``c > 0``)."""
    if not c > 0:
        raise ValueError("sphere_embedding needs c > 0")
    rc = np.sqrt(c)
    return AnalyticMap(
        dim,
        dim + 1,
        lambda x: _unit_stereo(rc * x)[0] / rc,
        lambda x: _unit_stereo(rc * x)[1],
    )


def unit_normal_sphere(x, c: float = 1.0) -> np.ndarray:
    return _unit_stereo(np.sqrt(c) * np.asarray(x, dtype=float))[0]


# ---------------------------------------------------------------------------
# structures


def standard_J(n: int) -> np.ndarray:
    """Multiplication by ``i`` in the ordering ``(x_1..x_s, y_1..y_s)``."""
    if n % 2:
        raise ValueError("standard_J needs even dimension")
    s = n // 2
    J = np.zeros((n, n))
    J[s:, :s] = np.eye(s)
    J[:s, s:] = -np.eye(s)
    return J


def paired_J(n: int) -> np.ndarray:
    """Complex structure pairing consecutive coordinates: ``J e_{2k} = e_{2k+1}``."""
    if n % 2:
        raise ValueError("paired_J needs even dimension")
    J = np.zeros((n, n))
    for k in range(0, n, 2):
        J[k + 1, k] = 1.0
        J[k, k + 1] = -1.0
    return J


@dataclass(frozen=True)
class ComplexStructure:
    J_at: Callable[[np.ndarray], np.ndarray]
    name: str


@dataclass(frozen=True)
class ContactStructure:
    phi_at: Callable[[np.ndarray], np.ndarray]
    xi_at: Callable[[np.ndarray], np.ndarray]
    eta_at: Callable[[np.ndarray], np.ndarray]
    name: str


def constant_complex_structure(n: int, name: str = "standard") -> ComplexStructure:
    """Standard J; almost Hermitian for any metric conformal to a Hermitian one."""
    J = standard_J(n)
    return ComplexStructure(lambda x: J, name)


def conformal_contact_structure(chart: MetricChart, name: str = "conformal_contact") -> ContactStructure:
    """Trivial almost contact metric structure on a conformally flat odd chart.

    ``xi`` points along the last coordinate and ``phi`` is the standard complex
    structure on the remaining ones.
    """
    n = chart.dim
    if n % 2 == 0:
        raise ValueError("contact structures need odd dimension")
    phi = np.zeros((n, n))
    phi[: n - 1, : n - 1] = standard_J(n - 1)
    e = np.zeros(n)
    e[-1] = 1.0

    def xi_at(x):
        return e / np.sqrt(chart.metric_at(x)[-1, -1])

    def eta_at(x):
        return chart.metric_at(x) @ xi_at(x)

    return ContactStructure(lambda x: phi, xi_at, eta_at, name)


def product_cosymplectic_structure(n: int) -> ContactStructure:
    """``R x (Kaehler)`` with the line coordinate first: ``xi = d/dt``, ``phi = 0 + J``."""
    phi = np.zeros((n, n))
    phi[1:, 1:] = standard_J(n - 1)
    e = np.zeros(n)
    e[0] = 1.0
    return ContactStructure(lambda x: phi, lambda x: e, lambda x: e, "product_cosymplectic")


def hopf_contact_structure(dim: int, c: float = 1.0) -> ContactStructure:
    """Standard contact structure of S^dim (odd) in the stereographic chart of curvature ``c``.

    ``xi`` is ``J N`` for the unit normal ``N`` of the sphere in C^{(dim+1)/2},
    with ``J`` pairing consecutive ambient coordinates, and ``phi`` is the
    tangential part of ``J``.
    """
    if dim % 2 == 0 or not c > 0:
        raise ValueError("hopf_contact_structure needs odd dimension and c > 0")
    J = paired_J(dim + 1)
    rc = np.sqrt(c)

    def parts(x):
        N, D = _unit_stereo(rc * np.asarray(x, dtype=float))
        G = D.T @ D
        return N, D, G

    def phi_at(x):
        N, D, G = parts(x)
        return np.linalg.solve(G, D.T @ J @ D)

    def xi_at(x):
        N, D, G = parts(x)
        return np.linalg.solve(G, D.T @ (J @ N))

    def eta_at(x):
        N, D, G = parts(x)
        return (J @ N) @ D

    return ContactStructure(phi_at, xi_at, eta_at, f"hopf{dim}")
