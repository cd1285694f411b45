import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chenmap.catalog import CORE_BUILTINS, builtin
from chenmap.chart_geometry import (
    CurvatureTensor,
    MetricChart,
    christoffel,
    riemann,
    scalar_curvature_on_subspace,
    sectional_curvature,
)
from chenmap.config import DEFAULT_TOLERANCES, Tolerances
from chenmap.errors import DegeneratePlane, NonOrthonormalFrame, OutOfDomain, SingularMetric
from chenmap.geometries import (
    euclidean_chart,
    fubini_study_chart,
    polar_chart,
    polar_christoffel,
    sphere_christoffel,
    stereographic_sphere_chart,
)
from chenmap.selftest import christoffel_convergence, second_order

from conftest import constant_curvature


def test_euclidean_christoffel_vanishes():
    assert np.all(christoffel(euclidean_chart(3), np.array([0.3, -1.0, 2.0])) == 0)


def test_sphere_christoffel_vanishes_at_origin():
    gamma = christoffel(stereographic_sphere_chart(3), np.zeros(3))
    assert np.abs(gamma).max() < 1e-12


def test_polar_christoffel_values():
    gamma = christoffel(polar_chart(), np.array([2.0, 0.7]))
    # Gamma^1_22 = -r and Gamma^2_12 = 1/r (0-based indices below)
    assert gamma[0, 1, 1] == pytest.approx(-2.0, abs=1e-9)
    assert gamma[1, 0, 1] == pytest.approx(0.5, abs=1e-9)
    assert gamma[1, 1, 0] == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_allclose(gamma, polar_christoffel([2.0, 0.7]), atol=1e-9)


def test_christoffel_second_order_convergence():
    x = np.array([2.0, 0.3])
    p1, p2 = christoffel_convergence(polar_chart(), polar_christoffel(x), x)
    assert second_order(p1, p2)
    y = np.array([0.3, -0.2, 0.25])
    e1, e2 = christoffel_convergence(stereographic_sphere_chart(3), sphere_christoffel(y, 1.0), y)
    assert e1 > 1e-8  # truncation error dominates, so the ratio is meaningful
    assert e1 / e2 >= 3.0


def test_christoffel_symmetric_in_lower_indices():
    gamma = christoffel(fubini_study_chart(2, 0.7), np.array([0.1, 0.2, -0.3, 0.05]))
    np.testing.assert_array_equal(gamma, gamma.transpose(0, 2, 1))


def test_christoffel_rejects_stencil_outside_domain():
    with pytest.raises(OutOfDomain):
        christoffel(polar_chart(), np.array([5e-5, 0.0]))


def test_singular_metric_detected():
    chart = MetricChart(2, lambda x: np.diag([1.0, 0.0]))
    with pytest.raises(SingularMetric):
        chart.metric(np.zeros(2))
    asym = MetricChart(2, lambda x: np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(SingularMetric):
        asym.metric(np.zeros(2))


def test_ill_conditioned_metric_rejected():
    chart = MetricChart(2, lambda x: np.diag([1.0, 1e-13]))
    with pytest.raises(SingularMetric):
        christoffel(chart, np.zeros(2), tol=Tolerances(pd_pivot=1e-16))


def test_riemann_flat_is_zero():
    assert np.abs(riemann(euclidean_chart(4), np.ones(4)).components).max() == 0


@pytest.mark.parametrize("c", [1.0, 0.25, -0.5])
def test_sphere_chart_has_constant_curvature(c):
    rng = np.random.default_rng(3)
    chart = stereographic_sphere_chart(3, c)
    for _ in range(5):
        x = rng.uniform(-0.4, 0.4, 3)
        R = riemann(chart, x)
        g = chart.metric(x)
        u, v = rng.normal(size=(2, 3))
        assert sectional_curvature(R, g, u, v) == pytest.approx(c, abs=1e-6)
        oracle = c * (np.einsum("jk,il->ijkl", g, g) - np.einsum("ik,jl->ijkl", g, g))
        assert np.abs(R.components - oracle).max() < 1e-6


def test_cp1_has_curvature_four_c():
    rng = np.random.default_rng(4)
    for c in (1.0, 0.5):
        chart = fubini_study_chart(1, c)
        for _ in range(3):
            x = rng.uniform(-0.5, 0.5, 2)
            K = sectional_curvature(riemann(chart, x), chart.metric(x), [1.0, 0.0], [0.0, 1.0])
            assert K == pytest.approx(4 * c, abs=1e-6)


def test_riemann_symmetries_on_builtin_charts():
    rng = np.random.default_rng(0)
    charts = {}
    for name in CORE_BUILTINS:
        b = builtin(name)
        charts[b.source.name] = (b.source, b)
        charts[b.target.name] = (b.target, None)
    worst = 0.0
    for name, (chart, b) in charts.items():
        for _ in range(100):
            x = b.sample_points(rng, 1)[0] if b is not None else rng.uniform(-0.3, 0.3, chart.dim)
            worst = max(worst, max(riemann(chart, x).symmetry_residuals().values()))
    assert worst < 1e-6


def test_sectional_curvature_degenerate_plane():
    R = constant_curvature(3, 1.0)
    with pytest.raises(DegeneratePlane):
        sectional_curvature(R, np.eye(3), [1.0, 0.0, 0.0], [2.0, 0.0, 0.0])


@given(st.integers(0, 2**32 - 1))
def test_sectional_curvature_gl2_invariant(seed):
    rng = np.random.default_rng(seed)
    chart = fubini_study_chart(2, 1.0)
    x = rng.uniform(-0.3, 0.3, 4)
    R = riemann(chart, x)
    g = chart.metric(x)
    u, v = rng.normal(size=(2, 4))
    A = rng.normal(size=(2, 2))
    if abs(np.linalg.det(A)) < 0.1:
        A += np.eye(2)
    u2, v2 = A[0, 0] * u + A[0, 1] * v, A[1, 0] * u + A[1, 1] * v
    k1 = sectional_curvature(R, g, u, v)
    k2 = sectional_curvature(R, g, u2, v2)
    assert abs(k1 - k2) <= 1e-9 * max(1.0, abs(k1))
    assert sectional_curvature(R, g, v, u) == pytest.approx(k1, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("r", [2, 3, 4, 5])
@pytest.mark.parametrize("c", [-1.0, 0.0, 2.0])
def test_scalar_curvature_constant(r, c):
    assert scalar_curvature_on_subspace(constant_curvature(r, c), np.eye(r)) == pytest.approx(r * (r - 1) * c)


def test_scalar_curvature_two_frame_is_twice_sectional():
    rng = np.random.default_rng(1)
    chart = fubini_study_chart(2, 1.0)
    x = rng.uniform(-0.3, 0.3, 4)
    R = riemann(chart, x)
    g = chart.metric(x)
    L = np.linalg.cholesky(np.linalg.inv(g))
    F = L[:, :2]
    assert scalar_curvature_on_subspace(R, F) == pytest.approx(2 * sectional_curvature(R, g, F[:, 0], F[:, 1]))


def test_scalar_curvature_frame_invariance_and_orthonormality():
    rng = np.random.default_rng(2)
    R = riemann(fubini_study_chart(2, 1.0), np.zeros(4))
    g = R.metric
    F = np.eye(4)[:, :3] / np.sqrt(g[0, 0])
    Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    assert abs(scalar_curvature_on_subspace(R, F) - scalar_curvature_on_subspace(R, F @ Q)) < 1e-9
    with pytest.raises(NonOrthonormalFrame):
        scalar_curvature_on_subspace(R, 2 * F)


def test_tolerances_scaling_and_overrides():
    t = DEFAULT_TOLERANCES.scaled(10.0)
    assert t.slack == pytest.approx(1e-3) and t.fd_step == DEFAULT_TOLERANCES.fd_step
    assert DEFAULT_TOLERANCES.with_overrides({"gauss": 0.5}).gauss == 0.5
    with pytest.raises(KeyError):
        DEFAULT_TOLERANCES.with_overrides({"nope": 1.0})
    with pytest.raises(ValueError):
        DEFAULT_TOLERANCES.scaled(0.0)


def test_curvature_tensor_restrict_matches_sectional():
    R = riemann(stereographic_sphere_chart(3, 1.0), np.array([0.1, 0.0, 0.2]))
    F = np.eye(3) / np.sqrt(R.metric[0, 0])
    sub = R.restrict(F)
    assert isinstance(sub, CurvatureTensor)
    assert sub(np.eye(3)[0], np.eye(3)[1], np.eye(3)[1], np.eye(3)[0]) == pytest.approx(1.0, abs=1e-6)
