import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chenmap.catalog import builtin
from chenmap.chart_geometry import CurvatureTensor
from chenmap.delta_invariants import (
    EXHAUSTIVE,
    MULTISTART,
    delta_h,
    exhaustive_search,
    gcsf_delta_bound,
    gssf_delta_bound,
    harmonic_constant,
    min_sectional_curvature,
    multistart_search,
    plane_from_angles,
    plane_lower_bound,
    verify_delta_bound_gcsf,
    verify_delta_bound_gssf,
    verify_harmonic_corollaries,
)
from chenmap.errors import DegeneratePlane, NotHarmonic, RankDeficient, XiCaseMismatch
from chenmap.rmap_core import build_bundle
from chenmap.space_forms import XiPosition

from conftest import constant_curvature, random_curvature


def sectional(R, C):
    u, v = C[:, 0], C[:, 1]
    return float(np.einsum("ijkl,i,j,k,l->", R, u, v, v, u))


def tensor(R):
    return CurvatureTensor(R.shape[0], R, np.eye(R.shape[0]))


@pytest.mark.parametrize("r", [3, 4, 5])
@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
def test_constant_curvature_delta(r, c):
    RM, H = constant_curvature(r, c), np.eye(r)
    modes = (EXHAUSTIVE, MULTISTART) if r <= 4 else (MULTISTART,)
    for mode in modes:
        search = min_sectional_curvature(RM, H, mode)
        assert search.min_value == pytest.approx(c, abs=1e-12)
        assert delta_h(RM, H, search) == pytest.approx((r * (r - 1) / 2 - 1) * c, abs=1e-9)


def test_flat_delta_is_zero():
    RM = tensor(np.zeros((3, 3, 3, 3)))
    assert delta_h(RM, np.eye(3), min_sectional_curvature(RM, np.eye(3))) == 0.0


def test_product_s2xr_mixed_plane():
    b = builtin("product_s2xr")
    bundle = build_bundle(b.scenario())
    search = min_sectional_curvature(bundle.RM, bundle.frames.H_frame, EXHAUSTIVE)
    assert search.min_value == pytest.approx(0.0, abs=1e-6)
    assert delta_h(bundle.RM, bundle.frames.H_frame, search) == pytest.approx(1.0, abs=1e-6)


def test_oracle_equivalence_on_random_tensors():
    rng = np.random.default_rng(20)
    for _ in range(20):
        R = random_curvature(rng, 3)
        ex = exhaustive_search(R)
        ms = multistart_search(R, seed=int(rng.integers(1 << 31)))
        assert abs(ms.min_value - ex.min_value) <= ex.certified_gap + 1e-6
        assert ms.min_value <= ex.min_value + 1e-9


def test_search_reports_valid_planes():
    rng = np.random.default_rng(1)
    for r in (3, 4):
        R = random_curvature(rng, r)
        for res in (exhaustive_search(R, 16), multistart_search(R, 8, seed=2)):
            C = res.argmin_plane
            np.testing.assert_allclose(C.T @ C, np.eye(2), atol=1e-12)
            assert sectional(R, C) == pytest.approx(res.min_value, abs=1e-9) or res.min_value <= sectional(R, C)
        lb = plane_lower_bound(R)
        assert lb <= exhaustive_search(R, 16).min_value + 1e-12


def test_monotone_refinement():
    rng = np.random.default_rng(5)
    for r in (3, 4):
        R = random_curvature(rng, r)
        coarse, fine = exhaustive_search(R, 24), exhaustive_search(R, 48)
        assert fine.min_value <= coarse.min_value + 1e-15
        assert fine.certified_gap <= coarse.certified_gap + 1e-15
        assert fine.evaluations > coarse.evaluations


def test_grid_budget_validation():
    R = constant_curvature(3, 1.0)
    with pytest.raises(ValueError):
        exhaustive_search(R.components, 10)
    with pytest.raises(ValueError):
        exhaustive_search(constant_curvature(5, 1.0).components)
    with pytest.raises(RankDeficient):
        min_sectional_curvature(constant_curvature(2, 1.0), np.eye(2))
    with pytest.raises(ValueError):
        min_sectional_curvature(R, np.eye(3), "random")


@given(st.integers(0, 2**32 - 1), st.sampled_from([3, 4]))
def test_plane_from_angles_reproduces_argmin(seed, r):
    R = random_curvature(np.random.default_rng(seed), r)
    res = exhaustive_search(R, 12)
    C = plane_from_angles(res.argmin_angles, r)
    np.testing.assert_allclose(C, res.argmin_plane, atol=1e-12)
    assert sectional(R, C) == pytest.approx(res.min_value, abs=1e-12)


def test_plane_from_angles_errors():
    with pytest.raises(DegeneratePlane):
        plane_from_angles([0.1, 0.2], 3)
    C = plane_from_angles([0.0] * 3, 3)
    np.testing.assert_allclose(C, np.eye(3)[:, :2], atol=1e-15)


def test_exhaustive_is_deterministic():
    R = random_curvature(np.random.default_rng(9), 4)
    a, b = exhaustive_search(R), exhaustive_search(R)
    assert a.argmin_angles == b.argmin_angles and a.min_value == b.min_value


def test_gcsf_bound_branches():
    r, t2 = 4, 0.3
    assert gcsf_delta_bound(2, r, t2, 1.0, -1.0) == pytest.approx((r - 2) / 2 * (t2 / (r - 1) + (r + 1)))
    assert gcsf_delta_bound(1, r, t2, 1.0, 2.0) == pytest.approx((r - 2) / 2 * (t2 / (r - 1) + (r + 1) + 3 * r * 2 / (r - 2)))
    assert abs(gcsf_delta_bound(1, r, t2, 0.7, 0.0) - gcsf_delta_bound(2, r, t2, 0.7, 0.0)) <= 1e-12


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 10), st.integers(3, 8))
def test_branch_continuity(f1, f, t2, r):
    for xi in (XiPosition.IN_RANGE, XiPosition.IN_RANGE_PERP):
        # f2 = 0
        if xi == XiPosition.IN_RANGE:
            pairs = [(1, 2), (3, 4)]
        else:
            pairs = [(1, 2)]
        for a, b in pairs:
            assert abs(gssf_delta_bound(xi, a, r, t2, f1, 0.0, f) - gssf_delta_bound(xi, b, r, t2, f1, 0.0, f)) <= 1e-12 * max(1, abs(f1), abs(f), t2)
    for a, b in [(1, 3), (2, 4)]:
        assert abs(gssf_delta_bound(XiPosition.IN_RANGE, a, r, t2, f1, f, 0.0)
                   - gssf_delta_bound(XiPosition.IN_RANGE, b, r, t2, f1, f, 0.0)) <= 1e-12 * max(1, abs(f1), abs(f), t2)


def test_flat_delta_reports_equality():
    for name, verify in (("flat_identity_r4", verify_delta_bound_gcsf), ("flat_identity_r3", verify_delta_bound_gssf)):
        b = builtin(name)
        rep = verify(build_bundle(b.scenario()), b.model)
        assert rep.delta == pytest.approx(0, abs=1e-9) and rep.bound_value == 0
        assert rep.holds and rep.equality
        assert rep.details["boundary_deviation"] == 0.0


def test_gcsf_bounds_hold_on_cp2():
    b = builtin("cp2_chart")
    rep = verify_delta_bound_gcsf(build_bundle(b.scenario()), b.model)
    assert rep.bound_name == "delta_gcsf_1" and rep.holds
    assert rep.bound_value == pytest.approx(((4 + 1) * (4 - 2) * 1.0 + 3 * 4 * 1.0) / 2, abs=1e-6)


def test_gssf_bounds_and_cases():
    b = builtin("cosymplectic_xi_range", c=-0.5)
    bundle = build_bundle(b.scenario(np.array([0.05, -0.1, 0.1])))
    rep = verify_delta_bound_gssf(bundle, b.model)
    assert rep.bound_name == "delta_gssf_xi_range_1" and rep.holds
    with pytest.raises(XiCaseMismatch):
        verify_delta_bound_gssf(bundle, b.model, XiPosition.IN_RANGE_PERP)
    with pytest.raises(XiCaseMismatch):
        verify_delta_bound_gcsf(bundle, b.model)
    b = builtin("cosymplectic_xi_perp", c=0.5)
    rep = verify_delta_bound_gssf(build_bundle(b.scenario()), b.model)
    assert rep.bound_name == "delta_gssf_xi_perp_2" and rep.holds


def test_harmonic_corollaries():
    b = builtin("sphere_in_odd_sphere")
    rep = verify_harmonic_corollaries(build_bundle(b.scenario()), b.model)
    assert rep.delta == pytest.approx(2.0, abs=1e-5)
    assert rep.bound_value == pytest.approx(2.0, abs=1e-12)
    assert rep.equality and rep.details["corollary_agrees"]
    b = builtin("flat_identity_r3")
    rep = verify_harmonic_corollaries(build_bundle(b.scenario()), b.model)
    assert rep.delta == pytest.approx(0, abs=1e-9) and rep.bound_value == 0 and rep.holds
    b = builtin("sphere_in_flat")
    with pytest.raises(NotHarmonic):
        verify_harmonic_corollaries(build_bundle(b.scenario()), b.model)


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.integers(3, 8))
def test_harmonic_constants_match_theorem_bounds(f1, f2, f3, r):
    b = builtin("flat_identity_r3")
    gssf = b.model.with_coefficients(f1, f2, f3)
    for xi in (XiPosition.IN_RANGE, XiPosition.IN_RANGE_PERP):
        item = (2 if f2 > 0 else 1) if xi == XiPosition.IN_RANGE_PERP else 1 + (f2 > 0) + 2 * (f3 > 0)
        delegated = gssf_delta_bound(xi, item, r, 0.0, f1, f2, f3)
        assert abs(harmonic_constant(gssf, r, xi) - delegated) <= 1e-12 * max(1.0, abs(delegated))
    gcsf = builtin("flat_identity_r4").model.with_coefficients(f1, f2, 0.0)
    delegated = gcsf_delta_bound(1 if f2 > 0 else 2, r, 0.0, f1, f2)
    assert abs(harmonic_constant(gcsf, r) - delegated) <= 1e-12 * max(1.0, abs(delegated))
