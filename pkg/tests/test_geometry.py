import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homlab.errors import DegeneratePlusLayerWarning, InvalidProfile
from homlab.geometry import (
    TAG_LATERAL,
    TAG_TOP,
    DensityField,
    EtaProfile,
    build_mesh_eps,
    build_mesh_limit,
    envelopes_many,
    eta_envelopes,
    fiber_measure,
    interp_heights,
)


def test_profile_families_evaluate_closed_forms():
    y = np.linspace(0.0, 1.0, 33)
    const = EtaProfile("constant", (1.3,))
    assert np.all(const.height(0.2, y) == 1.3)

    bump = EtaProfile("sine_bump", (1.0, 0.5))
    np.testing.assert_allclose(
        bump.height(0.7, y), 1.0 + 0.5 * np.sin(np.pi * y) ** 2, atol=1e-15
    )

    prod = EtaProfile("product", (0.5, 1.0, 1.0))
    np.testing.assert_allclose(
        prod.height(0.4, y),
        (1.0 + 0.5 * 0.4) * (1.0 + np.sin(np.pi * y) ** 2),
        atol=1e-14,
    )


def test_profile_rejections():
    with pytest.raises(InvalidProfile):
        EtaProfile("saw", (1.0,))
    with pytest.raises(InvalidProfile):
        EtaProfile("sine_bump", (1.0,))
    with pytest.raises(InvalidProfile):
        EtaProfile("constant", (0.0,))  # not positive
    with pytest.raises(InvalidProfile):
        EtaProfile("tabulated")  # table missing


def test_two_bump_fiber_rejected():
    # eta(y) = 1.1 + sin^2(2 pi y) has two bumps per period, so its
    # super-level sets split into two intervals
    ys = np.arange(64) / 64
    row = 1.1 + np.sin(2 * np.pi * ys) ** 2
    with pytest.raises(InvalidProfile, match="single interval"):
        EtaProfile("tabulated", table=np.stack([row, row]))


def test_envelopes_sine_bump():
    prof = EtaProfile("sine_bump", (1.0, 1.0))
    lo, hi = eta_envelopes(prof, 0.37)
    assert abs(lo - 1.0) < 1e-9
    assert abs(hi - 2.0) < 1e-9


def test_fiber_measure_matches_arcsin_inverse():
    prof = EtaProfile("sine_bump", (1.0, 1.0))
    for x2 in (1.1, 1.25, 1.5, 1.75, 1.9):
        want = 1.0 - (2.0 / np.pi) * np.arcsin(np.sqrt(x2 - 1.0))
        assert abs(fiber_measure(prof, (0.5, x2)) - want) < 1e-6
    assert fiber_measure(prof, (0.5, 0.4)) == 1.0


def test_density_clamps_to_zero_at_top():
    prof = EtaProfile("sine_bump", (1.0, 1.0))
    h = DensityField(prof)
    assert h(0.3, 2.0) == 0.0
    assert h(0.3, 2.5) == 0.0
    assert h(0.3, 0.5) == 1.0


def test_eps_mesh_constant_profile_is_uniform_grid():
    prof = EtaProfile("constant", (1.0,))
    mesh = build_mesh_eps(prof, 1.0, 16, 4)
    assert mesh.n_vertices == 17 * 5
    assert mesh.n_triangles == 128
    mesh.validate()
    # single-layer fallback: rows are uniform fractions of the height
    x2 = np.unique(mesh.vertices[:, 1])
    np.testing.assert_allclose(x2, np.arange(5) / 4.0, atol=1e-15)


def test_eps_mesh_sine_bump_shape_and_area():
    prof = EtaProfile("sine_bump", (1.0, 1.0))
    mesh = build_mesh_eps(prof, 0.25, 16, 16)
    mesh.validate()
    assert mesh.vertices[:, 1].max() == pytest.approx(2.0, abs=1e-14)
    # trapezoid over whole periods integrates sin^2 exactly
    assert mesh.triangle_areas().sum() == pytest.approx(1.5, abs=1e-12)
    st_ = mesh.structure
    assert st_.ny_minus + st_.ny_plus == st_.ny
    # split row tracks min(lower envelope, top - delta) per column
    lo_env, _ = envelopes_many(prof, st_.col_x)
    assert np.all(st_.mid_heights <= lo_env + 1e-14)
    assert np.all(st_.mid_heights < st_.top_heights)


def test_eps_mesh_top_row_tagged():
    prof = EtaProfile("sine_bump", (1.0, 1.0))
    mesh = build_mesh_eps(prof, 0.5, 8, 8)
    st_ = mesh.structure
    base = st_.rows * (st_.nx + 1)
    assert np.all(mesh.vertex_tags[base + 1 : base + st_.nx] == TAG_TOP)
    assert mesh.vertex_tags[base] == TAG_LATERAL
    assert mesh.vertex_tags[base + st_.nx] == TAG_LATERAL
    np.testing.assert_allclose(
        mesh.vertices[base : base + st_.nx + 1, 1], st_.top_heights, atol=0
    )


def test_interp_heights_matches_columns():
    prof = EtaProfile("product", (0.5, 1.0, 1.0))
    mesh = build_mesh_eps(prof, 0.25, 8, 8)
    st_ = mesh.structure
    top, mid = interp_heights(st_, st_.col_x)
    np.testing.assert_allclose(top, st_.top_heights, atol=1e-14)
    np.testing.assert_allclose(mid, st_.mid_heights, atol=1e-14)


def test_limit_mesh_regions_and_warning():
    prof = EtaProfile("sine_bump", (1.0, 1.0))
    mesh = build_mesh_limit(prof, 16, 8, 8)
    mesh.validate()
    cen = mesh.vertices[mesh.triangles].mean(axis=1)
    minus = mesh.region_mask("omega_minus")
    assert np.all(cen[minus, 1] < 1.0 + 1e-12)
    assert np.all(cen[~minus, 1] > 1.0 - 1e-12)

    with pytest.warns(DegeneratePlusLayerWarning):
        flat = build_mesh_limit(EtaProfile("constant", (1.0,)), 16, 8, 8)
    assert not flat.region_mask("omega_plus").any()


@settings(max_examples=20, deadline=None)
@given(
    a=st.floats(0.5, 2.0),
    b=st.floats(0.1, 2.0),
    k=st.sampled_from([1, 2, 4]),
)
def test_eps_mesh_area_is_profile_integral(a, b, k):
    # int_0^1 (a + b sin^2) dy = a + b/2, reproduced exactly by any
    # mesh sampling whole periods uniformly
    prof = EtaProfile("sine_bump", (a, b))
    mesh = build_mesh_eps(prof, 1.0 / k, 8, 8)
    assert mesh.triangle_areas().sum() == pytest.approx(a + b / 2.0, rel=1e-12)
    mesh.validate()
