import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metric_lie_surfaces.model_core import make_dim4_model, make_model
from metric_lie_surfaces.reconstruction import reconstruct_from_angles
from metric_lie_surfaces.special_surfaces import (
    SpecialSurfaceError,
    constant_angle_set,
    integral_surface,
    spanning_fields,
    totally_geodesic,
    vertical_cylinder,
)
from metric_lie_surfaces.surface_geometry import companion_residual, extract_fundamental_data, interior


# constant angles

def test_round_sphere_has_no_constant_angles():
    assert constant_angle_set(make_model((2, 2, 2))).is_empty


def test_nil_horizontal_circle():
    s = constant_angle_set(make_dim4_model("EKT", 0, 0.5))
    assert s.kind == "curves"
    pts = s.sample(9)
    np.testing.assert_allclose(pts[:, 2], 0.0)
    np.testing.assert_allclose(pts[:, 0] ** 2 + pts[:, 1] ** 2, 1.0, atol=1e-14)
    b = 0.37
    assert s.contains([np.cos(b), np.sin(b), 0.0])
    assert not s.contains([0.0, 0.6, 0.8])


def test_sol_diagonal_circles():
    s = constant_angle_set(make_model((1, -1, 0)))
    pts = s.sample(11)
    np.testing.assert_allclose(np.abs(pts[:, 0]), np.abs(pts[:, 1]), atol=1e-14)
    assert np.abs(pts[:, 2]).max() == pytest.approx(1.0)
    assert s.contains([0.6, -0.6, np.sqrt(1 - 0.72)])


def test_flat_and_degenerate_cases():
    assert constant_angle_set(make_model((0, 0, 0))).kind == "all"
    s = constant_angle_set(make_model((1, 1, 0)))
    assert s.kind == "points"
    np.testing.assert_allclose(s.sample(), [[0, 0, -1], [0, 0, 1]])
    assert constant_angle_set(make_model((1, 2, 3))).is_empty


def test_lorentzian_sign_dependence():
    m = make_model((1, -1, 2), (1, 1, -1))
    assert constant_angle_set(m, -1).is_empty
    assert constant_angle_set(m, 1).kind == "curves"


@given(c=st.lists(st.floats(-3, 3), min_size=3, max_size=3),
       lor=st.booleans(), eh3=st.sampled_from([1.0, -1.0]))
@settings(max_examples=80)
def test_samples_satisfy_constraints(c, lor, eh3):
    eps = (1, 1, -1) if lor else (1, 1, 1)
    if not lor and eh3 < 0:
        eh3 = 1.0
    s = constant_angle_set(make_model(c, eps), eh3)
    if s.kind in ("empty", "all"):
        return
    pts = s.sample(7)
    scale = max(1.0, float(np.abs(pts).max()) ** 2)
    assert np.abs(pts ** 2 @ np.asarray(eps, float) - eh3).max() < 1e-9 * scale
    assert np.abs(pts ** 2 @ np.asarray(c, float)).max() < 1e-9 * scale * max(1.0, max(map(abs, c)))


# totally geodesic surfaces

def test_totally_geodesic_sum_zero_case():
    res = totally_geodesic(make_model((-1, 1, 0)))
    assert res.kind == "distributions"
    assert len(res.distributions) == 2
    s = 1 / np.sqrt(2)
    got = sorted(tuple(np.round(d.nu, 12)) for d in res.distributions)
    assert got == sorted([(round(s, 12), round(-s, 12), 0.0), (round(s, 12), round(s, 12), 0.0)])
    for d in res.distributions:
        assert abs(np.dot(d.Y1, d.nu)) < 1e-15
        np.testing.assert_allclose(d.Y2, [0, 0, 1])


@pytest.mark.parametrize("c", [(1, 2, 3), (1, 0, 0)])
def test_no_totally_geodesic(c):
    assert totally_geodesic(make_model(c)).kind == "empty"


def test_constant_curvature_flag():
    assert totally_geodesic(make_model((2, 2, 2))).kind == "constant_curvature"


# integral surfaces of left-invariant distributions

def test_r3_plane():
    p = integral_surface(make_model((0, 0, 0)), (0, 0, 1), extent=0.5)
    u, v = np.meshgrid(np.linspace(-0.5, 0.5, 5), np.linspace(-0.5, 0.5, 5), indexing="ij")
    P = p(u, v)
    np.testing.assert_allclose(P[..., 2], 0.0, atol=1e-15)
    d = extract_fundamental_data(p, 21, 21)
    assert np.abs(d.S).max() < 1e-12


def test_nil_vertical_plane():
    b = 0.3
    p = integral_surface(make_dim4_model("EKT", 0, 0.5), (np.cos(b), np.sin(b), 0.0), extent=0.5)
    u, v = np.meshgrid(np.linspace(-0.5, 0.5, 7), np.linspace(-0.5, 0.5, 7), indexing="ij")
    P = p(u, v)
    # the plane through the z-axis orthogonal to (cos b, sin b, 0) in the Nil coordinates
    assert np.abs(P[..., 0] * np.cos(b) + P[..., 1] * np.sin(b)).max() < 1e-12
    d = extract_fundamental_data(p, 41, 41)
    assert np.abs(d.H).max() < 1e-8
    np.testing.assert_allclose(np.abs(d.nu), np.broadcast_to(np.abs([np.cos(b), np.sin(b), 0]), d.nu.shape), atol=1e-10)


def test_totally_geodesic_patch_coarse():
    m = make_model((-1, 1, 0))
    for dist in totally_geodesic(m).distributions:
        d = extract_fundamental_data(integral_surface(m, dist.nu, (0.1, -0.2, 0.3), extent=0.2), 41, 41)
        assert np.abs(d.S).max() < 1e-6


def test_integral_surfaces_are_minimal():
    m = make_model((1, -1, 2), (1, 1, -1))
    nu = constant_angle_set(m, 1).sample(5)[3]
    p = integral_surface(m, nu, extent=0.2)
    for n in (21, 41, 81):
        d = extract_fundamental_data(p, n, n)
        assert np.abs(d.nu - nu).max() < 1e-8 or np.abs(d.nu + nu).max() < 1e-8
        assert np.abs(d.H).max() < 1e-8


def test_integral_surface_needs_constant_angle():
    with pytest.raises(SpecialSurfaceError):
        integral_surface(make_model((1, 2, 3)), (0.0, 0.6, 0.8))


def test_spanning_fields_are_orthogonal_to_normal():
    for nu in ([0.6, 0.0, 0.8], [0.6, 0.8, 0.0], [0.0, 0.0, 1.0]):
        Y1, Y2 = spanning_fields(np.array(nu))
        assert abs(np.dot(Y1, nu)) < 1e-15 and abs(np.dot(Y2, nu)) < 1e-15
        assert np.linalg.norm(np.cross(Y1, Y2)) > 0


# vertical cylinders

@pytest.mark.parametrize("kappa,tau,r,H", [(0, 0.5, 1.0, -0.5), (-1, 1, 1.0, -0.625), (4, 1, 1 + np.sqrt(2), 1.0)])
def test_cylinder_mean_curvature(kappa, tau, r, H):
    cyl = vertical_cylinder(make_dim4_model("EKT", kappa, tau), r)
    assert cyl.H == pytest.approx(H)
    d = extract_fundamental_data(cyl.patch, 21, 21)
    np.testing.assert_allclose(d.H, H, atol=1e-10)


@pytest.mark.parametrize("kappa,tau", [(0, 0.5), (-1, 1), (2, 0.3)])
def test_companion_has_same_angles(kappa, tau):
    cyl = vertical_cylinder(make_dim4_model("EKT", kappa, tau), 1.0, (0, 0.5, 0, 0.5))
    d = extract_fundamental_data(cyl.patch, 41, 41)
    e = extract_fundamental_data(cyl.companion, 41, 41)
    assert np.abs(e.nu - d.nu).max() < 1e-6
    np.testing.assert_allclose(e.H, -d.H, atol=1e-9)
    assert np.nanmax(interior(companion_residual(d))) < 1e-8


def test_companion_from_opposite_branch():
    m = make_dim4_model("EKT", -1, 1)
    cyl = vertical_cylinder(m, 1.0, (0, 0.98, 0, 0.98))
    d = extract_fundamental_data(cyl.patch, 50, 50)
    e = extract_fundamental_data(cyl.companion, 50, 50)
    rec = reconstruct_from_angles(m, d.geometry, d.nu, e.positions[0, 0], -np.sign(cyl.H))
    assert np.abs(rec.positions - e.positions).max() < 1e-4


def test_cylinder_needs_dim4_family():
    with pytest.raises(SpecialSurfaceError):
        vertical_cylinder(make_model((1, 2, 3)), 1.0)
