import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from metric_lie_surfaces.model_core import (
    Family,
    GroupType,
    ModelDomainError,
    ProductLimitModel,
    UnsupportedSignatureError,
    connection,
    cover_fields,
    cover_map,
    cross,
    cs_eval,
    curvature_from_connection,
    curvature_R,
    frame_at,
    inner,
    is_global,
    make_dim4_model,
    make_model,
    metric_at,
    model_from_spec,
    sectional_curvature,
    semidirect_multiply,
)

import oracles

MODELS = [((1, 2, 3), (1, 1, 1)), ((0.7, -1.3, 0.4), (1, 1, -1)), ((2, 2, 2), (1, 1, 1)),
          ((1, -1, 0), (1, 1, 1)), ((-0.5, 0.8, 1.1), (1, 1, -1)), ((0, 0, 1), (1, 1, 1))]


# construction and classification

def test_round_sphere_constants():
    m = make_model((2, 2, 2))
    assert m.mu == (1.0, 1.0, 1.0)
    assert m.a == (-1.0, -1.0, -1.0)
    assert m.group_type is GroupType.SU2
    assert m.iso_dim == 6


def test_sol_classification():
    m = make_model((1, -1, 0))
    assert m.group_type is GroupType.SOL
    assert m.iso_dim == 3


@pytest.mark.parametrize("kappa,tau", [(1.0, 0.3), (-2.0, 0.7), (5.0, 1.5)])
def test_ekt_substitution(kappa, tau):
    m = make_model((kappa / (2 * tau), kappa / (2 * tau), 2 * tau))
    assert m.family.family is Family.EKT
    assert m.family.kappa == pytest.approx(kappa)
    assert m.family.tau == pytest.approx(tau)
    assert m.iso_dim == 4
    np.testing.assert_allclose(m.mu, (tau, tau, kappa / (2 * tau) - tau), atol=1e-14)
    np.testing.assert_allclose(m.a, (-tau ** 2, -tau ** 2, 3 * tau ** 2 - kappa), atol=1e-13)


def test_dim4_examples():
    assert make_dim4_model("EKT", 4, 1).c == (2.0, 2.0, 2.0)
    assert make_dim4_model("EKT", 0, 0.5).c == (0.0, 0.0, 1.0)
    assert make_dim4_model("EKT", 0, 0.5).group_type is GroupType.NIL
    m = make_dim4_model("LKT", 0, 1)
    assert m.eps[2] == -1
    assert m.c[2] == -2.0


def test_lkt_hat_relabel_keeps_family():
    m = make_dim4_model("LKT_HAT", 1.0, 0.5)
    assert m.eps == (1, 1, -1)
    assert m.family.family is Family.LKT_HAT
    assert m.family.kappa == pytest.approx(1.0)
    assert m.family.tau == pytest.approx(0.5)
    assert m.relabel == (2, 0, 1)


def test_product_limit_returned_for_tau_zero():
    m = make_dim4_model("EKT", -1, 0)
    assert isinstance(m, ProductLimitModel)
    assert m.product_limit


@pytest.mark.parametrize("c,eps,dim", [
    ((2, 2, 2), (1, 1, 1), 6), ((0, 0, 0), (1, 1, 1), 6), ((1, 1, 0), (1, 1, 1), 6),
    ((1, 1, 2), (1, 1, 1), 4), ((1, 1, 1), (1, 1, -1), 4), ((1, 2, 3), (1, 1, 1), 3),
    ((1, -1, 0), (1, 1, 1), 3), ((2, 2, -2), (1, 1, -1), 6)])
def test_isometry_dimension(c, eps, dim):
    assert make_model(c, eps).iso_dim == dim


def test_bad_signature_rejected():
    with pytest.raises(UnsupportedSignatureError):
        make_model((1, 1, 1), (1, 0, 1))


def test_model_from_spec():
    assert model_from_spec({"c": [2, 2, 2]}).c == (2.0, 2.0, 2.0)
    assert model_from_spec({"family": "EKT", "kappa": 0, "tau": 0.5}).c == (0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        model_from_spec({"eps": [1, 1, 1]})


# the functions c(z), s(z)

def test_cs_examples():
    c, s = cs_eval(1.0, np.pi)
    assert c == pytest.approx(-1.0, abs=1e-15) and s == pytest.approx(0.0, abs=1e-15)
    assert cs_eval(0.0, 7.0) == (1.0, 7.0)
    c, s = cs_eval(-1.0, 1.0)
    assert c == pytest.approx(np.cosh(1.0), rel=1e-15) and s == pytest.approx(np.sinh(1.0), rel=1e-15)


@given(k=st.floats(-4, 4), z=st.floats(-2, 2))
def test_cs_identity(k, z):
    c, s = cs_eval(k, z)
    assert c * c + k * s * s == pytest.approx(1.0, abs=1e-12)


@given(k=st.floats(-3, 3), z=st.floats(0.01, 1.5))
def test_cs_series_switch_is_continuous(k, z):
    # just below and just above the series threshold
    zc = np.sqrt(1e-4 / abs(k)) if abs(k) > 1e-6 else z
    for zz in (zc * (1 - 1e-9), zc * (1 + 1e-9)):
        c, s = cs_eval(k, zz)
        ce, se = oracles.cs_closed(k, zz)
        assert abs(c - ce) < 1e-12 and abs(s - se) < 1e-12


# frame and metric

def test_frame_at_origin():
    for c, eps in MODELS:
        fr = frame_at(make_model(c, eps), np.zeros(3))
        np.testing.assert_allclose(fr.B, np.eye(3), atol=1e-15)


def test_nil_frame():
    fr = frame_at(make_model((0, 0, 2)), np.array([1.0, 2.0, 5.0]))
    np.testing.assert_allclose(fr.E1, [1, 0, -2], atol=1e-15)
    np.testing.assert_allclose(fr.E2, [0, 1, 1], atol=1e-15)
    np.testing.assert_allclose(fr.E3, [0, 0, 1], atol=1e-15)


def test_inverse_matches_generic_inversion(rng):
    for c, eps in MODELS:
        m = make_model(c, eps)
        p = rng.uniform(-0.5, 0.5, size=(50, 3))
        fr = frame_at(m, p)
        np.testing.assert_allclose(fr.B_inv, np.linalg.inv(fr.B), atol=1e-12)


def test_metric_matches_expanded_formula(rng):
    for c, eps in MODELS:
        m = make_model(c, eps)
        for p in rng.uniform(-0.5, 0.5, size=(100, 3)):
            assert np.max(np.abs(metric_at(m, p) - oracles.coordinate_metric(c, eps, p))) < 1e-10


def test_metric_at_origin():
    m = make_model((0.7, -1.3, 0.4), (1, 1, -1))
    np.testing.assert_allclose(metric_at(m, np.zeros(3)), np.diag([1, 1, -1]))


def test_cross_of_frame():
    for c, eps in MODELS:
        m = make_model(c, eps)
        E = np.eye(3)
        np.testing.assert_allclose(cross(m, E[1], E[2]), eps[0] * E[0])
        np.testing.assert_allclose(cross(m, E[2], E[0]), eps[1] * E[1])


def test_cross_in_coordinates(rng):
    m = make_model((0.7, -1.3, 0.4), (1, 1, -1))
    p = np.array([0.1, 0.2, -0.3])
    u, v = rng.normal(size=3), rng.normal(size=3)
    w = cross(m, u, v, p, basis="coord")
    assert abs(inner(m, w, u, p, basis="coord")) < 1e-12
    assert abs(inner(m, w, v, p, basis="coord")) < 1e-12


def test_domain_rejected():
    m = make_model((2, 2, -2), (1, 1, -1))
    with pytest.raises(ModelDomainError):
        frame_at(m, np.array([2.0, 2.0, 0.0]))


def test_fd_brackets_reproduce_structure_constants():
    p = np.array([0.2, -0.1, 0.3])
    for c, eps in MODELS:
        m = make_model(c, eps)
        B = frame_at(m, p).B
        for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
            err = np.abs(oracles.fd_bracket(c, i, j, p, 1e-3) - c[k] * B[:, k]).max()
            assert err < 1e-5


def test_metric_compatibility_along_curve():
    # <E_i, E_j> stays eps_i delta_ij along a curve, checked through the coordinate metric
    m = make_model((0.7, -1.3, 0.4), (1, 1, -1))
    t = np.linspace(0, 1, 21)
    curve = np.stack([0.3 * np.sin(t), 0.2 * t, t ** 2], -1)
    B = frame_at(m, curve).B
    G = np.array([Bk.T @ oracles.coordinate_metric(m.c, m.eps, q) @ Bk for Bk, q in zip(B, curve)])
    np.testing.assert_allclose(G - np.diag(m.eps), 0, atol=1e-12)


# connection and curvature

def test_connection_round_sphere():
    np.testing.assert_allclose(connection(make_model((2, 2, 2)), 0, 1), [0, 0, 1])


def test_round_sphere_sectional_curvature():
    m = make_model((2, 2, 2))
    E = np.eye(3)
    assert inner(m, curvature_R(m, E[0], E[1], E[1]), E[0]) == pytest.approx(1.0, abs=1e-14)


def test_flat_r3(rng):
    m = make_model((0, 0, 0))
    X, Y, Z = rng.normal(size=(3, 40, 3))
    assert np.abs(curvature_R(m, X, Y, Z)).max() == 0.0


@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9))
@settings(max_examples=60)
def test_curvature_routes_agree(vals):
    X, Y, Z = np.array(vals).reshape(3, 3)
    for c, eps in MODELS:
        m = make_model(c, eps)
        np.testing.assert_allclose(curvature_R(m, X, Y, Z), curvature_from_connection(m, X, Y, Z), atol=1e-11)


def test_curvature_matches_coordinate_riemann():
    p = np.array([0.2, -0.1, 0.3])
    E = np.eye(3)
    for c, eps in MODELS[:3]:
        m = make_model(c, eps)
        for a in range(3):
            for b in range(3):
                for d in range(3):
                    fd = oracles.fd_curvature_frame(c, eps, p, E[a], E[b], E[d], 2e-3)
                    assert np.abs(fd - curvature_R(m, E[a], E[b], E[d])).max() < 1e-4


def test_sectional_symmetric(rng):
    m = make_model((1, 2, 3))
    X, Y = rng.normal(size=(2, 10, 3))
    np.testing.assert_allclose(sectional_curvature(m, X, Y), sectional_curvature(m, Y, X), atol=1e-12)


# covering maps and global models

def test_cover_map_origin():
    a, b = cover_map(make_model((2, 2, 2)), np.zeros(3))
    assert a == pytest.approx(1.0) and b == pytest.approx(0.0)


def test_cover_map_quadrics(rng):
    p = rng.uniform(-0.4, 0.4, size=(200, 3))
    a, b = cover_map(make_model((1, 3, 0.5)), p)
    assert np.abs(np.abs(a) ** 2 + np.abs(b) ** 2 - 1).max() < 1e-12
    a, b = cover_map(make_model((1, 2, -1)), p)
    assert np.abs(np.abs(a) ** 2 - np.abs(b) ** 2 - 1).max() < 1e-12


def test_cover_map_needs_positive_pair():
    with pytest.raises(ValueError):
        cover_map(make_model((1, -1, 0)), np.zeros(3))


def test_cover_fields_are_tangent_to_quadric(rng):
    for c in [(2, 2, 2), (1, 2, -1)]:
        m = make_model(c)
        a, b = cover_map(m, rng.uniform(-0.3, 0.3, size=(20, 3)))
        X = cover_fields(m, a, b)
        sign = 1.0 if c[2] > 0 else -1.0
        # derivative of |a|^2 +- |b|^2 along each field
        d = 2 * (np.conj(a)[:, None] * X[..., 0]).real + sign * 2 * (np.conj(b)[:, None] * X[..., 1]).real
        assert np.abs(d).max() < 1e-12


@pytest.mark.parametrize("c,expected", [((2, 2, 2), False), ((1, 1, -1), True), ((0, 0, 0), True)])
def test_is_global(c, expected):
    assert is_global(make_model(c)) is expected


def test_semidirect_identity_and_inverse():
    m = make_model((1, -1, 0))
    p = np.array([0.3, -0.2, 0.7])
    np.testing.assert_allclose(semidirect_multiply(m, np.zeros(3), p), p, atol=1e-15)
    np.testing.assert_allclose(semidirect_multiply(m, p, np.zeros(3)), p, atol=1e-15)
