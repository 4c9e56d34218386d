import math

import numpy as np
import pytest

from plateau_hxr.errors import DomainError, ValidationError
from plateau_hxr.hyperbolic import (HalfPlanePoint, Isometry, PolarPoint, ProductPoint, boundary_theta_from_x,
                                    boundary_x_from_theta, compose, convert, disk_area, distance,
                                    distance_to_geodesic, gans_distance, gans_from_halfplane, gans_from_polar,
                                    halfplane_distance, halfplane_from_gans, halfplane_from_polar,
                                    polar_distance, polar_from_gans, polar_from_halfplane)

rng = np.random.default_rng(3)
X = rng.uniform(-3, 3, 200)
Y = rng.uniform(0.05, 4, 200)


def test_chart_round_trips():
    rho, th = polar_from_halfplane(X, Y)
    x2, y2 = halfplane_from_polar(rho, th)
    assert np.allclose(x2, X, atol=1e-10) and np.allclose(y2, Y, atol=1e-10)
    G = gans_from_halfplane(X, Y)
    assert np.allclose(G, gans_from_polar(rho, th), atol=1e-10)
    x3, y3 = halfplane_from_gans(G)
    assert np.allclose(x3, X, atol=1e-9) and np.allclose(y3, Y, atol=1e-9)
    r4, t4 = polar_from_gans(G)
    assert np.allclose(r4, rho) and np.allclose(np.cos(t4 - th), 1.0)


def test_origin_and_boundary_conventions():
    rho, _ = polar_from_halfplane(0.0, 1.0)
    assert rho == pytest.approx(0.0, abs=1e-15)
    assert float(boundary_theta_from_x(0.0)) == pytest.approx(0.0)
    assert float(boundary_theta_from_x(np.inf)) == pytest.approx(math.pi)
    th = np.linspace(-3.0, 3.0, 13)
    assert np.allclose(boundary_x_from_theta(th), np.tan(th / 2))


def test_distances_agree_across_models():
    i, j = np.arange(100), np.arange(100, 200)
    dh = halfplane_distance(X[i], Y[i], X[j], Y[j])
    r, t = polar_from_halfplane(X, Y)
    dp = polar_distance(r[i], t[i], r[j], t[j])
    G = gans_from_halfplane(X, Y)
    dg = gans_distance(G[i], G[j])
    assert np.allclose(dh, dp, rtol=1e-9) and np.allclose(dh, dg, rtol=1e-9)


def test_distance_from_i_is_rho():
    # closed form: d(i, iy) = |ln y|
    assert float(halfplane_distance(0.0, 1.0, 0.0, math.e ** 2)) == pytest.approx(2.0)


def test_product_distance_is_pythagorean():
    p = ProductPoint(HalfPlanePoint(0.0, 1.0), 0.0)
    q = ProductPoint(HalfPlanePoint(0.0, math.e), 1.0)
    assert distance(p, q) == pytest.approx(math.sqrt(2.0))


def test_convert_between_models():
    p = PolarPoint(1.3, 0.7)
    h = convert(p, "halfplane")
    back = convert(h, "polar")
    assert back.rho == pytest.approx(1.3) and back.theta == pytest.approx(0.7)
    with pytest.raises(ValidationError):
        convert(p, "klein")


def test_isometries_preserve_distance():
    isos = [Isometry.dilation(2.5), Isometry.dilation(0.3, (1.0, 2.0)), Isometry.rotation(0.9),
            Isometry.parabolic_normalization(0.4, 2.0)]
    i, j = np.arange(50), np.arange(50, 100)
    d0 = halfplane_distance(X[i], Y[i], X[j], Y[j])
    for iso in isos:
        x, y = iso.on_halfplane(X, Y)
        assert np.allclose(halfplane_distance(x[i], y[i], x[j], y[j]), d0, rtol=1e-9)


def test_dilation_is_scaling_in_the_half_plane():
    x, y = Isometry.dilation(0.25).on_halfplane(X, Y)
    assert np.allclose(x, 0.25 * X) and np.allclose(y, 0.25 * Y)


def test_compose_and_inverse():
    a, b = Isometry.dilation(2.0, (0.5, 2.5)), Isometry.rotation(1.1)
    c = compose(a, b)
    x1, y1 = c.on_halfplane(X, Y)
    x2, y2 = a.on_halfplane(*b.on_halfplane(X, Y))
    assert np.allclose(x1, x2) and np.allclose(y1, y2)
    x3, y3 = c.inverse().on_halfplane(x1, y1)
    assert np.allclose(x3, X, atol=1e-9) and np.allclose(y3, Y, atol=1e-9)


def test_gans_action_carries_height():
    P = np.column_stack([gans_from_halfplane(X, Y), np.linspace(0, 1, len(X))])
    Q = Isometry.vertical_translation(2.0).on_gans(P)
    assert np.allclose(Q[:, 2], P[:, 2] + 2.0) and np.allclose(Q[:, :2], P[:, :2])


def test_boundary_action_matches_dilation():
    th = np.array([0.5, 1.0, 2.0])
    img = Isometry.dilation(3.0).on_boundary(th)
    assert np.allclose(np.tan(img / 2), 3.0 * np.tan(th / 2))


def test_disk_area_closed_form():
    for rho in (0.1, 1.0, 5.0):
        assert disk_area(rho) == pytest.approx(2 * math.pi * (math.cosh(rho) - 1), rel=1e-12)
    with pytest.raises(DomainError):
        disk_area(-1.0)


def test_distance_to_vertical_geodesic():
    # closed form for the geodesic x = 0: asinh(|x| / y)
    d = distance_to_geodesic(X, Y, (0.0, math.pi))
    assert np.allclose(d, np.arcsinh(np.abs(X) / Y), rtol=1e-9, atol=1e-12)


def test_invalid_points():
    with pytest.raises((ValidationError, DomainError)):
        HalfPlanePoint(0.0, -1.0)
