"""Geometry layer: construction invariants and closed-form oracles."""

import numpy as np
import pytest
from scipy.special import i0 as bessel_i0

from shrinkerlab import curvegeo
from shrinkerlab.curvegeo import (
    DiscreteCurve,
    circle,
    ellipse,
    f_functional,
    fourier_curve,
    gaussian_weights,
    geometry,
    hausdorff_distance,
    random_fourier,
    resample,
    shrinker_quantity,
)
from shrinkerlab.errors import DegenerateCurve, InterpolationFailure, InvalidCurve

SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# construction invariants
# ---------------------------------------------------------------------------

def test_rejects_odd_node_count():
    t = np.linspace(0, 2 * np.pi, 17, endpoint=False)
    with pytest.raises(InvalidCurve):
        DiscreteCurve(np.column_stack([np.cos(t), np.sin(t)]))


def test_rejects_too_few_nodes():
    t = np.linspace(0, 2 * np.pi, 8, endpoint=False)
    with pytest.raises(InvalidCurve):
        DiscreteCurve(np.column_stack([np.cos(t), np.sin(t)]))


def test_rejects_nonfinite():
    pts = circle(1.0, m=32).points.copy()
    pts[3, 0] = np.nan
    with pytest.raises(InvalidCurve):
        DiscreteCurve(pts)


def test_rejects_self_intersection():
    # figure eight
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    pts = np.column_stack([np.sin(2 * t), np.sin(t)])
    with pytest.raises(InvalidCurve):
        DiscreteCurve(pts)


def test_rejects_extreme_spacing_ratio():
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    warped = t - 0.95 * np.sin(t)  # clusters nodes near t = 0
    pts = np.column_stack([np.cos(warped), np.sin(warped)])
    with pytest.raises(InvalidCurve):
        DiscreteCurve(pts)


def test_orientation_normalized_to_ccw():
    c = circle(1.0, m=64)
    reversed_curve = DiscreteCurve(c.points[::-1])
    assert reversed_curve.counterclockwise
    # reversal of a reversed list restores the original nodes exactly
    assert np.array_equal(reversed_curve.points, c.points)
    assert reversed_curve.area() > 0


def test_points_are_readonly():
    c = circle(1.0, m=32)
    with pytest.raises(ValueError):
        c.points[0, 0] = 5.0


def test_csv_round_trip(tmp_path):
    c = random_fourier(5, 0.05, seed=3, m=64)
    path = tmp_path / "curve.csv"
    c.to_csv(path)
    back = DiscreteCurve.from_csv(path)
    assert np.array_equal(back.points, c.points)


def test_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(InvalidCurve):
        DiscreteCurve.from_csv(path)


# ---------------------------------------------------------------------------
# differential geometry oracles
# ---------------------------------------------------------------------------

def test_circle_geometry_fields():
    r = 1.7
    c = circle(r, m=128)
    geom = geometry(c)
    assert np.allclose(geom.curvature, 1.0 / r, atol=1e-12)
    # inner normal points toward the center
    t = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    assert np.allclose(geom.normal, -np.column_stack([np.cos(t), np.sin(t)]), atol=1e-12)
    assert np.allclose(np.einsum("ij,ij->i", geom.tangent, geom.normal), 0.0, atol=1e-14)
    assert np.allclose(np.hypot(*geom.normal.T), 1.0, atol=1e-13)
    # spectral weights integrate the smooth circumference exactly
    assert abs(geom.arclength_weights.sum() - 2 * np.pi * r) < 1e-12


def test_ellipse_curvature_closed_form():
    a, b = 2.0, 1.0
    c = ellipse(a, b, m=256)
    geom = geometry(c)
    t = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    g = np.sqrt(a * a * np.sin(t) ** 2 + b * b * np.cos(t) ** 2)
    assert np.allclose(geom.curvature, a * b / g**3, rtol=1e-10)


def test_fd4_scheme_converges_to_spectral():
    c = ellipse(1.5, 1.0, m=512)
    h_fd = geometry(c, scheme="fd4").curvature
    h_sp = geometry(c, scheme="spectral").curvature
    assert np.max(np.abs(h_fd - h_sp)) < 1e-7


def test_degenerate_parametrization_raises():
    # nearly stationary parametrization over a stretch of the grid
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    pts = np.column_stack([np.cos(t), np.sin(t)]) * 1e-12
    c = DiscreteCurve(pts, validate=False)
    with pytest.raises(DegenerateCurve):
        geometry(c)


def test_area_and_centroid():
    c = circle(1.3, center=(0.4, -0.2), m=128)
    assert abs(c.area() - np.pi * 1.3**2) < 1e-12
    assert np.allclose(c.centroid(), [0.4, -0.2], atol=1e-12)
    e = ellipse(2.0, 0.5, m=256)
    assert abs(e.area() - np.pi * 2.0 * 0.5) < 1e-10
    # shoelace agrees to polygon accuracy O(m^-2)
    assert abs(curvegeo.polygon_area(e.points) - e.area()) < 5e-4
    coarse = ellipse(2.0, 0.5, m=128)
    fine_err = abs(curvegeo.polygon_area(e.points) - e.area())
    coarse_err = abs(curvegeo.polygon_area(coarse.points) - coarse.area())
    assert coarse_err / fine_err > 3.0  # roughly quadratic in 1/m


# ---------------------------------------------------------------------------
# shrinker quantity and Gaussian functional
# ---------------------------------------------------------------------------

def test_shrinker_quantity_vanishes_on_root_two_circle():
    c = circle(SQRT2, m=256)
    assert np.max(np.abs(shrinker_quantity(c))) < 1e-10


def test_shrinker_quantity_circle_radius_law():
    # phi = 1/r - r/2 on an origin-centered circle
    for r in (0.8, SQRT2, 2.5):
        c = circle(r, m=128)
        assert np.allclose(shrinker_quantity(c), 1.0 / r - r / 2.0, atol=1e-12)


def test_shrinker_quantity_ellipse_closed_form():
    a, b = 1.6, 1.2
    c = ellipse(a, b, m=256)
    t = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    g = np.sqrt(a * a * np.sin(t) ** 2 + b * b * np.cos(t) ** 2)
    expected = a * b / g**3 - a * b / (2.0 * g)
    assert np.allclose(shrinker_quantity(c), expected, rtol=1e-9, atol=1e-10)


def test_f_functional_circle_closed_form():
    # F(radius r, centered) = sqrt(pi) * r * exp(-r^2/4)
    for r in (1.0, SQRT2, 2.0):
        c = circle(r, m=128)
        assert abs(f_functional(c) - np.sqrt(np.pi) * r * np.exp(-r * r / 4)) < 1e-13


def test_f_functional_stationary_value():
    c = circle(SQRT2, m=256)
    assert abs(f_functional(c) - np.sqrt(2 * np.pi) * np.exp(-0.5)) < 1e-13


def test_f_functional_off_center_bessel_oracle():
    # independent oracle: F = sqrt(pi) r exp(-(r^2+d^2)/4) I0(r d / 2)
    r, d = 1.4, 0.9
    expected = np.sqrt(np.pi) * r * np.exp(-(r * r + d * d) / 4) * bessel_i0(r * d / 2)
    for m, tol in ((64, 1e-10), (256, 1e-13)):
        c = circle(r, center=(d, 0.0), m=m)
        assert abs(f_functional(c) - expected) < tol


def test_f_functional_maximized_at_root_two():
    # among centered round curves the stationary radius is the maximizer
    vals = [f_functional(circle(r, m=64)) for r in (1.2, SQRT2, 1.6)]
    assert vals[1] > vals[0] and vals[1] > vals[2]


def test_gaussian_weights_positive():
    c = random_fourier(6, 0.08, seed=11, m=128)
    assert np.all(gaussian_weights(c) > 0)


# ---------------------------------------------------------------------------
# hausdorff distance
# ---------------------------------------------------------------------------

def test_hausdorff_concentric_circles():
    r1, r2 = 1.0, 1.5
    sag = r2 * (1 - np.cos(np.pi / 256))  # chord sag bound at m=256
    h = hausdorff_distance(circle(r1, m=256), circle(r2, m=256))
    assert r2 - r1 - 1e-12 <= h <= r2 - r1 + sag + 1e-12


def test_hausdorff_translated_circle():
    d = 0.3
    h = hausdorff_distance(circle(1.0, m=256), circle(1.0, center=(d, 0.0), m=256))
    assert abs(h - d) < 5e-5


def test_hausdorff_symmetric_and_zero_on_self():
    a = random_fourier(4, 0.06, seed=2, m=128)
    b = circle(1.2, m=64)
    assert hausdorff_distance(a, a) == 0.0
    assert hausdorff_distance(a, b) == hausdorff_distance(b, a)


# ---------------------------------------------------------------------------
# resampling
# ---------------------------------------------------------------------------

def test_resample_uniformizes_spacing():
    c = ellipse(2.0, 1.0, m=128)
    assert c.spacing_ratio() > 1.5
    r = resample(c)
    # chords of equal arcs differ only by the curvature sag, O((L/m)^2)
    assert r.spacing_ratio() < 1.002
    # the metric speed of the resampled interpolant is uniform
    g = geometry(r).metric_speed
    assert g.max() / g.min() - 1.0 < 1e-7
    assert abs(r.length() - c.length()) < 1e-12 * c.length()


def test_resample_preserves_node_zero_and_length():
    c = fourier_curve(1.0, (0.1, 0.05), (0.0, 0.02), m=128)
    r = resample(c, 256)
    assert r.m == 256
    assert np.allclose(r.points[0], c.points[0], atol=1e-12)
    assert abs(r.length() - c.length()) < 1e-10


def test_resample_identity_on_circle():
    c = circle(1.1, m=64)
    r = resample(c)
    assert np.max(np.abs(r.points - c.points)) < 1e-12


def test_resample_rejects_bad_target():
    c = circle(1.0, m=64)
    with pytest.raises(InterpolationFailure):
        resample(c, 15)


def test_resample_geometry_consistent():
    # curvature of the resampled curve matches the closed form of the original
    a, b = 1.5, 1.0
    c = resample(ellipse(a, b, m=256))
    geom = geometry(c)
    # implicit closed form: H = (ab)^4 / (a^4 y^2 + b^4 x^2)^(3/2)
    x, y = c.points.T
    w = np.sqrt(a**4 * y**2 + b**4 * x**2)
    assert np.allclose(geom.curvature, (a * b) ** 4 / w**3, rtol=1e-8)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def test_fourier_curve_rejects_nonpositive_radius():
    with pytest.raises(InvalidCurve):
        fourier_curve(1.0, (1.5,), m=64)


def test_random_fourier_reproducible():
    a = random_fourier(6, 0.05, seed=42, m=64)
    b = random_fourier(6, 0.05, seed=42, m=64)
    assert np.array_equal(a.points, b.points)
    c = random_fourier(6, 0.05, seed=43, m=64)
    assert not np.array_equal(a.points, c.points)


def test_builders_give_valid_curves():
    for c in (circle(2.0, m=32), ellipse(1.0, 0.6, m=64),
              fourier_curve(1.0, (0.05,), (0.03, 0.01), m=64),
              random_fourier(8, 0.04, seed=1, m=96)):
        geom = geometry(c)
        assert np.all(np.isfinite(geom.curvature))
        assert c.area() > 0
