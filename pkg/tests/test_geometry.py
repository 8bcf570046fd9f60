import math

import numpy as np
import pytest
from scipy.stats import chisquare

from sphereot.errors import DimensionMismatch, ZeroVector
from sphereot.geometry import (
    PointCloud,
    UnitVector,
    log_cost,
    log_cost_rows,
    mollweide_project,
    mollweide_project_rows,
    normalize,
    spherical_distance,
    unit_rows,
)


def test_normalize_scaling():
    v = normalize([2.0, 0.0, 0.0])
    assert np.array_equal(v.coords, [1.0, 0.0, 0.0])


def test_normalize_symmetry():
    v = normalize([1.0, 1.0, 0.0])
    assert np.allclose(v.coords, [math.sqrt(0.5), math.sqrt(0.5), 0.0], atol=1e-15)


def test_normalize_zero_vector():
    with pytest.raises(ZeroVector):
        normalize([0.0, 0.0, 0.0])


def test_normalize_idempotent_bit_stable():
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.standard_normal(rng.integers(3, 12))
        once = normalize(v)
        twice = normalize(once.coords)
        assert np.max(np.abs(once.coords - twice.coords)) <= 1e-12


def test_spherical_distance_identity_orthogonal_antipodal():
    e1 = UnitVector(np.array([1.0, 0.0, 0.0]))
    e2 = UnitVector(np.array([0.0, 1.0, 0.0]))
    assert spherical_distance(e1, e1) == 0.0
    assert spherical_distance(e1, e2) == pytest.approx(math.pi / 2, abs=1e-15)
    assert spherical_distance(e1, UnitVector(-e1.coords)) == pytest.approx(math.pi, abs=1e-15)


def test_spherical_distance_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        spherical_distance(np.ones(3) / math.sqrt(3), np.ones(4) / 2.0)


def test_spherical_distance_triangle_inequality():
    rng = np.random.default_rng(1)
    for _ in range(500):
        x, y, z = (normalize(rng.standard_normal(4)) for _ in range(3))
        assert spherical_distance(x, z) <= (
            spherical_distance(x, y) + spherical_distance(y, z) + 1e-9
        )


def test_log_cost_self_is_zero():
    rng = np.random.default_rng(2)
    for _ in range(100):
        x = normalize(rng.standard_normal(5))
        assert abs(log_cost(x, x)) <= 1e-12


def test_log_cost_antipodal_and_orthogonal():
    e1 = normalize([1.0, 0.0, 0.0])
    e2 = normalize([0.0, 1.0, 0.0])
    assert log_cost(e1, -e1.coords) == pytest.approx(math.log(3.0), abs=1e-12)
    assert log_cost(e1, e2.coords) == pytest.approx(math.log(2.0), abs=1e-12)


def test_log_cost_symmetric_on_unit_vectors():
    rng = np.random.default_rng(3)
    for _ in range(100):
        x = normalize(rng.standard_normal(4))
        y = normalize(rng.standard_normal(4))
        assert log_cost(x, y.coords) == pytest.approx(log_cost(y, x.coords), abs=1e-15)


def test_log_cost_clamps_instead_of_diverging():
    x = normalize([1.0, 0.0, 0.0])
    huge = np.array([2.0 + 1.0, 0.0, 0.0])  # inner product 3 > 2
    assert np.isfinite(log_cost(x, huge))
    assert log_cost(x, huge) == pytest.approx(math.log(1e-9))


def test_mollweide_origin():
    x = normalize([1.0, 0.0, 0.0])  # lat 0, lon 0
    u, v = mollweide_project(x)
    assert abs(u) <= 1e-12 and abs(v) <= 1e-12


def test_mollweide_north_pole_closed_form():
    u, v = mollweide_project(normalize([0.0, 0.0, 1.0]), radius=2.5)
    assert u == pytest.approx(0.0, abs=1e-12)
    assert v == pytest.approx(math.sqrt(2.0) * 2.5, abs=1e-10)


def test_mollweide_inside_canonical_ellipse():
    rng = np.random.default_rng(4)
    pts = unit_rows(rng.standard_normal((5000, 3)))
    u, v = mollweide_project_rows(pts, 1.0)
    r = (u / (2.0 * math.sqrt(2.0))) ** 2 + (v / math.sqrt(2.0)) ** 2
    assert np.max(r) <= 1.0 + 1e-9


def test_mollweide_near_pole_latitudes_converge():
    lats = np.array([math.pi / 2 - 1e-6, -(math.pi / 2 - 1e-7), math.pi / 2 - 1e-3])
    pts = np.column_stack([np.cos(lats), np.zeros(3), np.sin(lats)])
    u, v = mollweide_project_rows(pts, 1.0)
    assert np.all(np.isfinite(u)) and np.all(np.isfinite(v))


def _ellipse_strip_edges(k):
    """v-levels cutting the Mollweide ellipse into k equal-area strips."""
    from sphereot.geometry import _solve_mollweide_theta

    fracs = np.linspace(0.0, 1.0, k + 1)
    lats = np.arcsin(2.0 * fracs - 1.0)
    theta = _solve_mollweide_theta(lats)
    edges = math.sqrt(2.0) * np.sin(theta)
    edges[0] -= 1e-12
    edges[-1] += 1e-12
    return edges


def test_mollweide_equal_area_chi_square():
    # uniform sphere samples must land uniformly over the ellipse:
    # 8 equal-area horizontal strips x 8 equal-width slices of each strip
    rng = np.random.default_rng(5)
    pts = unit_rows(rng.standard_normal((100_000, 3)))
    u, v = mollweide_project_rows(pts, 1.0)
    edges_v = _ellipse_strip_edges(8)
    strip = np.clip(np.searchsorted(edges_v, v, side="right") - 1, 0, 7)
    b = math.sqrt(2.0)
    halfwidth = 2.0 * math.sqrt(2.0) * np.sqrt(np.maximum(1.0 - (v / b) ** 2, 1e-300))
    slice_idx = np.clip(((u / halfwidth + 1.0) * 4.0).astype(int), 0, 7)
    counts = np.bincount(strip * 8 + slice_idx, minlength=64)
    _, p = chisquare(counts)
    assert p >= 0.01


def test_mollweide_band_area_within_2_percent():
    rng = np.random.default_rng(6)
    pts = unit_rows(rng.standard_normal((100_000, 3)))
    _, v = mollweide_project_rows(pts, 1.0)
    lat_edges = np.array([-math.pi / 2, -0.6, -0.2, 0.2, 0.6, math.pi / 2])
    for lo, hi in zip(lat_edges[:-1], lat_edges[1:]):
        expected = (math.sin(hi) - math.sin(lo)) / 2.0
        pole_pts = np.array([[math.cos(lo), 0.0, math.sin(lo)],
                             [math.cos(hi), 0.0, math.sin(hi)]])
        v_lo, v_hi = mollweide_project_rows(pole_pts, 1.0)[1]
        observed = np.mean((v >= v_lo) & (v < v_hi))
        assert abs(observed - expected) <= 0.02


def test_pointcloud_weights_validation():
    pts = unit_rows(np.random.default_rng(7).standard_normal((4, 3)))
    cloud = PointCloud(pts)
    assert np.allclose(cloud.weights, 0.25)
    with pytest.raises(ValueError):
        PointCloud(pts, weights=np.array([0.5, 0.5, 0.5, 0.5]))
