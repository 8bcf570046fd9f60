"""Unit-sphere primitives.

Points live in ambient coordinates on S^d (unit vectors in R^{d+1}).
This module provides normalization, the angular metric, the logarithmic
transportation cost log(2 - <x, y>), and the Mollweide equal-area
projection used for S^2 visualization.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NonConvergent, ZeroVector

# Lower clamp for the log-cost argument: mapped points may drift off the
# sphere during training, so 2 - <x,y> can approach 0.
EPS_COST = 1e-9

_UNIT_TOL = 1e-9
_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class UnitVector:
    """A point on S^d stored as ambient coordinates of norm 1."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 1 or c.size < 3:
            raise DimensionMismatch(f"ambient dimension must be >= 3, got shape {c.shape}")
        if abs(np.linalg.norm(c) - 1.0) > _UNIT_TOL:
            raise ZeroVector(f"not unit norm: |v| = {np.linalg.norm(c)!r}")
        object.__setattr__(self, "coords", c)

    @property
    def ambient_dim(self):
        return self.coords.size


@dataclass(frozen=True)
class PointCloud:
    """Weighted points on one sphere; weights default to uniform 1/n."""

    points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] < 3:
            raise DimensionMismatch(f"expected (n, d+1) with d+1 >= 3, got {pts.shape}")
        if pts.shape[0] == 0:
            raise EmptyInput("point cloud is empty")
        norms = np.linalg.norm(pts, axis=1)
        if np.max(np.abs(norms - 1.0)) > _UNIT_TOL:
            bad = int(np.argmax(np.abs(norms - 1.0)))
            raise ZeroVector(f"row {bad} not unit norm: |v| = {norms[bad]!r}")
        if self.weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (pts.shape[0],):
                raise DimensionMismatch("weights length must match point count")
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.shape[0]

    @property
    def ambient_dim(self):
        return self.points.shape[1]

    def __getitem__(self, i) -> UnitVector:
        return UnitVector(self.points[i])


def _coords(x):
    return x.coords if isinstance(x, UnitVector) else np.asarray(x, dtype=np.float64)


def normalize(v) -> UnitVector:
    """Project a nonzero ambient vector onto the sphere.

    Raises ZeroVector when |v| < 1e-12.
    """
    c = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(c)
    if n < _ZERO_TOL:
        raise ZeroVector(f"cannot normalize vector with norm {n!r}")
    return UnitVector(c / n)


def unit_rows(points: np.ndarray) -> np.ndarray:
    """Row-wise normalization of an (n, d+1) array."""
    pts = np.asarray(points, dtype=np.float64)
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms < _ZERO_TOL):
        raise ZeroVector("zero row encountered during normalization")
    return pts / norms[:, None]


def spherical_distance(x, y) -> float:
    """Geodesic distance arccos(<x, y>) in [0, pi], inner product clamped."""
    a, b = _coords(x), _coords(y)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} vs {b.shape}")
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


def spherical_distance_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-paired geodesic distances between two (n, d+1) arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} vs {b.shape}")
    dots = np.einsum("ij,ij->i", a, b)
    return np.arccos(np.clip(dots, -1.0, 1.0))


def log_cost(x, y) -> float:
    """Logarithmic transportation cost log(2 - <x, y>).

    `y` may be a raw (non-unit) ambient vector; the argument of the log
    is clamped below at EPS_COST so the cost stays finite.
    """
    a, b = _coords(x), _coords(y)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} vs {b.shape}")
    return float(np.log(max(2.0 - float(np.dot(a, b)), EPS_COST)))


def log_cost_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-paired log costs between (n, d+1) arrays (b may be non-unit)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes {a.shape} vs {b.shape}")
    dots = np.einsum("ij,ij->i", a, b)
    return np.log(np.maximum(2.0 - dots, EPS_COST))


def to_latlon(points: np.ndarray):
    """S^2 latitude/longitude: lat = arcsin(x3), lon = atan2(x2, x1)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != 3:
        raise DimensionMismatch("latitude/longitude defined for S^2 only")
    lat = np.arcsin(np.clip(pts[:, 2], -1.0, 1.0))
    lon = np.arctan2(pts[:, 1], pts[:, 0])
    return lat, lon


def _solve_mollweide_theta(lat: np.ndarray) -> np.ndarray:
    """Newton solve of 2t + sin(2t) = pi sin(lat); poles handled analytically."""
    lat = np.asarray(lat, dtype=np.float64)
    theta = lat.copy()
    target = math.pi * np.sin(lat)
    pole = np.abs(np.abs(lat) - math.pi / 2) < 1e-12
    theta[pole] = np.sign(lat[pole]) * (math.pi / 2)
    active = ~pole
    for _ in range(50):
        if not np.any(active):
            break
        t = theta[active]
        resid = 2.0 * t + np.sin(2.0 * t) - target[active]
        theta[active] = t - resid / (2.0 + 2.0 * np.cos(2.0 * t))
        active = active.copy()
        active[active] = np.abs(resid) > 1e-10
    if np.any(active):
        raise NonConvergent("Mollweide Newton iteration did not converge in 50 steps")
    return theta


def mollweide_project(x, radius: float = 1.0):
    """Equal-area Mollweide projection of one S^2 point.

    Returns (u, v) inside the canonical ellipse with semi-axes
    (2*sqrt(2)*R, sqrt(2)*R), mapping sphere area 4*pi*R^2 exactly onto
    the ellipse area. Central meridian at longitude 0.
    """
    u, v = mollweide_project_rows(np.atleast_2d(_coords(x)), radius)
    return float(u[0]), float(v[0])


def mollweide_project_rows(points: np.ndarray, radius: float = 1.0,
                           central_meridian: float = 0.0):
    """Vectorized Mollweide projection of an (n, 3) array."""
    lat, lon = to_latlon(points)
    if central_meridian != 0.0:
        lon = np.mod(lon - central_meridian + math.pi, 2.0 * math.pi) - math.pi
    theta = _solve_mollweide_theta(lat)
    u = (2.0 * math.sqrt(2.0) / math.pi) * radius * lon * np.cos(theta)
    v = math.sqrt(2.0) * radius * np.sin(theta)
    return u, v


def vertical_project_rows(points: np.ndarray, radius: float = 1.0):
    """Orthographic projection along the +x3 axis (view from above the pole)."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[1] != 3:
        raise DimensionMismatch("vertical projection defined for S^2 only")
    return radius * pts[:, 0], radius * pts[:, 1]
