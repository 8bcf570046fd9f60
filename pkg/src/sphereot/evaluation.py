"""Map-quality metrics: support coverage, binned TV distance, dual gap.

The S^2 bin grid uses equal-cos(theta) bands crossed with equal-azimuth
sectors, so every cell has identical spherical area by construction.
"""

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, EmptyInput
from .geometry import PointCloud
from .oracle import oracle_value
from .sot import wasserstein_estimate


class BinGrid:
    """K_theta x K_phi equal-area cells on S^2."""

    def __init__(self, k_theta=8, k_phi=16):
        self.k_theta = int(k_theta)
        self.k_phi = int(k_phi)

    @property
    def n_cells(self):
        return self.k_theta * self.k_phi

    def cell_index(self, points):
        pts = points.points if isinstance(points, PointCloud) else np.atleast_2d(points)
        if pts.shape[1] != 3:
            raise DimensionMismatch("bin grid is defined on S^2")
        z = np.clip(pts[:, 2], -1.0, 1.0)
        band = np.minimum(((1.0 - z) / 2.0 * self.k_theta).astype(np.int64),
                          self.k_theta - 1)
        phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
        sector = np.minimum((phi / (2.0 * np.pi) * self.k_phi).astype(np.int64),
                            self.k_phi - 1)
        return band * self.k_phi + sector

    def histogram(self, cloud):
        pts = cloud.points if isinstance(cloud, PointCloud) else np.atleast_2d(cloud)
        w = cloud.weights if isinstance(cloud, PointCloud) else np.full(len(pts), 1.0 / len(pts))
        idx = self.cell_index(pts)
        return np.bincount(idx, weights=w, minlength=self.n_cells)


def tv_binned(a, b, grid=None) -> float:
    """Total-variation distance between binned S^2 histograms, in [0, 1]."""
    grid = grid or BinGrid()
    return 0.5 * float(np.abs(grid.histogram(a) - grid.histogram(b)).sum())


def band_membership(points, bands):
    """Boolean mask of points inside the union of BandSpec supports."""
    pts = points.points if isinstance(points, PointCloud) else np.atleast_2d(points)
    if pts.shape[1] != 3:
        raise DimensionMismatch("band membership is defined on S^2")
    theta = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * np.pi)
    inside = np.zeros(len(pts), dtype=bool)
    for spec in bands:
        th_ok = (theta >= spec.theta_min) & (theta <= spec.theta_max)
        width = spec.phi_max - spec.phi_min
        rel = np.mod(phi - spec.phi_min, 2.0 * np.pi)
        inside |= th_ok & (rel <= width)
    return inside


def _knn_spherical(query, ref, k, skip_self=False):
    """Distance to the k-th nearest reference point, on the sphere."""
    tree = cKDTree(ref)
    kk = k + 1 if skip_self else k
    chord, _ = tree.query(query, k=kk)
    chord = np.atleast_2d(chord)[:, -1]
    return 2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0))


def coverage(mapped, target_support, k=5) -> float:
    """Fraction of mapped points lying on the target support.

    `target_support` is either a list of BandSpec (exact membership) or a
    target sample cloud; in the sampled case a mapped point counts as
    covered when its k-NN spherical distance to the target is at most the
    target's own 95th-percentile k-NN self-distance.
    """
    pts = mapped.points if isinstance(mapped, PointCloud) else np.atleast_2d(mapped)
    if len(pts) == 0:
        raise EmptyInput("no mapped points")
    if isinstance(target_support, PointCloud) or (
            isinstance(target_support, np.ndarray) and target_support.ndim == 2):
        ref = target_support.points if isinstance(target_support, PointCloud) else target_support
        if len(ref) == 0:
            raise EmptyInput("no target samples")
        self_d = _knn_spherical(ref, ref, k, skip_self=True)
        threshold = float(np.quantile(self_d, 0.95))
        d = _knn_spherical(pts, ref, k)
        return float(np.mean(d <= threshold))
    bands = list(target_support)
    if not bands:
        raise EmptyInput("no bands")
    return float(np.mean(band_membership(pts, bands)))


def dual_gap(f, g, x_cloud, y_cloud) -> float:
    """oracle_value(X, Y) - dual estimate; nonnegative up to MC slack by
    weak duality."""
    est = wasserstein_estimate(f, g, x_cloud, y_cloud)
    return oracle_value(x_cloud, y_cloud) - est.total
