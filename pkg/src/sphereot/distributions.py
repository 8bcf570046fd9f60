"""Samplers for the synthetic source/target distributions.

von Mises-Fisher (single and mixture) in arbitrary ambient dimension via
the tangent-normal decomposition with rejection sampling on the marginal
of mu^T x, plus area-uniform elevation/azimuth bands on S^2. All samplers
are deterministic given an integer seed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidKappa, InvalidRange, ZeroVector
from .geometry import PointCloud, UnitVector, unit_rows


@dataclass(frozen=True)
class VmfParams:
    """Location mu (unit vector) and concentration kappa > 0."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        n = np.linalg.norm(mu)
        if n < 1e-12:
            raise ZeroVector("vMF location must be nonzero")
        object.__setattr__(self, "mu", mu / n)
        if not self.kappa > 0:
            raise InvalidKappa(f"kappa must be > 0, got {self.kappa}")

    @property
    def ambient_dim(self):
        return self.mu.size


@dataclass(frozen=True)
class MixtureSpec:
    """Weighted list of vMF components; weights sum to 1."""

    components: tuple

    def __post_init__(self):
        comps = tuple((p, float(w)) for p, w in self.components)
        if len(comps) == 0:
            raise InvalidRange("mixture needs at least one component")
        weights = np.array([w for _, w in comps])
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidRange("mixture weights must be nonnegative and sum to 1")
        dims = {p.ambient_dim for p, _ in comps}
        if len(dims) != 1:
            raise InvalidRange("mixture components must share one ambient dimension")
        object.__setattr__(self, "components", comps)

    @property
    def ambient_dim(self):
        return self.components[0][0].ambient_dim


@dataclass(frozen=True)
class BandSpec:
    """Elevation/azimuth box on S^2; theta measured from the north pole."""

    theta_min: float
    theta_max: float
    phi_min: float
    phi_max: float

    def __post_init__(self):
        if not (0.0 <= self.theta_min < self.theta_max <= np.pi):
            raise InvalidRange(f"need 0 <= theta_min < theta_max <= pi, got "
                               f"[{self.theta_min}, {self.theta_max}]")
        if not (self.phi_min < self.phi_max):
            raise InvalidRange("need phi_min < phi_max")
        if self.phi_max - self.phi_min > 2.0 * np.pi + 1e-12:
            raise InvalidRange("azimuth range wider than 2*pi")

    @property
    def area(self):
        """Spherical area of the band on the unit sphere."""
        return (np.cos(self.theta_min) - np.cos(self.theta_max)) * (self.phi_max - self.phi_min)


def _vmf_weights(rng, kappa, m, n):
    """Rejection-sample n values of the marginal t = mu^T x on S^m."""
    b = m / (np.sqrt(4.0 * kappa * kappa + m * m) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * np.log(1.0 - x0 * x0)
    out = np.empty(n)
    filled = 0
    while filled < n:
        k = n - filled
        z = rng.beta(m / 2.0, m / 2.0, size=k)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random(k)
        acc = kappa * w + m * np.log1p(-x0 * w) - c >= np.log(u)
        took = w[acc]
        out[filled:filled + took.size] = took
        filled += took.size
    return out


def _vmf_draw(rng, mu, kappa, n):
    p = mu.size
    t = _vmf_weights(rng, kappa, p - 1, n)
    v = rng.standard_normal((n, p))
    v -= np.outer(v @ mu, mu)
    v = unit_rows(v)
    x = np.sqrt(np.maximum(1.0 - t * t, 0.0))[:, None] * v + t[:, None] * mu[None, :]
    return unit_rows(x)


def sample_vmf(params: VmfParams, n: int, seed: int) -> PointCloud:
    """Draw n i.i.d. vMF(mu, kappa) points; any ambient dimension >= 3."""
    if n < 1:
        raise InvalidRange("need n >= 1")
    rng = np.random.default_rng(seed)
    return PointCloud(_vmf_draw(rng, params.mu, params.kappa, n))


def sample_band(spec: BandSpec, n: int, seed: int) -> PointCloud:
    """Area-uniform sampling of an S^2 band.

    cos(theta) is uniform on [cos theta_max, cos theta_min] and phi is
    uniform on [phi_min, phi_max], which is uniform with respect to
    surface area; the support bounds are hard.
    """
    if n < 1:
        raise InvalidRange("need n >= 1")
    rng = np.random.default_rng(seed)
    return PointCloud(_band_draw(rng, spec, n))


def _band_draw(rng, spec, n):
    ct = rng.uniform(np.cos(spec.theta_max), np.cos(spec.theta_min), size=n)
    phi = rng.uniform(spec.phi_min, spec.phi_max, size=n)
    st = np.sqrt(np.maximum(1.0 - ct * ct, 0.0))
    return np.column_stack([st * np.cos(phi), st * np.sin(phi), ct])


def sample_band_union(specs, n: int, seed: int) -> PointCloud:
    """Uniform sampling over a union of disjoint bands, weighted by area."""
    specs = list(specs)
    if not specs:
        raise InvalidRange("need at least one band")
    if n < 1:
        raise InvalidRange("need n >= 1")
    rng = np.random.default_rng(seed)
    areas = np.array([s.area for s in specs])
    probs = areas / areas.sum()
    idx = rng.choice(len(specs), size=n, p=probs)
    out = np.empty((n, 3))
    for k, spec in enumerate(specs):
        sel = idx == k
        cnt = int(sel.sum())
        if cnt:
            out[sel] = _band_draw(rng, spec, cnt)
    return PointCloud(out)


def sample_mixture(spec: MixtureSpec, n: int, seed: int) -> PointCloud:
    """Draw from a vMF mixture: component index from the weights, then vMF.

    A single-component mixture delegates to sample_vmf with the same seed,
    so the degenerate case reproduces it bitwise.
    """
    if n < 1:
        raise InvalidRange("need n >= 1")
    if len(spec.components) == 1:
        return sample_vmf(spec.components[0][0], n, seed)
    rng = np.random.default_rng(seed)
    weights = np.array([w for _, w in spec.components])
    idx = rng.choice(len(spec.components), size=n, p=weights)
    out = np.empty((n, spec.ambient_dim))
    for k, (params, _) in enumerate(spec.components):
        sel = idx == k
        cnt = int(sel.sum())
        if cnt:
            out[sel] = _vmf_draw(rng, params.mu, params.kappa, cnt)
    return PointCloud(out)


def axis_modes_mixture(axes, kappa: float, dim: int = 3) -> MixtureSpec:
    """Equal-weight vMF mixture with means on signed coordinate axes.

    `axes` is a sequence of (axis index, sign) pairs.
    """
    comps = []
    for axis, sign in axes:
        mu = np.zeros(dim)
        mu[axis] = float(sign)
        comps.append((VmfParams(mu, kappa), 1.0 / len(axes)))
    return MixtureSpec(tuple(comps))


def four_mode_mixture(kappa: float) -> MixtureSpec:
    """Means (1,0,0), (0,1,0), (-1,0,0), (0,-1,0), equal weights."""
    return axis_modes_mixture([(0, 1), (1, 1), (0, -1), (1, -1)], kappa)


def six_mode_mixture(kappa: float) -> MixtureSpec:
    """Means on all six signed coordinate axes, equal weights."""
    return axis_modes_mixture([(0, 1), (1, 1), (2, 1), (0, -1), (1, -1), (2, -1)], kappa)


# Two one-eighth-sphere bands: elevation pi/3..5pi/6 with azimuth 0..pi/2,
# and the same elevations with azimuth pi/2+pi/12..pi+pi/12 (the pi/12 gap
# between the bands is intentional and kept verbatim).
TWO_EIGHTH_SPHERE_BANDS = (
    BandSpec(np.pi / 3, 5 * np.pi / 6, 0.0, np.pi / 2),
    BandSpec(np.pi / 3, 5 * np.pi / 6, np.pi / 2 + np.pi / 12, np.pi + np.pi / 12),
)


def make_sampler(draw, *items):
    """Wrap a sampler so trainer code can call it as sampler(n, seed)."""
    def sampler(n, seed):
        return draw(*items, n, seed).points
    return sampler
