import math

import numpy as np
import pytest
from scipy.stats import chisquare

from sphereot.distributions import (
    BandSpec,
    MixtureSpec,
    TWO_EIGHTH_SPHERE_BANDS,
    VmfParams,
    four_mode_mixture,
    sample_band,
    sample_band_union,
    sample_mixture,
    sample_vmf,
    six_mode_mixture,
)
from sphereot.errors import InvalidKappa, InvalidRange
from sphereot.evaluation import BinGrid


def test_vmf_requires_positive_kappa():
    with pytest.raises(InvalidKappa):
        VmfParams(np.array([1.0, 0.0, 0.0]), 0.0)
    with pytest.raises(InvalidKappa):
        VmfParams(np.array([1.0, 0.0, 0.0]), -3.0)


def test_vmf_concentration_asymptote():
    params = VmfParams(np.array([0.0, 0.0, 1.0]), 1e6)
    cloud = sample_vmf(params, 1000, seed=0)
    dev = np.arccos(np.clip(cloud.points @ params.mu, -1.0, 1.0))
    assert dev.mean() < 0.01


def test_vmf_mean_resultant_length_s2():
    # closed form on S^2: coth(kappa) - 1/kappa
    kappa = 10.0
    cloud = sample_vmf(VmfParams(np.array([1.0, 0.0, 0.0]), kappa), 100_000, seed=1)
    r = np.linalg.norm(cloud.points.mean(axis=0))
    expected = 1.0 / math.tanh(kappa) - 1.0 / kappa
    assert abs(r - expected) <= 0.01


def test_vmf_samples_are_unit():
    cloud = sample_vmf(VmfParams(np.ones(8), 3.0), 500, seed=2)
    assert np.max(np.abs(np.linalg.norm(cloud.points, axis=1) - 1.0)) <= 1e-9


def test_vmf_deterministic_given_seed():
    p = VmfParams(np.array([0.0, 1.0, 0.0]), 7.0)
    a = sample_vmf(p, 257, seed=42).points
    b = sample_vmf(p, 257, seed=42).points
    assert np.array_equal(a, b)
    c = sample_vmf(p, 257, seed=43).points
    assert not np.array_equal(a, c)


def test_band_full_sphere_symmetry():
    spec = BandSpec(0.0, math.pi, 0.0, 2.0 * math.pi)
    cloud = sample_band(spec, 100_000, seed=3)
    assert np.linalg.norm(cloud.points.mean(axis=0)) < 0.02


def test_band_uniformity_chi_square():
    spec = BandSpec(0.0, math.pi, 0.0, 2.0 * math.pi)
    cloud = sample_band(spec, 100_000, seed=4)
    counts = np.bincount(BinGrid(8, 16).cell_index(cloud.points), minlength=128)
    _, p = chisquare(counts)
    assert p >= 0.01


def test_band_respects_bounds_exactly():
    spec = TWO_EIGHTH_SPHERE_BANDS[0]
    pts = sample_band(spec, 20_000, seed=5).points
    theta = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
    assert theta.min() >= spec.theta_min and theta.max() <= spec.theta_max
    assert phi.min() >= spec.phi_min and phi.max() <= spec.phi_max


def test_band_hemisphere_support():
    pts = sample_band(BandSpec(0.0, math.pi / 2, 0.0, 2.0 * math.pi), 5000, seed=6).points
    assert np.all(pts[:, 2] > 0.0)


def test_band_invalid_ranges():
    with pytest.raises(InvalidRange):
        BandSpec(1.0, 0.5, 0.0, 1.0)
    with pytest.raises(InvalidRange):
        BandSpec(0.0, 1.0, 1.0, 1.0)
    with pytest.raises(InvalidRange):
        BandSpec(0.0, 1.0, 0.0, 7.0)


def test_band_union_gap_is_empty():
    pts = sample_band_union(TWO_EIGHTH_SPHERE_BANDS, 50_000, seed=7).points
    phi = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2.0 * math.pi)
    gap = (phi > math.pi / 2) & (phi < math.pi / 2 + math.pi / 12)
    assert not np.any(gap)


def test_single_component_mixture_matches_vmf():
    p = VmfParams(np.array([0.0, 0.0, 1.0]), 12.0)
    mix = MixtureSpec(((p, 1.0),))
    a = sample_mixture(mix, 123, seed=8).points
    b = sample_vmf(p, 123, seed=8).points
    assert np.array_equal(a, b)


def test_four_mode_proportions():
    mix = four_mode_mixture(50.0)
    pts = sample_mixture(mix, 10_000, seed=9).points
    means = np.array([c[0].mu for c in mix.components])
    nearest = np.argmax(pts @ means.T, axis=1)
    props = np.bincount(nearest, minlength=4) / len(pts)
    assert np.all(np.abs(props - 0.25) <= 0.02)


def test_six_mode_cluster_recovery():
    mix = six_mode_mixture(50.0)
    pts = sample_mixture(mix, 6000, seed=10).points
    means = np.array([c[0].mu for c in mix.components])
    nearest = np.argmax(pts @ means.T, axis=1)
    assert len(np.unique(nearest)) == 6


def test_mixture_weight_validation():
    p = VmfParams(np.array([1.0, 0.0, 0.0]), 2.0)
    with pytest.raises(InvalidRange):
        MixtureSpec(((p, 0.7), (p, 0.7)))
    with pytest.raises(InvalidRange):
        MixtureSpec(())


def test_high_dimension_vmf():
    mu = np.zeros(768)
    mu[0] = 1.0
    cloud = sample_vmf(VmfParams(mu, 100.0), 200, seed=11)
    assert cloud.points.shape == (200, 768)
    assert np.max(np.abs(np.linalg.norm(cloud.points, axis=1) - 1.0)) <= 1e-9
    # concentration pulls samples toward mu
    assert np.mean(cloud.points @ mu) > 0.2
