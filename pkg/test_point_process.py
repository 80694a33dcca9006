import math

import numpy as np
import pytest
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from src.errors import ParameterDomainError, UsageError
from src.point_process import (
    ConstantIntensity,
    GaussianBump,
    GaussianRing,
    HomogeneousPPP,
    InhomogeneousPPP,
    MaternCluster,
    MaternHardCoreII,
    PointPattern,
    ThomasCluster,
    Window,
    _matern_parents,
    matern_parent_intensity,
    matern_retained_intensity,
    mean_intensity,
    sample,
    sample_cluster,
    sample_inhomogeneous_ppp,
    sample_matern_hardcore,
    sample_ppp,
    superpose,
    thin,
)


def counts(sampler, reps):
    return np.array([len(sampler()) for _ in range(reps)], dtype=float)


def assert_same_mean(a, b, sigmas=4.0):
    se = math.sqrt(a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    assert abs(a.mean() - b.mean()) < sigmas * se


def test_window_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        Window(x_min=1, x_max=0, y_min=0, y_max=1)


def test_window_contains_is_closed(square10):
    pts = np.array([[5.0, 5.0], [-5.0, 0.0], [5.0001, 0.0]])
    assert square10.contains(pts).tolist() == [True, True, False]


def test_ppp_zero_intensity_is_empty(rng, square10):
    assert len(sample_ppp(0.0, square10, rng)) == 0


def test_ppp_negative_intensity_rejected(rng, square10):
    with pytest.raises(ParameterDomainError):
        sample_ppp(-0.1, square10, rng)


def test_ppp_counts_are_poisson(rng, square10):
    n = counts(lambda: sample_ppp(1.0, square10, rng), 10_000)
    assert abs(n.mean() - 100.0) < 0.5
    assert abs(n.var(ddof=1) / n.mean() - 1.0) < 0.06


def test_ppp_points_inside_window(rng, square10):
    pattern = sample_ppp(2.0, square10, rng)
    assert square10.contains(pattern.points).all()


def test_ppp_is_deterministic_per_seed():
    window = Window.centered(10.0)
    a = sample_ppp(0.5, window, np.random.default_rng(7))
    b = sample_ppp(0.5, window, np.random.default_rng(7))
    assert np.array_equal(a.points, b.points)


def test_constant_family_matches_ppp(rng, square10):
    spec = InhomogeneousPPP(family=ConstantIntensity(lambda0=2.0))
    inhomogeneous = counts(lambda: sample_inhomogeneous_ppp(spec, square10, rng), 4_000)
    homogeneous = counts(lambda: sample_ppp(2.0, square10, rng), 4_000)
    assert_same_mean(inhomogeneous, homogeneous)


def test_gaussian_bump_mean_count(rng, square10):
    spec = InhomogeneousPPP(family=GaussianBump(lambda0=5.0, center=(0.0, 0.0), width=1.0))
    expected = mean_intensity(spec, square10) * square10.area
    assert expected == pytest.approx(5.0 * 2.0 * math.pi, rel=1e-4)
    n = counts(lambda: sample_inhomogeneous_ppp(spec, square10, rng), 2_000)
    assert abs(n.mean() - expected) < 4.0 * n.std(ddof=1) / math.sqrt(len(n))


def test_gaussian_ring_peaks_at_ring_radius(rng, square10):
    spec = InhomogeneousPPP(family=GaussianRing(lambda0=5.0, ring_radius=3.0, width=0.5))
    radii = np.concatenate([sample(spec, square10, rng).distances() for _ in range(200)])
    edges = np.arange(0.25, 5.0, 0.5)
    hist, _ = np.histogram(radii, bins=edges)
    peak = int(np.argmax(hist))
    assert edges[peak] <= 3.0 < edges[peak + 1]


def test_unbounded_family_rejected(rng, square10):
    spec = InhomogeneousPPP(family=ConstantIntensity(lambda0=float("inf")))
    with pytest.raises(ParameterDomainError):
        sample_inhomogeneous_ppp(spec, square10, rng)


def test_ring_supremum_when_ring_leaves_window():
    window = Window.centered(1.0)
    ring = GaussianRing(lambda0=4.0, ring_radius=3.0, width=0.5)
    corner = math.sqrt(2.0)
    assert ring.supremum(window) == pytest.approx(4.0 * math.exp(-0.5 * ((corner - 3.0) / 0.5) ** 2))


def test_matern_zero_distance_keeps_every_parent(square10):
    spec = MaternHardCoreII(lambda_parent=1.0, r_min=0.0)
    hardcore = sample_matern_hardcore(spec, square10, np.random.default_rng(11))
    poisson = sample_ppp(1.0, square10, np.random.default_rng(11))
    assert np.array_equal(hardcore.points, poisson.points)


def test_matern_retained_intensity_and_hard_core(rng, square10):
    spec = MaternHardCoreII(lambda_parent=1.0, r_min=0.5)
    expected = matern_retained_intensity(1.0, 0.5)
    assert expected == pytest.approx(0.6927, abs=1e-4)
    total = 0
    for _ in range(1_000):
        pattern = sample_matern_hardcore(spec, square10, rng)
        if len(pattern) > 1:
            assert pdist(pattern.points).min() >= 0.5
        total += len(pattern)
    assert total / (1_000 * square10.area) == pytest.approx(expected, rel=0.02)


def test_matern_survivors_are_parents(square10):
    spec = MaternHardCoreII(lambda_parent=1.5, r_min=0.7)
    parents, _ = _matern_parents(spec, square10, np.random.default_rng(3))
    pattern = sample_matern_hardcore(spec, square10, np.random.default_rng(3))
    dist, _ = cKDTree(parents).query(pattern.points)
    assert np.all(dist == 0.0)


def test_matern_anchor_is_kept_clear(rng):
    window = Window.centered(6.0)
    spec = MaternHardCoreII(lambda_parent=0.5, r_min=1.5)
    for _ in range(100):
        pattern = sample(spec, window, rng, anchor=(0.0, 0.0))
        assert np.all(pattern.distances() >= 1.5)


def test_matern_parent_intensity_inverts_retention():
    parent = matern_parent_intensity(0.1, 1.5)
    assert matern_retained_intensity(parent, 1.5) == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(ParameterDomainError):
        matern_parent_intensity(1.0 / (math.pi * 1.5**2), 1.5)


def test_cluster_without_daughters_is_empty(rng, square10):
    assert len(sample_cluster(MaternCluster(lambda_parent=1.0, mean_daughters=0.0, cluster_radius=1.0), square10, rng)) == 0
    assert len(sample_cluster(ThomasCluster(lambda_parent=1.0, mean_daughters=0.0, sigma=1.0), square10, rng)) == 0


def test_thomas_collapsing_scatter_sits_on_parents(square10):
    spec = ThomasCluster(lambda_parent=0.5, mean_daughters=3.0, sigma=1e-9)
    pattern = sample_cluster(spec, square10, np.random.default_rng(5))
    parents = sample_ppp(0.5, square10.dilate(4e-9), np.random.default_rng(5)).points
    assert len(pattern) > 0
    dist, _ = cKDTree(parents).query(pattern.points)
    assert dist.max() < 1e-6


def test_matern_cluster_mean_count(rng):
    window = Window.centered(10.0)
    spec = MaternCluster(lambda_parent=0.1, mean_daughters=5.0, cluster_radius=1.0)
    n = counts(lambda: sample_cluster(spec, window, rng), 2_000)
    assert abs(n.mean() - 200.0) < 4.0 * n.std(ddof=1) / math.sqrt(len(n))


def test_cluster_anchor_adds_siblings(rng):
    window = Window.centered(10.0)
    spec = MaternCluster(lambda_parent=0.0, mean_daughters=5.0, cluster_radius=1.0)
    n = []
    for _ in range(2_000):
        pattern = sample_cluster(spec, window, rng, anchor=(0.0, 0.0))
        assert np.all(pattern.distances() <= 2.0)
        n.append(len(pattern))
    n = np.array(n, dtype=float)
    assert abs(n.mean() - 5.0) < 4.0 * n.std(ddof=1) / math.sqrt(len(n))


def test_superpose_identity(rng, square10):
    pattern = sample_ppp(1.0, square10, rng)
    merged = superpose([pattern, PointPattern.empty(square10)])
    assert np.array_equal(merged.points, pattern.points)


def test_superpose_rejects_mismatched_windows(rng, square10):
    with pytest.raises(UsageError):
        superpose([sample_ppp(1.0, square10, rng), PointPattern.empty(Window.centered(6.0))])


def test_superposition_of_poisson_is_poisson(rng, square10):
    merged = counts(lambda: superpose([sample_ppp(0.3, square10, rng), sample_ppp(0.5, square10, rng)]), 4_000)
    single = counts(lambda: sample_ppp(0.8, square10, rng), 4_000)
    assert_same_mean(merged, single)
    assert abs(merged.var(ddof=1) / merged.mean() - 1.0) < 0.1


def test_superpose_keeps_power_tags(rng, square10):
    a = sample_ppp(1.0, square10, rng).with_power(2.0)
    b = sample_ppp(1.0, square10, rng)
    merged = superpose([a, b])
    assert merged.power.tolist() == [2.0] * len(a) + [1.0] * len(b)


def test_thin_extremes(rng, square10):
    pattern = sample_ppp(1.0, square10, rng)
    assert np.array_equal(thin(pattern, 1.0, rng).points, pattern.points)
    assert len(thin(pattern, 0.0, rng)) == 0


def test_thin_rejects_bad_probability(rng, square10):
    with pytest.raises(ParameterDomainError):
        thin(sample_ppp(1.0, square10, rng), 1.5, rng)


def test_thinned_poisson_is_poisson(rng, square10):
    thinned = counts(lambda: thin(sample_ppp(1.0, square10, rng), 0.3, rng), 4_000)
    direct = counts(lambda: sample_ppp(0.3, square10, rng), 4_000)
    assert_same_mean(thinned, direct)


def test_mean_intensity_of_cluster_and_ppp(square10):
    assert mean_intensity(HomogeneousPPP(intensity=0.4), square10) == 0.4
    assert mean_intensity(ThomasCluster(lambda_parent=0.2, mean_daughters=3.0, sigma=1.0), square10) == pytest.approx(0.6)


def test_sampler_is_deterministic_for_every_family(square10):
    specs = [
        HomogeneousPPP(intensity=1.0),
        InhomogeneousPPP(family=GaussianRing(lambda0=2.0, ring_radius=3.0, width=0.5)),
        MaternHardCoreII(lambda_parent=1.0, r_min=0.5),
        MaternCluster(lambda_parent=0.2, mean_daughters=4.0, cluster_radius=1.0),
        ThomasCluster(lambda_parent=0.2, mean_daughters=4.0, sigma=0.5),
    ]
    for spec in specs:
        a = sample(spec, square10, np.random.default_rng(99))
        b = sample(spec, square10, np.random.default_rng(99))
        assert np.array_equal(a.points, b.points)
