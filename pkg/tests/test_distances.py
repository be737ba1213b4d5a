"""Distribution-distance analysis."""

import numpy as np
import pytest

from harood.analysis import (
    emd_distance,
    mmd_distance,
    pairwise_domain_distances,
    wasserstein1_distance,
)
from harood.data import NormalizationSpec, SyntheticShiftSpec, make_synthetic_suite
from harood.errors import AnalysisError
from harood.scenarios import bundle_from_domains


def test_self_distances_vanish():
    x = np.random.default_rng(0).normal(size=(40, 6))
    assert mmd_distance(x, x.copy()) <= 1e-9
    assert wasserstein1_distance(x, x.copy()) <= 1e-9
    assert emd_distance(x, x.copy()) <= 1e-9


def test_mmd_singletons_squared_form():
    v = mmd_distance(np.array([[0.0]]), np.array([[1.0]]), bandwidths=(1.0,))
    assert abs(v - (2.0 - 2.0 * np.exp(-1.0))) < 1e-12


def test_mmd_symmetry_and_nonnegativity():
    rng = np.random.default_rng(1)
    a, b = rng.normal(size=(30, 4)), rng.normal(size=(25, 4)) + 0.5
    assert abs(mmd_distance(a, b) - mmd_distance(b, a)) < 1e-12
    assert mmd_distance(a, b) >= 0.0


def test_w1_sorted_pairing_example():
    assert abs(wasserstein1_distance(np.array([[0.0], [1.0]]),
                                     np.array([[1.0], [2.0]])) - 1.0) < 1e-12


def test_w1_unequal_sizes_quantile_form():
    a = np.array([[0.0], [0.0], [0.0], [0.0]])
    b = np.array([[1.0]])
    assert abs(wasserstein1_distance(a, b) - 1.0) < 1e-12


def test_w1_shift_lipschitz():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(50, 3))
    base = wasserstein1_distance(a, a.copy())
    for c in (0.1, 0.5, 2.0):
        shifted = wasserstein1_distance(a, a + c)
        assert shifted <= base + c + 1e-9
        assert abs(shifted - c) < 1e-9  # pure shift moves every quantile by c


def test_w1_unnormalized_mode_sums_coordinates():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(20, 4))
    b = a + 1.0
    norm = wasserstein1_distance(a, b, normalized=True)
    total = wasserstein1_distance(a, b, normalized=False)
    assert abs(total - 4 * norm) < 1e-9


def test_emd_point_masses():
    # masses in the first and last of k+1 bins: distance = k * bin_width
    a = np.zeros((50, 1))
    b = np.full((50, 1), 10.0)
    bins = 5
    v = emd_distance(a, b, bins=bins)
    width = 10.0 / bins
    assert abs(v - (bins - 1) * width) < 1e-9


def test_emd_single_bin_is_zero():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=(30, 2)), rng.normal(size=(30, 2)) + 3
    assert emd_distance(a, b, bins=1) == 0.0


def test_emd_symmetric():
    rng = np.random.default_rng(5)
    a, b = rng.normal(size=(30, 2)), rng.normal(size=(40, 2)) + 1
    assert abs(emd_distance(a, b) - emd_distance(b, a)) < 1e-12


def test_empty_set_raises():
    with pytest.raises(AnalysisError):
        mmd_distance(np.empty((0, 3)), np.ones((2, 3)))


def test_w1_shifted_uniform_equals_shift():
    rng = np.random.default_rng(6)
    n = 4000
    shift = 0.3
    a = rng.uniform(0, 1, size=(n, 1))
    b = rng.uniform(0, 1, size=(n, 1)) + shift
    v = wasserstein1_distance(a, b)
    assert abs(v - shift) <= 2.0 / np.sqrt(n)


def _bundle(domains=2, identical=False):
    spec = SyntheticShiftSpec(
        domain_count=domains, class_count=2, channels=2, length=16,
        amplitude_shift=[0.0] * domains if identical else None or
        [0.1 * d for d in range(domains)],
        noise_std=0.0 if identical else 0.05,
        samples_per_class_per_domain=10, seed=1)
    return bundle_from_domains(make_synthetic_suite(spec), 2)


def test_pairwise_two_domains_one_pair():
    report = pairwise_domain_distances(_bundle(2), NormalizationSpec(mode="none"))
    assert list(report.per_pair) == ["0-1"]


def test_pairwise_five_domains_ten_pairs():
    report = pairwise_domain_distances(_bundle(5), NormalizationSpec(mode="none"),
                                       sample_cap=10)
    assert len(report.per_pair) == 10


def test_pairwise_identical_domains_near_zero():
    report = pairwise_domain_distances(_bundle(2, identical=True),
                                       NormalizationSpec(mode="none"))
    for key in ("mmd", "w1", "emd"):
        assert report.averages[key] <= 1e-9


def test_pairwise_sample_cap_and_seed():
    bundle = _bundle(2)
    r1 = pairwise_domain_distances(bundle, sample_cap=5, seed=3)
    r2 = pairwise_domain_distances(bundle, sample_cap=5, seed=3)
    assert r1.per_pair == r2.per_pair
    assert all(v == 5 for v in r1.sample_sizes.values())
