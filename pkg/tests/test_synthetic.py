"""Synthetic multi-domain suite."""

import numpy as np
import pytest

from harood.data import SyntheticShiftSpec, make_synthetic_suite
from harood.errors import ConfigError


def test_counts_and_classes():
    spec = SyntheticShiftSpec(domain_count=3, class_count=4, channels=2, length=32,
                              samples_per_class_per_domain=5, seed=0)
    domains = make_synthetic_suite(spec)
    assert len(domains) == 3
    for d, dom in enumerate(domains):
        assert dom.domain_id == d
        assert len(dom) == 20
        labels = {w.label for w in dom.windows}
        assert labels == {0, 1, 2, 3}
        assert dom.shape == (2, 1, 32)


def test_same_seed_bit_identical():
    spec = SyntheticShiftSpec(domain_count=2, class_count=3, channels=2, length=16,
                              noise_std=0.2, samples_per_class_per_domain=4, seed=9)
    a = make_synthetic_suite(spec)
    b = make_synthetic_suite(spec)
    for da, db in zip(a, b):
        xa, ya = da.stack()
        xb, yb = db.stack()
        assert xa.tobytes() == xb.tobytes()
        assert (ya == yb).all()


def test_zero_shift_domains_identically_distributed():
    spec = SyntheticShiftSpec(domain_count=3, class_count=2, channels=2, length=64,
                              noise_std=0.05, samples_per_class_per_domain=50, seed=1)
    domains = make_synthetic_suite(spec)
    n = 100 * 2 * 64
    means = [dom.stack()[0].mean() for dom in domains]
    tol = 3 * spec.noise_std / np.sqrt(n)
    for m in means[1:]:
        assert abs(m - means[0]) <= tol


def test_zero_noise_zero_shift_domains_identical():
    spec = SyntheticShiftSpec(domain_count=2, class_count=2, channels=1, length=16,
                              noise_std=0.0, samples_per_class_per_domain=3, seed=2)
    a, b = make_synthetic_suite(spec)
    np.testing.assert_array_equal(a.stack()[0], b.stack()[0])


def test_invalid_spec():
    with pytest.raises(ConfigError):
        SyntheticShiftSpec(domain_count=0)
    with pytest.raises(ConfigError):
        SyntheticShiftSpec(noise_std=-1.0)
    with pytest.raises(ConfigError):
        SyntheticShiftSpec(domain_count=2, amplitude_shift=(0.1,))
