"""Normalization and decimation."""

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harood.data import (
    NormalizationSpec,
    SensorWindow,
    downsample,
    minmax_normalize,
    zscore_normalize,
)
from harood.data.normalize import downsample_indices
from harood.errors import ConfigError


def _window(values, label=0, domain=0):
    arr = np.asarray(values, dtype=np.float64).reshape(1, 1, -1)
    return SensorWindow(values=arr, label=label, domain_id=domain)


MM = NormalizationSpec(mode="min_max")
ZS = NormalizationSpec(mode="z_score")


def test_minmax_endpoints():
    out = minmax_normalize([_window([0.0, 5.0, 10.0])], MM)
    np.testing.assert_allclose(out[0].values.ravel(), [0.0, 0.5, 1.0])


def test_minmax_hand_case():
    out = minmax_normalize([_window([-1.0, 0.0, 3.0])], MM)
    np.testing.assert_allclose(out[0].values.ravel(), [0.0, 0.25, 1.0])


def test_minmax_constant_group_maps_to_zero_with_warning(caplog):
    with caplog.at_level(logging.WARNING):
        out = minmax_normalize([_window([2.0, 2.0, 2.0])], MM)
    np.testing.assert_array_equal(out[0].values, 0.0)
    assert any("constant" in rec.message for rec in caplog.records)


def test_minmax_statistics_are_global_over_all_samples():
    out = minmax_normalize([_window([0.0, 1.0]), _window([3.0, 4.0])], MM)
    np.testing.assert_allclose(out[0].values.ravel(), [0.0, 0.25])
    np.testing.assert_allclose(out[1].values.ravel(), [0.75, 1.0])


def test_minmax_per_channel_scope():
    spec = NormalizationSpec(mode="min_max", statistics_scope="per_channel")
    w = SensorWindow(values=np.array([[[0.0, 2.0]], [[10.0, 30.0]]]), label=0,
                     domain_id=0)
    out = minmax_normalize([w], spec)
    np.testing.assert_allclose(out[0].values[0, 0], [0.0, 1.0])
    np.testing.assert_allclose(out[0].values[1, 0], [0.0, 1.0])


def test_zscore_two_points():
    out = zscore_normalize([_window([0.0, 10.0])], ZS)
    np.testing.assert_allclose(out[0].values.ravel(), [-1.0, 1.0])


def test_zscore_idempotent_on_standardized():
    rng = np.random.default_rng(0)
    raw = rng.normal(size=64)
    standardized = (raw - raw.mean()) / raw.std()
    out = zscore_normalize([_window(standardized)], ZS)
    np.testing.assert_allclose(out[0].values.ravel(), standardized, atol=1e-6)


def test_zscore_constant_group(caplog):
    with caplog.at_level(logging.WARNING):
        out = zscore_normalize([_window([3.0, 3.0, 3.0])], ZS)
    np.testing.assert_array_equal(out[0].values, 0.0)
    assert any("zero-variance" in rec.message for rec in caplog.records)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=40).filter(
    lambda v: max(v) - min(v) > 1e-6))
def test_minmax_round_trip(values):
    w = _window(values)
    out = minmax_normalize([w], MM)[0]
    lo, hi = min(values), max(values)
    recovered = out.values * (hi - lo) + lo
    np.testing.assert_allclose(recovered.ravel(), values, rtol=1e-6, atol=1e-6)
    assert out.values.min() >= 0.0 and out.values.max() <= 1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50).filter(
    lambda v: np.std(v) > 1e-6))
def test_zscore_output_statistics(values):
    std_in = float(np.std(values))
    out = zscore_normalize([_window(values)], ZS)[0].values.ravel()
    assert abs(out.mean()) <= 1e-9 * (1.0 + std_in)
    assert abs(out.std() - 1.0) <= 1e-6


def test_downsample_200_to_50_index_formula():
    w = _window(np.arange(200.0))
    out = downsample(w, 50)
    expected = np.rint(np.arange(50) * 199 / 49).astype(int)
    np.testing.assert_array_equal(out.values.ravel(), expected.astype(float))


def test_downsample_identity():
    w = _window(np.arange(50.0))
    assert downsample(w, 50) is w


def test_downsample_uci_har_shape():
    w = SensorWindow(values=np.zeros((6, 1, 128)), label=0, domain_id=0)
    assert downsample(w, 50).shape == (6, 1, 50)


def test_downsample_errors():
    w = _window(np.arange(20.0))
    with pytest.raises(ConfigError):
        downsample(w, 0)
    with pytest.raises(ConfigError):
        downsample(w, 21)


@settings(max_examples=50, deadline=None)
@given(t=st.integers(2, 300), target=st.integers(2, 300))
def test_downsample_indices_strictly_increasing(t, target):
    if target > t:
        return
    idx = downsample_indices(t, target)
    assert len(idx) == target
    assert np.all(np.diff(idx) > 0)
    assert idx[0] == 0 and idx[-1] == t - 1
