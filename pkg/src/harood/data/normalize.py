"""Sample normalization and length resampling."""

from __future__ import annotations

import logging

import numpy as np

from ..errors import ConfigError
from .types import NormalizationSpec, SensorWindow

logger = logging.getLogger(__name__)


def _group_axes(scope: str):
    # Statistics over everything, or per channel across all windows.
    # Stacked windows have shape (N, channels, 1, T).
    if scope == "global_over_all_samples":
        return None
    return (0, 2, 3)


def _replace_values(windows: list[SensorWindow], values: np.ndarray) -> list[SensorWindow]:
    return [
        SensorWindow(values=v, label=w.label, domain_id=w.domain_id,
                     timestamp_index=w.timestamp_index)
        for w, v in zip(windows, values)
    ]


def minmax_normalize(
    samples: list[SensorWindow], spec: NormalizationSpec
) -> list[SensorWindow]:
    """Map values to [0, 1] via (x - min) / (max - min) over the configured scope.

    Degenerate groups (max == min) map to 0.0 with a logged warning so that
    flatlined channels never abort a run.
    """
    if not samples:
        return []
    stacked = np.stack([w.values for w in samples])
    axes = _group_axes(spec.statistics_scope)
    lo = stacked.min(axis=axes, keepdims=True)
    hi = stacked.max(axis=axes, keepdims=True)
    span = hi - lo
    degenerate = span == 0
    if np.any(degenerate):
        logger.warning(
            "min-max normalization: %d constant group(s) mapped to 0.0",
            int(np.count_nonzero(degenerate)),
        )
    safe = np.where(degenerate, 1.0, span)
    out = np.where(degenerate, 0.0, (stacked - lo) / safe)
    return _replace_values(samples, out)


def zscore_normalize(
    samples: list[SensorWindow], spec: NormalizationSpec
) -> list[SensorWindow]:
    """Standardize to zero mean, unit (population) std over the configured scope.

    Zero-variance groups map to 0.0 with a logged warning.
    """
    if not samples:
        return []
    stacked = np.stack([w.values for w in samples])
    axes = _group_axes(spec.statistics_scope)
    mean = stacked.mean(axis=axes, keepdims=True)
    std = stacked.std(axis=axes, keepdims=True)
    degenerate = std == 0
    if np.any(degenerate):
        logger.warning(
            "z-score normalization: %d zero-variance group(s) mapped to 0.0",
            int(np.count_nonzero(degenerate)),
        )
    safe = np.where(degenerate, 1.0, std)
    out = np.where(degenerate, 0.0, (stacked - mean) / safe)
    return _replace_values(samples, out)


def normalize(samples: list[SensorWindow], spec: NormalizationSpec) -> list[SensorWindow]:
    """Apply the normalization named by the spec (or none)."""
    if spec.mode == "min_max":
        return minmax_normalize(samples, spec)
    if spec.mode == "z_score":
        return zscore_normalize(samples, spec)
    return samples


def downsample_indices(length: int, target_length: int) -> np.ndarray:
    """Uniform-stride index selection: round(k * (T-1) / (L-1)) for k in [0, L)."""
    if target_length == 1:
        return np.zeros(1, dtype=np.int64)
    pos = np.arange(target_length) * (length - 1) / (target_length - 1)
    return np.rint(pos).astype(np.int64)


def downsample(window: SensorWindow, target_length: int) -> SensorWindow:
    """Shorten a window to target_length by nearest-index decimation."""
    t = window.shape[2]
    if target_length <= 0 or target_length > t:
        raise ConfigError(
            f"target_length must be in [1, {t}], got {target_length}"
        )
    if target_length == t:
        return window
    idx = downsample_indices(t, target_length)
    return SensorWindow(
        values=window.values[:, :, idx].copy(),
        label=window.label,
        domain_id=window.domain_id,
        timestamp_index=window.timestamp_index,
    )
