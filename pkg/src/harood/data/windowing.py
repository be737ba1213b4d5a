"""Sliding-window segmentation of raw streams."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, WindowingError
from .types import SensorWindow, WindowingSpec


def window_count(stream_length: int, window_length: int, step: int) -> int:
    """Number of complete windows: floor((len - T) / step) + 1."""
    if stream_length < window_length:
        return 0
    return (stream_length - window_length) // step + 1


def sliding_window(
    stream: np.ndarray,
    spec: WindowingSpec,
    label: int,
    domain_id: int,
) -> list[SensorWindow]:
    """Cut a (time, channels) stream into (channels, 1, T) windows.

    Window k covers rows [k*step, k*step + T) and carries
    timestamp_index = k*step.
    """
    stream = np.asarray(stream, dtype=np.float64)
    if stream.ndim != 2:
        raise ConfigError(f"stream must be 2-D (time, channels), got {stream.shape}")
    if stream.shape[1] != spec.channel_count:
        raise ConfigError(
            f"stream has {stream.shape[1]} channels, spec expects {spec.channel_count}"
        )
    t = spec.window_length
    if stream.shape[0] < t:
        raise WindowingError(
            f"stream length {stream.shape[0]} shorter than window length {t}"
        )
    windows = []
    for k in range(window_count(stream.shape[0], t, spec.step)):
        start = k * spec.step
        chunk = stream[start : start + t].T.reshape(spec.channel_count, 1, t)
        windows.append(
            SensorWindow(
                values=chunk.copy(),
                label=label,
                domain_id=domain_id,
                timestamp_index=start,
            )
        )
    return windows
