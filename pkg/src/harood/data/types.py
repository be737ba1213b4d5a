"""Core data model: windowed sensor samples grouped into labeled domains."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, ShapeError

NORMALIZATION_MODES = ("min_max", "z_score", "none")
NORMALIZATION_SCOPES = ("global_over_all_samples", "per_channel")


@dataclass
class SensorWindow:
    """One fixed-shape multichannel window: values (channels, 1, length)."""

    values: np.ndarray
    label: int
    domain_id: int
    timestamp_index: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or self.values.shape[1] != 1:
            raise ShapeError(f"window must be (channels, 1, length), got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("window contains non-finite values")
        if self.timestamp_index < 0:
            raise ConfigError("timestamp_index must be >= 0")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape


@dataclass
class DomainDataset:
    """All windows of one domain; every window shares shape and domain_id."""

    windows: list[SensorWindow]
    domain_id: int
    class_count: int
    _stacked: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        if not self.windows:
            raise ConfigError(f"domain {self.domain_id} has no windows")
        shape = self.windows[0].shape
        for w in self.windows:
            if w.shape != shape:
                raise ShapeError(f"mixed window shapes in domain {self.domain_id}")
            if w.domain_id != self.domain_id:
                raise ConfigError("window domain_id does not match dataset")
            if not 0 <= w.label < self.class_count:
                raise ConfigError(f"label {w.label} out of range for C={self.class_count}")

    def __len__(self) -> int:
        return len(self.windows)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.windows[0].shape

    def stack(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (X, y) with X (N, channels, 1, length) and y (N,) int64."""
        if self._stacked is None:
            x = np.stack([w.values for w in self.windows])
            y = np.array([w.label for w in self.windows], dtype=np.int64)
            self._stacked = (x, y)
        return self._stacked


@dataclass(frozen=True)
class WindowingSpec:
    window_length: int
    step: int
    channel_count: int

    def __post_init__(self):
        if self.step <= 0:
            raise ConfigError("windowing step must be > 0")
        if self.step > self.window_length:
            raise ConfigError("windowing step must be <= window_length")
        if self.window_length <= 0 or self.channel_count <= 0:
            raise ConfigError("window_length and channel_count must be >= 1")


@dataclass(frozen=True)
class NormalizationSpec:
    mode: str = "min_max"
    statistics_scope: str = "global_over_all_samples"

    def __post_init__(self):
        if self.mode not in NORMALIZATION_MODES:
            raise ConfigError(f"mode must be one of {NORMALIZATION_MODES}, got {self.mode!r}")
        if self.statistics_scope not in NORMALIZATION_SCOPES:
            raise ConfigError(
                f"statistics_scope must be one of {NORMALIZATION_SCOPES}, "
                f"got {self.statistics_scope!r}"
            )


@dataclass
class RawRecording:
    """A continuous (time x channels) stream from one subject doing one activity."""

    stream: np.ndarray
    subject_id: int
    activity_label: int
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.stream = np.asarray(self.stream, dtype=np.float64)
        if self.stream.ndim != 2:
            raise ShapeError(f"stream must be (time, channels), got {self.stream.shape}")


@dataclass(frozen=True)
class SyntheticShiftSpec:
    """Parameters of the synthetic multi-domain suite used for dataset-free tests."""

    domain_count: int = 3
    class_count: int = 4
    channels: int = 3
    length: int = 64
    amplitude_shift: Sequence[float] = ()
    phase_shift: Sequence[float] = ()
    channel_gain: Sequence[Sequence[float]] = ()
    noise_std: float = 0.1
    samples_per_class_per_domain: int = 20
    seed: int = 0

    def __post_init__(self):
        for name in ("domain_count", "class_count", "channels", "length",
                     "samples_per_class_per_domain"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0")
        for name in ("amplitude_shift", "phase_shift", "channel_gain"):
            vals = getattr(self, name)
            if vals and len(vals) != self.domain_count:
                raise ConfigError(f"{name} must have one entry per domain")
