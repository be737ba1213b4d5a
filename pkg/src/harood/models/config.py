"""Backbone configuration and derived dimensions."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ConfigError, ShapeError

FAMILIES = ("cnn", "transformer")
CAPACITIES = ("small", "mid", "large")
CAPACITY_SCALE = {"small": 1, "mid": 2, "large": 4}

_BASE_CNN_WIDTHS = (16, 32)
_BASE_D_MODEL = 16


def default_kernel(window_length: int) -> int:
    """Wider kernel for short windows, narrower for long ones."""
    return 9 if window_length <= 128 else 6


@dataclass(frozen=True)
class BackboneConfig:
    family: str
    input_shape: tuple[int, int, int]
    capacity: str = "small"
    cnn_widths: tuple[int, int] | None = None
    kernel_size: int | None = None
    d_model: int | None = None
    heads: int = 4
    encoder_blocks: int = 2
    use_positional_encoding: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.capacity not in CAPACITIES:
            raise ConfigError(f"capacity must be one of {CAPACITIES}")
        if len(self.input_shape) != 3 or self.input_shape[1] != 1:
            raise ConfigError(f"input_shape must be (channels, 1, length), "
                              f"got {self.input_shape}")
        if self.family == "transformer" and self.model_dim % self.heads != 0:
            raise ConfigError(
                f"d_model {self.model_dim} must be divisible by heads {self.heads}"
            )

    @property
    def channels(self) -> int:
        return self.input_shape[0]

    @property
    def window_length(self) -> int:
        return self.input_shape[2]

    @property
    def widths(self) -> tuple[int, int]:
        if self.cnn_widths is not None:
            return self.cnn_widths
        scale = CAPACITY_SCALE[self.capacity]
        return (_BASE_CNN_WIDTHS[0] * scale, _BASE_CNN_WIDTHS[1] * scale)

    @property
    def kernel(self) -> int:
        return self.kernel_size or default_kernel(self.window_length)

    @property
    def model_dim(self) -> int:
        return self.d_model or _BASE_D_MODEL * CAPACITY_SCALE[self.capacity]

    @property
    def feature_dim(self) -> int:
        if self.family == "cnn":
            t = self.window_length
            if t < 4:
                raise ShapeError(f"window length {t} too short for two pooling stages")
            return self.widths[1] * (t // 2 // 2)
        return self.window_length * self.model_dim

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "input_shape": list(self.input_shape),
            "capacity": self.capacity,
            "cnn_widths": list(self.cnn_widths) if self.cnn_widths else None,
            "kernel_size": self.kernel_size,
            "d_model": self.d_model,
            "heads": self.heads,
            "encoder_blocks": self.encoder_blocks,
            "use_positional_encoding": self.use_positional_encoding,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BackboneConfig":
        data = dict(data)
        data["input_shape"] = tuple(data["input_shape"])
        if data.get("cnn_widths"):
            data["cnn_widths"] = tuple(data["cnn_widths"])
        return cls(**data)
