"""Wall-clock inference timing."""

from __future__ import annotations

import time

from ..errors import ConfigError
from .metrics import predictions


def inference_timing(model, data, repetitions: int) -> float:
    """Total wall-clock seconds for `repetitions` full-dataset forward
    passes, after one excluded warmup pass."""
    if repetitions <= 0:
        raise ConfigError("repetitions must be >= 1")
    predictions(model, data)  # warmup
    start = time.perf_counter()
    for _ in range(repetitions):
        predictions(model, data)
    return time.perf_counter() - start
