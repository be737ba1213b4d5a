"""Synthetic multi-domain suite: class-specific sinusoids under domain shifts.

Class k has base frequency (k + 1) cycles per window. A domain perturbs the
signal with an amplitude factor, a phase offset, per-channel gains, and
additive Gaussian noise. Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import numpy as np

from .types import DomainDataset, SensorWindow, SyntheticShiftSpec


def _per_domain(values, domain_count, default):
    if len(values) == 0:
        return [default] * domain_count
    return list(values)


def make_synthetic_suite(spec: SyntheticShiftSpec) -> list[DomainDataset]:
    rng = np.random.default_rng(spec.seed)
    amp = _per_domain(spec.amplitude_shift, spec.domain_count, 0.0)
    phase = _per_domain(spec.phase_shift, spec.domain_count, 0.0)
    gains = _per_domain(spec.channel_gain, spec.domain_count, [1.0] * spec.channels)

    t = np.arange(spec.length) / spec.length
    # fixed per-channel phase offsets so channels are not identical copies
    channel_phase = np.linspace(0.0, np.pi / 2, spec.channels)[:, None]

    domains = []
    for d in range(spec.domain_count):
        gain = np.asarray(gains[d], dtype=np.float64)[:, None]
        windows = []
        for c in range(spec.class_count):
            freq = c + 1
            base = np.sin(2 * np.pi * freq * t[None, :] + phase[d] + channel_phase)
            signal = (1.0 + amp[d]) * gain * base  # (channels, length)
            for s in range(spec.samples_per_class_per_domain):
                noise = rng.normal(0.0, spec.noise_std, size=signal.shape) \
                    if spec.noise_std > 0 else 0.0
                values = (signal + noise).reshape(spec.channels, 1, spec.length)
                windows.append(
                    SensorWindow(values=values, label=c, domain_id=d,
                                 timestamp_index=s * spec.length)
                )
        domains.append(
            DomainDataset(windows=windows, domain_id=d, class_count=spec.class_count)
        )
    return domains
