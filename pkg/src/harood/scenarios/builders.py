"""Builders that turn cached recordings into multi-domain scenario bundles."""

from __future__ import annotations

import logging

import numpy as np

from ..data.cache import read_subject_cache
from ..data.normalize import downsample, normalize
from ..data.registry import dataset_info
from ..data.types import DomainDataset, NormalizationSpec, SensorWindow
from ..data.windowing import sliding_window
from ..errors import IngestionError, ShapeError, SplitError
from .specs import (
    CROSS_DATASET_CHANNELS,
    CROSS_DATASET_CLASS_MAP,
    CROSS_DATASET_CLASSES,
    CROSS_DATASET_LENGTH,
    CROSS_DATASET_MEMBERS,
    ScenarioBundle,
    ScenarioSpec,
    default_spec,
    default_windowing,
)

logger = logging.getLogger(__name__)


def _subject_windows(cache_dir, dataset, subject, windowing, domain_id,
                     channel_columns=None):
    recordings = read_subject_cache(cache_dir, dataset, subject)
    windows = []
    for rec in recordings:
        stream = rec.stream if channel_columns is None else rec.stream[:, channel_columns]
        if stream.shape[0] < windowing.window_length:
            logger.debug("skipping %s recording of %d rows (< window %d)",
                         dataset, stream.shape[0], windowing.window_length)
            continue
        windows.extend(sliding_window(stream, windowing, rec.activity_label, domain_id))
    return windows


def _group_by_domain(windows, domain_count, class_count) -> list[DomainDataset]:
    buckets: list[list[SensorWindow]] = [[] for _ in range(domain_count)]
    for w in windows:
        buckets[w.domain_id].append(w)
    return [
        DomainDataset(windows=bucket, domain_id=d, class_count=class_count)
        for d, bucket in enumerate(buckets)
    ]


def _check_shape(windows, spec: ScenarioSpec):
    if windows and windows[0].shape != spec.expected_shape:
        raise ShapeError(
            f"built windows have shape {windows[0].shape}, spec expects "
            f"{spec.expected_shape}"
        )


def build_cross_person(dataset: str, cache_dir, spec: ScenarioSpec | None = None,
                       ) -> ScenarioBundle:
    """Group subjects into the default (or given) split table; one domain per group."""
    if spec is None:
        spec = default_spec("cross_person", dataset)
    info = dataset_info(dataset)
    windows = []
    for domain_id, group in enumerate(spec.split_table):
        for subject in group:
            windows.extend(_subject_windows(cache_dir, info.name, subject,
                                            spec.windowing, domain_id))
    windows = normalize(windows, spec.normalization)
    _check_shape(windows, spec)
    domains = _group_by_domain(windows, spec.domain_count, spec.class_count)
    return ScenarioBundle(domains=domains, class_count=spec.class_count, spec=spec,
                          metadata={"dataset": info.name})


def build_cross_position(cache_dir, spec: ScenarioSpec | None = None) -> ScenarioBundle:
    """Split each 45-channel window into five 9-channel position blocks.

    Position p keeps the contiguous channel slice [9p, 9p+9); the position
    index becomes the domain id.
    """
    if spec is None:
        spec = default_spec("cross_position")
    info = dataset_info("dsads")
    full_windowing = default_windowing("dsads", spec.windowing.window_length)
    windows = []
    for subject in range(info.subjects):
        windows.extend(_subject_windows(cache_dir, "dsads", subject,
                                        full_windowing, domain_id=0))
    windows = normalize(windows, spec.normalization)
    split: list[SensorWindow] = []
    for w in windows:
        if w.shape[0] != 45:
            raise ShapeError(f"cross-position expects 45-channel windows, got {w.shape}")
        for position in range(5):
            split.append(SensorWindow(
                values=w.values[9 * position : 9 * position + 9].copy(),
                label=w.label, domain_id=position, timestamp_index=w.timestamp_index,
            ))
    _check_shape(split, spec)
    domains = _group_by_domain(split, spec.domain_count, spec.class_count)
    return ScenarioBundle(domains=domains, class_count=spec.class_count, spec=spec,
                          metadata={"dataset": "dsads", "positions": 5})


def build_cross_dataset(cache_dir, spec: ScenarioSpec | None = None) -> ScenarioBundle:
    """Treat four datasets as four domains over the six shared activities.

    Per dataset: keep the configured accelerometer+gyroscope columns, remap
    the shared labels onto 0..5, downsample every window to the common
    length, and normalize within the dataset.
    """
    if spec is None:
        spec = default_spec("cross_dataset")
    from ..data.types import WindowingSpec

    all_windows = []
    for domain_id, member in enumerate(CROSS_DATASET_MEMBERS):
        info = dataset_info(member)
        columns = CROSS_DATASET_CHANNELS[member]
        base = default_windowing(member)
        windowing = WindowingSpec(base.window_length, base.step, len(columns))
        class_map = CROSS_DATASET_CLASS_MAP[member]
        member_windows = []
        for subject in range(info.subjects):
            try:
                raw = _subject_windows(cache_dir, member, subject, windowing,
                                       domain_id, channel_columns=columns)
            except IngestionError:
                raise
            for w in raw:
                if w.label not in class_map:
                    continue
                w.label = class_map[w.label]
                member_windows.append(downsample(w, CROSS_DATASET_LENGTH))
        present = {w.label for w in member_windows}
        missing = sorted(set(range(CROSS_DATASET_CLASSES)) - present)
        if missing:
            raise SplitError(
                f"dataset {member} is missing shared class(es) {missing} "
                f"after remapping"
            )
        all_windows.extend(normalize(member_windows, spec.normalization))
    _check_shape(all_windows, spec)
    domains = _group_by_domain(all_windows, spec.domain_count, spec.class_count)
    return ScenarioBundle(
        domains=domains, class_count=spec.class_count, spec=spec,
        metadata={"datasets": list(CROSS_DATASET_MEMBERS),
                  "channels": CROSS_DATASET_CHANNELS,
                  "class_map": {k: dict(v) for k, v in CROSS_DATASET_CLASS_MAP.items()},
                  "normalized": "per dataset"},
    )


def quartile_sizes(n: int, parts: int = 4) -> list[int]:
    """Split n into `parts` chronological chunks; remainders go earliest."""
    base, extra = divmod(n, parts)
    return [base + (1 if q < extra else 0) for q in range(parts)]


def build_cross_time(dataset: str, cache_dir, spec: ScenarioSpec | None = None,
                     ) -> ScenarioBundle:
    """Partition each recording's windows into four chronological quartiles.

    Quartile q across all recordings forms domain q, preserving subject
    balance over the time domains.
    """
    if spec is None:
        spec = default_spec("cross_time", dataset)
    info = dataset_info(dataset)
    windows = []
    for subject in range(info.subjects):
        recordings = read_subject_cache(cache_dir, info.name, subject)
        for rec in recordings:
            if rec.stream.shape[0] < spec.windowing.window_length:
                continue
            rec_windows = sliding_window(rec.stream, spec.windowing,
                                         rec.activity_label, domain_id=0)
            rec_windows.sort(key=lambda w: w.timestamp_index)
            if len(rec_windows) < 4:
                logger.warning(
                    "cross-time: recording with %d window(s) fills only the "
                    "earliest quartile(s)", len(rec_windows),
                )
            sizes = quartile_sizes(len(rec_windows))
            pos = 0
            for quartile, size in enumerate(sizes):
                for w in rec_windows[pos : pos + size]:
                    w.domain_id = quartile
                    windows.append(w)
                pos += size
    windows = normalize(windows, spec.normalization)
    _check_shape(windows, spec)
    domains = _group_by_domain(windows, spec.domain_count, spec.class_count)
    return ScenarioBundle(domains=domains, class_count=spec.class_count, spec=spec,
                          metadata={"dataset": info.name, "quartiles": 4})


def build_scenario(scenario: str, dataset, cache_dir,
                   spec: ScenarioSpec | None = None) -> ScenarioBundle:
    """Dispatch to the right builder by scenario name."""
    if scenario == "cross_person":
        return build_cross_person(dataset, cache_dir, spec)
    if scenario == "cross_position":
        return build_cross_position(cache_dir, spec)
    if scenario == "cross_dataset":
        return build_cross_dataset(cache_dir, spec)
    if scenario == "cross_time":
        return build_cross_time(dataset, cache_dir, spec)
    raise SplitError(f"unknown scenario {scenario!r}")


def bundle_from_domains(domains, class_count, scenario="cross_person",
                        dataset="synthetic",
                        normalization=NormalizationSpec(mode="none")) -> ScenarioBundle:
    """Wrap pre-built DomainDatasets (e.g. the synthetic suite) as a bundle."""
    shape = domains[0].shape
    from ..data.types import WindowingSpec

    spec = ScenarioSpec(
        scenario=scenario, dataset=dataset, split_table=(),
        expected_shape=shape, class_count=class_count, domain_count=len(domains),
        windowing=WindowingSpec(shape[2], shape[2], shape[0]),
        normalization=normalization,
    )
    return ScenarioBundle(domains=list(domains), class_count=class_count, spec=spec,
                          metadata={"dataset": dataset})
