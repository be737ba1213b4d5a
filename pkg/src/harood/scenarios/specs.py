"""Scenario specifications: split tables, shapes, and task enumeration."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

from ..data.registry import dataset_info
from ..data.types import DomainDataset, NormalizationSpec, WindowingSpec
from ..errors import ConfigError, ProtocolError, SplitError

SCENARIOS = ("cross_person", "cross_position", "cross_dataset", "cross_time")

# Subject-index groups per dataset; one group per domain.
CROSS_PERSON_SPLITS: dict[str, list[list[int]]] = {
    "dsads": [[0, 1], [2, 3], [4, 5], [6, 7]],
    "usc_had": [[1, 11, 2, 0], [6, 3, 9, 5], [7, 13, 8, 10], [4, 12]],
    "uci_har": [list(range(0, 6)), list(range(6, 12)), list(range(12, 18)),
                list(range(18, 24)), list(range(24, 30))],
    "pamap2": [[3, 2, 8], [1, 5], [0, 7], [4, 6]],
    "emg": [list(range(0, 9)), list(range(9, 18)), list(range(18, 27)),
            list(range(27, 36))],
    "wesad": [[0, 1, 2, 3], [4, 5, 6, 7], [8, 9, 10, 11], [12, 13, 14]],
}

CROSS_TIME_DATASETS = ("pamap2", "emg", "wesad")
CROSS_DATASET_MEMBERS = ("dsads", "usc_had", "uci_har", "pamap2")
CROSS_DATASET_LENGTH = 50

# Cross-dataset channel selection: accelerometer + gyroscope at the
# trunk/waist-equivalent position (column indices into each dataset's layout).
CROSS_DATASET_CHANNELS: dict[str, list[int]] = {
    "dsads": [0, 1, 2, 3, 4, 5],        # torso acc xyz + gyro xyz
    "usc_had": [0, 1, 2, 3, 4, 5],      # hip acc xyz + gyro xyz
    "uci_har": [0, 1, 2, 3, 4, 5],      # waist total acc xyz + gyro xyz
    "pamap2": [9, 10, 11, 12, 13, 14],  # chest acc xyz + gyro xyz
}

# Shared activity remap, canonical order:
# walking, upstairs, downstairs, sitting, standing, lying -> 0..5
CROSS_DATASET_CLASS_MAP: dict[str, dict[int, int]] = {
    "dsads": {8: 0, 4: 1, 5: 2, 0: 3, 1: 4, 2: 5},
    "usc_had": {0: 0, 3: 1, 4: 2, 7: 3, 8: 4, 9: 5},
    "uci_har": {0: 0, 1: 1, 2: 2, 3: 3, 4: 4, 5: 5},
    "pamap2": {3: 0, 7: 1, 8: 2, 1: 3, 2: 4, 0: 5},
}
CROSS_DATASET_CLASSES = 6


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: str
    dataset: str | tuple[str, ...]
    split_table: tuple[tuple[int, ...], ...]
    expected_shape: tuple[int, int, int]
    class_count: int
    domain_count: int
    windowing: WindowingSpec
    normalization: NormalizationSpec = NormalizationSpec()

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        seen: set[int] = set()
        for group in self.split_table:
            for subject in group:
                if subject in seen:
                    raise SplitError(f"subject {subject} appears in two split groups")
                seen.add(subject)
        if self.split_table and self.domain_count != len(self.split_table):
            raise ConfigError("domain_count must equal the number of split groups")


@dataclass
class ScenarioBundle:
    domains: list[DomainDataset]
    class_count: int
    spec: ScenarioSpec
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.domains) != self.spec.domain_count:
            raise ConfigError(
                f"expected {self.spec.domain_count} domains, got {len(self.domains)}"
            )
        shape = self.domains[0].shape
        for i, dom in enumerate(self.domains):
            if dom.domain_id != i:
                raise ConfigError("domain ids must be 0..domain_count-1 in order")
            if dom.shape != shape:
                raise ConfigError("all domains must share one window shape")
            if dom.class_count != self.class_count:
                raise ConfigError("all domains must share the class count")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.domains[0].shape

    @property
    def domain_count(self) -> int:
        return len(self.domains)


@dataclass(frozen=True)
class LodoTask:
    """One leave-one-domain-out task: train on sources, test on target."""

    source_domains: tuple[int, ...]
    target_domain: int

    def __post_init__(self):
        if self.target_domain in self.source_domains:
            raise ProtocolError("target domain must not appear among sources")

    @property
    def task_id(self) -> str:
        return f"t{self.target_domain}"


def leave_one_out_tasks(bundle: ScenarioBundle) -> list[LodoTask]:
    """Enumerate one task per domain, holding that domain out."""
    n = bundle.domain_count
    if n < 2:
        raise ProtocolError("leave-one-domain-out needs at least 2 domains")
    return [
        LodoTask(source_domains=tuple(s for s in range(n) if s != t), target_domain=t)
        for t in range(n)
    ]


def default_windowing(dataset: str, window_length: int | None = None) -> WindowingSpec:
    info = dataset_info(dataset)
    if window_length is None:
        return WindowingSpec(info.default_window, info.default_step, info.channels)
    return WindowingSpec(window_length, max(1, window_length // 2), info.channels)


def default_spec(
    scenario: str,
    dataset: str | Sequence[str] | None = None,
    window_length: int | None = None,
    normalization: NormalizationSpec = NormalizationSpec(),
) -> ScenarioSpec:
    """The paper-default spec for a scenario (and dataset where applicable)."""
    if scenario == "cross_person":
        if dataset is None:
            raise ConfigError("cross_person needs a dataset name")
        info = dataset_info(dataset)
        win = default_windowing(info.name, window_length)
        groups = CROSS_PERSON_SPLITS[info.name]
        return ScenarioSpec(
            scenario="cross_person", dataset=info.name,
            split_table=tuple(tuple(g) for g in groups),
            expected_shape=(info.channels, 1, win.window_length),
            class_count=info.classes, domain_count=len(groups), windowing=win,
            normalization=normalization,
        )
    if scenario == "cross_position":
        win = default_windowing("dsads", window_length)
        return ScenarioSpec(
            scenario="cross_position", dataset="dsads", split_table=(),
            expected_shape=(9, 1, win.window_length), class_count=19,
            domain_count=5, windowing=win, normalization=normalization,
        )
    if scenario == "cross_dataset":
        win = WindowingSpec(CROSS_DATASET_LENGTH, CROSS_DATASET_LENGTH, 6)
        return ScenarioSpec(
            scenario="cross_dataset", dataset=CROSS_DATASET_MEMBERS, split_table=(),
            expected_shape=(6, 1, CROSS_DATASET_LENGTH),
            class_count=CROSS_DATASET_CLASSES, domain_count=4, windowing=win,
            normalization=normalization,
        )
    if scenario == "cross_time":
        if dataset is None:
            raise ConfigError("cross_time needs a dataset name")
        info = dataset_info(dataset)
        if info.name not in CROSS_TIME_DATASETS:
            raise ConfigError(f"cross_time supports {CROSS_TIME_DATASETS}, got {dataset!r}")
        win = default_windowing(info.name, window_length)
        return ScenarioSpec(
            scenario="cross_time", dataset=info.name, split_table=(),
            expected_shape=(info.channels, 1, win.window_length),
            class_count=info.classes, domain_count=4, windowing=win,
            normalization=normalization,
        )
    raise ConfigError(f"unknown scenario {scenario!r}")


def with_window_length(spec: ScenarioSpec, window_length: int) -> ScenarioSpec:
    win = WindowingSpec(window_length, max(1, window_length // 2),
                        spec.windowing.channel_count)
    shape = (spec.expected_shape[0], 1, window_length)
    return replace(spec, windowing=win, expected_shape=shape)
