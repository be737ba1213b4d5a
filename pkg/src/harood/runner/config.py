"""Run configuration: YAML/JSON files, mapping input, key=value overrides."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..errors import ConfigError

TASK_ALIASES = {
    "cross_people": "cross_person",
    "cross_person": "cross_person",
    "cross_position": "cross_position",
    "cross_dataset": "cross_dataset",
    "cross_time": "cross_time",
}

PROTOCOL_ALIASES = {
    "valid": "training_domain_validation",
    "validation": "training_domain_validation",
    "training_domain_validation": "training_domain_validation",
    "oracle": "oracle",
}


@dataclass
class RunConfig:
    algorithm: str = "erm"
    batch_size: int = 32
    lr: float = 0.01
    test_envs: list[int] | None = None
    output: str = "output"
    max_epoch: int = 150
    task: str = "cross_person"
    dataset: str = "dsads"
    backbone: str = "cnn"
    capacity: str = "small"
    seed: int = 0
    protocol: str = "training_domain_validation"
    grid: str | list | None = None
    trials: int = 3
    window_length: int | None = None
    normalization: str = "min_max"
    validation_fraction: float = 0.2
    cache_dir: str | None = None
    bundle_dir: str | None = None
    workers: int | None = None
    dump_features: bool = False
    synthetic: dict = field(default_factory=dict)
    algorithm_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.max_epoch < 1:
            raise ConfigError("max_epoch must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        task = TASK_ALIASES.get(str(self.task).strip().lower())
        if task is None:
            raise ConfigError(
                f"unknown task {self.task!r}; known: {sorted(set(TASK_ALIASES))}"
            )
        self.task = task
        protocol = PROTOCOL_ALIASES.get(str(self.protocol).strip().lower())
        if protocol is None:
            raise ConfigError(
                f"unknown protocol {self.protocol!r}; "
                f"known: {sorted(set(PROTOCOL_ALIASES))}"
            )
        self.protocol = protocol
        if self.test_envs is not None:
            self.test_envs = [int(e) for e in self.test_envs]

    def to_dict(self) -> dict:
        return asdict(self)


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def _load_source(source) -> dict:
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        text = path.read_text()
        data = yaml.safe_load(text)  # YAML is a JSON superset
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a mapping")
        return data
    if isinstance(source, dict):
        return dict(source)
    raise ConfigError(f"config source must be a path or mapping, got {type(source)}")


def parse_config(source, overrides: dict | None = None, **kw_overrides) -> RunConfig:
    """Build a RunConfig with precedence overrides > source > defaults."""
    data = _load_source(source) if source is not None else {}
    merged = dict(data)
    for extra in (overrides or {}), kw_overrides:
        merged.update(extra)
    unknown = sorted(set(merged) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config key(s): {unknown}")
    return RunConfig(**merged)


def _parse_scalar(text: str):
    # YAML 1.1 reads "2e-3" as a string; accept plain numeric forms first
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return yaml.safe_load(text)


def parse_override_pairs(pairs: list[str]) -> dict:
    """Parse CLI --set key=value pairs; values use YAML scalar rules with
    plain int/float forms (e.g. 2e-3) recognized first."""
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        key, value = pair.split("=", 1)
        out[key.strip()] = _parse_scalar(value.strip())
    return out
