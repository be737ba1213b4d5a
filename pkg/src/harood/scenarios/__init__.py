from .specs import (
    CROSS_DATASET_MEMBERS,
    CROSS_PERSON_SPLITS,
    CROSS_TIME_DATASETS,
    SCENARIOS,
    LodoTask,
    ScenarioBundle,
    ScenarioSpec,
    default_spec,
    leave_one_out_tasks,
    with_window_length,
)
from .builders import (
    build_cross_dataset,
    build_cross_person,
    build_cross_position,
    build_cross_time,
    build_scenario,
    bundle_from_domains,
    quartile_sizes,
)
from .serialize import load_bundle, save_bundle

__all__ = [
    "CROSS_DATASET_MEMBERS",
    "CROSS_PERSON_SPLITS",
    "CROSS_TIME_DATASETS",
    "SCENARIOS",
    "LodoTask",
    "ScenarioBundle",
    "ScenarioSpec",
    "build_cross_dataset",
    "build_cross_person",
    "build_cross_position",
    "build_cross_time",
    "build_scenario",
    "bundle_from_domains",
    "default_spec",
    "leave_one_out_tasks",
    "load_bundle",
    "quartile_sizes",
    "save_bundle",
    "with_window_length",
]
