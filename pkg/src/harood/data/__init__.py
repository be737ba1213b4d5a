from .types import (
    DomainDataset,
    NormalizationSpec,
    RawRecording,
    SensorWindow,
    SyntheticShiftSpec,
    WindowingSpec,
)
from .windowing import sliding_window, window_count
from .normalize import downsample, minmax_normalize, normalize, zscore_normalize
from .synthetic import make_synthetic_suite
from .registry import DATASETS, DatasetInfo, dataset_info, load_dataset
from .cache import cached_subjects, ingest, read_subject_cache, write_subject_cache

__all__ = [
    "DATASETS",
    "DatasetInfo",
    "DomainDataset",
    "NormalizationSpec",
    "RawRecording",
    "SensorWindow",
    "SyntheticShiftSpec",
    "WindowingSpec",
    "cached_subjects",
    "dataset_info",
    "downsample",
    "ingest",
    "load_dataset",
    "make_synthetic_suite",
    "minmax_normalize",
    "normalize",
    "read_subject_cache",
    "sliding_window",
    "window_count",
    "write_subject_cache",
    "zscore_normalize",
]
