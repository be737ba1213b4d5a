from .base import (
    Adam,
    Algorithm,
    AlgorithmConfig,
    AlgorithmInfo,
    DomainBatch,
    UpdateReport,
    algorithm_info,
    algorithm_names,
    canonical_name,
    create_algorithm,
    cross_entropy,
)
from . import erm_family, alignment, meta, har_methods  # noqa: F401  (registration)
from .alignment import coral_penalty, gaussian_mmd2
from .erm_family import pooled_risks

__all__ = [
    "Adam",
    "Algorithm",
    "AlgorithmConfig",
    "AlgorithmInfo",
    "DomainBatch",
    "UpdateReport",
    "algorithm_info",
    "algorithm_names",
    "canonical_name",
    "coral_penalty",
    "create_algorithm",
    "cross_entropy",
    "gaussian_mmd2",
    "pooled_risks",
]
