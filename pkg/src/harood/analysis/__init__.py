from .distances import (
    DEFAULT_BANDWIDTHS,
    DistanceReport,
    emd_distance,
    mmd_distance,
    pairwise_domain_distances,
    wasserstein1_distance,
)

__all__ = [
    "DEFAULT_BANDWIDTHS",
    "DistanceReport",
    "emd_distance",
    "mmd_distance",
    "pairwise_domain_distances",
    "wasserstein1_distance",
]
