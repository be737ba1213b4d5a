"""Rank-sum aggregation across tasks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from ..errors import ConfigError


@dataclass
class RankTable:
    method_names: list[str]
    accuracies: np.ndarray  # (methods, tasks)
    ranks: np.ndarray       # (methods, tasks), fractional ties
    rank_sums: np.ndarray   # (methods,)
    order: list[int]        # method indices sorted by ascending rank sum

    def ordered_names(self) -> list[str]:
        return [self.method_names[i] for i in self.order]


def aggregate_ranks(accuracies, method_names=None) -> RankTable:
    """Rank methods per task (1 = best accuracy, average ranks on ties),
    sum ranks over tasks, order ascending by the sum."""
    acc = np.asarray(accuracies, dtype=np.float64)
    if acc.ndim != 2 or acc.size == 0:
        raise ConfigError(f"accuracy matrix must be 2-D (methods x tasks), "
                          f"got shape {acc.shape}")
    methods, tasks = acc.shape
    if method_names is None:
        method_names = [f"m{i}" for i in range(methods)]
    if len(method_names) != methods:
        raise ConfigError("method_names length must match the matrix rows")
    ranks = np.empty_like(acc)
    for t in range(tasks):
        ranks[:, t] = rankdata(-acc[:, t], method="average")
    rank_sums = ranks.sum(axis=1)
    order = list(np.lexsort((np.arange(methods), rank_sums)))
    return RankTable(method_names=list(method_names), accuracies=acc,
                     ranks=ranks, rank_sums=rank_sums, order=order)
