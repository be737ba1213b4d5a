"""Train/validation splitting and the two model-selection protocols."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data.types import DomainDataset
from ..errors import ConfigError, EvalError
from .metrics import EvalSet

PROTOCOLS = ("training_domain_validation", "oracle")


@dataclass(frozen=True)
class SelectionProtocol:
    kind: str = "training_domain_validation"
    validation_fraction: float = 0.2

    def __post_init__(self):
        if self.kind not in PROTOCOLS:
            raise ConfigError(f"protocol must be one of {PROTOCOLS}, got {self.kind!r}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation_fraction must lie strictly in (0, 1)")


def split_train_valid(sources: list[DomainDataset], fraction: float, seed: int):
    """Deterministic split, stratified per (domain, class).

    Each (domain, class) group sends floor(fraction * n) windows to
    validation, so singleton classes stay in training. Returns the per-domain
    training sets and one pooled validation set.
    """
    rng = np.random.default_rng(seed)
    train_domains: list[DomainDataset] = []
    val_x, val_y = [], []
    for dom in sources:
        x, y = dom.stack()
        train_idx: list[int] = []
        for cls in np.unique(y):
            idx = np.flatnonzero(y == cls)
            idx = idx[rng.permutation(len(idx))]
            n_val = int(np.floor(fraction * len(idx)))
            if n_val > 0:
                val_x.append(x[idx[:n_val]])
                val_y.append(y[idx[:n_val]])
            train_idx.extend(idx[n_val:])
        train_idx = np.sort(np.asarray(train_idx, dtype=np.int64))
        train_domains.append(DomainDataset(
            windows=[dom.windows[i] for i in train_idx],
            domain_id=dom.domain_id, class_count=dom.class_count,
        ))
    if val_x:
        valid = EvalSet(x=np.concatenate(val_x), y=np.concatenate(val_y),
                        class_count=sources[0].class_count)
    else:
        valid = EvalSet(x=np.empty((0, *sources[0].shape)),
                        y=np.empty(0, dtype=np.int64),
                        class_count=sources[0].class_count)
    return train_domains, valid


@dataclass
class SelectionOutcome:
    """Result of selecting one combo per trial on one task."""

    combo_id: str
    accuracy: float
    per_trial: list[dict] = field(default_factory=list)
    pooled_combo_id: str | None = None
    pooled_accuracy: float | None = None


def _combo_sort_key(record) -> tuple:
    params = record.combo_params
    return (params.get("lr", 0.0), params.get("batch_size", 0), record.combo)


def select_by_validation(records) -> dict[str, SelectionOutcome]:
    """Per trial, the combo with the highest final validation accuracy wins
    (ties break toward lower learning rate, then smaller batch); the reported
    accuracy is the mean over trials of the winners' target accuracies.

    The alternative reading (select one combo by its mean validation accuracy
    across trials) is also computed and exposed as pooled_*.
    """
    if not records:
        raise EvalError("no records to select from")
    by_task: dict[str, list] = {}
    for rec in records:
        by_task.setdefault(rec.task, []).append(rec)
    out: dict[str, SelectionOutcome] = {}
    for task, recs in by_task.items():
        by_trial: dict[int, list] = {}
        for rec in recs:
            by_trial.setdefault(rec.seed, []).append(rec)
        per_trial = []
        for seed in sorted(by_trial):
            best = sorted(
                by_trial[seed],
                key=lambda r: (-r.final_val_acc,) + _combo_sort_key(r),
            )[0]
            per_trial.append({"seed": seed, "combo": best.combo,
                              "val_acc": best.final_val_acc,
                              "target_acc": best.final_target_acc})
        combos = [t["combo"] for t in per_trial]
        modal = max(sorted(set(combos)), key=combos.count)
        accuracy = float(np.mean([t["target_acc"] for t in per_trial]))

        # pooled reading: one combo maximizing mean validation accuracy
        by_combo: dict[str, list] = {}
        for rec in recs:
            by_combo.setdefault(rec.combo, []).append(rec)
        pooled = sorted(
            by_combo.items(),
            key=lambda kv: (-float(np.mean([r.final_val_acc for r in kv[1]])),)
            + _combo_sort_key(kv[1][0]),
        )[0]
        pooled_acc = float(np.mean([r.final_target_acc for r in pooled[1]]))
        out[task] = SelectionOutcome(combo_id=modal, accuracy=accuracy,
                                     per_trial=per_trial,
                                     pooled_combo_id=pooled[0],
                                     pooled_accuracy=pooled_acc)
    return out


def select_by_oracle(records) -> dict[str, SelectionOutcome]:
    """Per trial, the best target accuracy over all combos and epochs."""
    if not records:
        raise EvalError("no records to select from")
    by_task: dict[str, list] = {}
    for rec in records:
        by_task.setdefault(rec.task, []).append(rec)
    out: dict[str, SelectionOutcome] = {}
    for task, recs in by_task.items():
        by_trial: dict[int, list] = {}
        for rec in recs:
            by_trial.setdefault(rec.seed, []).append(rec)
        per_trial = []
        for seed in sorted(by_trial):
            best = sorted(
                by_trial[seed],
                key=lambda r: (-r.oracle_target_acc,) + _combo_sort_key(r),
            )[0]
            per_trial.append({"seed": seed, "combo": best.combo,
                              "target_acc": best.oracle_target_acc})
        combos = [t["combo"] for t in per_trial]
        modal = max(sorted(set(combos)), key=combos.count)
        accuracy = float(np.mean([t["target_acc"] for t in per_trial]))
        out[task] = SelectionOutcome(combo_id=modal, accuracy=accuracy,
                                     per_trial=per_trial)
    return out
