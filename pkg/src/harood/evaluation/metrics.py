"""Accuracy, macro-F1 and confusion counts on frozen models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EvalError
from ..models.bundle import ModelBundle

_EVAL_CHUNK = 256


@dataclass
class EvalSet:
    """A plain evaluation set, possibly pooled across domains."""

    x: np.ndarray
    y: np.ndarray
    class_count: int

    def stack(self):
        return self.x, self.y

    def __len__(self):
        return len(self.y)


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (C, C); rows = true, cols = predicted

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / max(1, self.total)


def predictions(model: ModelBundle, data) -> tuple[np.ndarray, np.ndarray]:
    """Eval-mode argmax predictions; returns (predicted, true)."""
    x, y = data.stack()
    if len(y) == 0:
        raise EvalError("evaluation set is empty")
    preds = []
    for lo in range(0, len(y), _EVAL_CHUNK):
        z = model.predict(x[lo : lo + _EVAL_CHUNK])
        preds.append(np.argmax(z, axis=1))
    return np.concatenate(preds), y


def evaluate_accuracy(model: ModelBundle, data) -> float:
    pred, y = predictions(model, data)
    return float(np.mean(pred == y))


def confusion(model: ModelBundle, data) -> ConfusionMatrix:
    pred, y = predictions(model, data)
    c = data.class_count
    counts = np.zeros((c, c), dtype=np.int64)
    np.add.at(counts, (y, pred), 1)
    return ConfusionMatrix(counts=counts)


def macro_f1_from_confusion(counts: np.ndarray) -> float:
    """Unweighted mean per-class F1; classes absent from the truth are skipped."""
    c = counts.shape[0]
    f1s = []
    for k in range(c):
        supp = counts[k].sum()
        if supp == 0:
            continue
        tp = counts[k, k]
        fp = counts[:, k].sum() - tp
        fn = supp - tp
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom > 0 else 0.0)
    if not f1s:
        raise EvalError("no classes present in the evaluation set")
    return float(np.mean(f1s))


def macro_f1(model: ModelBundle, data) -> float:
    return macro_f1_from_confusion(confusion(model, data).counts)
