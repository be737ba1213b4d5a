from .metrics import (
    ConfusionMatrix,
    EvalSet,
    confusion,
    evaluate_accuracy,
    macro_f1,
    macro_f1_from_confusion,
    predictions,
)
from .selection import (
    PROTOCOLS,
    SelectionOutcome,
    SelectionProtocol,
    select_by_oracle,
    select_by_validation,
    split_train_valid,
)
from .grid import (
    Combo,
    RunRecord,
    default_grid,
    record_key,
    run_grid,
    run_single,
)
from .ranks import RankTable, aggregate_ranks
from .timing import inference_timing

__all__ = [
    "Combo",
    "ConfusionMatrix",
    "EvalSet",
    "PROTOCOLS",
    "RankTable",
    "RunRecord",
    "SelectionOutcome",
    "SelectionProtocol",
    "aggregate_ranks",
    "confusion",
    "default_grid",
    "evaluate_accuracy",
    "inference_timing",
    "macro_f1",
    "macro_f1_from_confusion",
    "predictions",
    "record_key",
    "run_grid",
    "run_single",
    "select_by_oracle",
    "select_by_validation",
    "split_train_valid",
]
