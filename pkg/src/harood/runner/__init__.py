from .config import RunConfig, parse_config, parse_override_pairs
from .store import ResultsStore
from .train import resolve_bundle, train_entry
from .report import emit_report

__all__ = [
    "ResultsStore",
    "RunConfig",
    "emit_report",
    "parse_config",
    "parse_override_pairs",
    "resolve_bundle",
    "train_entry",
]
