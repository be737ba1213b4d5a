"""Exception hierarchy shared across the package."""


class HaroodError(Exception):
    """Base class for all package errors."""


class ConfigError(HaroodError):
    """Invalid or inconsistent configuration value."""


class WindowingError(HaroodError):
    """Stream too short or otherwise unwindowable."""


class ShapeError(HaroodError):
    """Array shape incompatible with the requested operation."""


class SplitError(HaroodError):
    """Malformed domain split table (overlap, missing class, ...)."""


class RegistryError(HaroodError):
    """Unknown dataset or algorithm name."""


class IngestionError(HaroodError):
    """Missing or corrupt raw dataset file; message names the file."""


class ProtocolError(HaroodError):
    """Evaluation protocol misuse (e.g. leave-one-out on one domain)."""


class BatchError(HaroodError):
    """Empty or malformed training batch."""


class EvalError(HaroodError):
    """Evaluation requested on an empty or incompatible dataset."""


class AnalysisError(HaroodError):
    """Distance analysis on empty or degenerate sample sets."""


class ReportError(HaroodError):
    """Report generation from an empty or inconsistent store."""


class CheckpointError(HaroodError):
    """Unreadable or version-incompatible checkpoint file."""


class DivergenceError(HaroodError):
    """Non-finite loss during training; carries the last update report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
