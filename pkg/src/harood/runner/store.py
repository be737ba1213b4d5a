"""Append-only results store: one JSON-lines file per run, never overwritten."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from ..errors import ReportError
from ..evaluation.grid import RunRecord, record_key


class ResultsStore:
    """Layout: <root>/runs/<task>/<dataset>/<algorithm>/<combo>/<seed>.jsonl.

    A completed run's file is immutable; writing the same key again creates
    a versioned sibling (seed.v2.jsonl, ...). The index is rebuilt from the
    files, so resuming after a crash sees exactly the completed runs.
    """

    def __init__(self, root, dataset: str = "data"):
        self.root = Path(root)
        self.dataset = dataset
        self.runs_dir = self.root / "runs"

    def _run_path(self, task: str, algorithm: str, combo: str, seed: int) -> Path:
        return self.runs_dir / task / self.dataset / algorithm / combo / f"{seed}.jsonl"

    def write(self, record: RunRecord) -> Path:
        path = self._run_path(record.task, record.algorithm, record.combo, record.seed)
        path.parent.mkdir(parents=True, exist_ok=True)
        version = 2
        while path.exists():
            path = path.with_name(f"{record.seed}.v{version}.jsonl")
            version += 1
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        os.close(fd)
        try:
            Path(tmp).write_text(json.dumps(record.to_dict(), sort_keys=True) + "\n")
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)
        return path

    def _iter_files(self):
        if not self.runs_dir.exists():
            return
        yield from sorted(self.runs_dir.rglob("*.jsonl"))

    def index(self) -> dict[str, Path]:
        """Latest version per run key."""
        out: dict[str, Path] = {}
        for path in self._iter_files():
            seed = path.stem.split(".v")[0]
            combo = path.parent.name
            algorithm = path.parent.parent.name
            task = path.parent.parent.parent.parent.name
            out[record_key(task, algorithm, combo, int(seed))] = path
        return out

    def load(self, path: Path) -> RunRecord:
        line = Path(path).read_text().strip().splitlines()[0]
        return RunRecord.from_dict(json.loads(line))

    def load_existing(self) -> dict[str, RunRecord]:
        return {key: self.load(path) for key, path in self.index().items()}

    def load_all(self) -> list[RunRecord]:
        records = self.load_existing()
        if not records:
            raise ReportError(f"no run records under {self.runs_dir}")
        return [records[k] for k in sorted(records)]
