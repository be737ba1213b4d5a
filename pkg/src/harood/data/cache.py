"""Intermediate dataset cache: one file per (dataset, subject).

Each subject file is an .npz of shape-tagged little-endian float32 arrays
(one per recording) next to a JSON sidecar describing labels and sensor
metadata, so scenario building never re-reads raw archives. Files are
written atomically (temp + rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..errors import IngestionError
from .registry import dataset_info, load_dataset
from .types import RawRecording


def _subject_stem(dataset: str, subject_id: int) -> str:
    return f"{dataset}_subject{subject_id:03d}"


def _atomic_write(path: Path, write_fn) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    os.close(fd)
    try:
        write_fn(tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_subject_cache(
    cache_dir, dataset: str, subject_id: int, recordings: list[RawRecording],
    sampling_rate_hz: float, channel_names: list[str] | None = None,
) -> Path:
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    stem = _subject_stem(dataset, subject_id)
    npz_path = cache_dir / f"{stem}.npz"
    arrays = {
        f"rec{i:05d}": rec.stream.astype("<f4") for i, rec in enumerate(recordings)
    }
    _atomic_write(npz_path, lambda tmp: _savez(tmp, arrays))
    sidecar = {
        "dataset": dataset,
        "subject_id": subject_id,
        "activity_labels": [rec.activity_label for rec in recordings],
        "sampling_rate_hz": sampling_rate_hz,
        "channel_names": channel_names or [],
    }
    json_path = cache_dir / f"{stem}.json"
    _atomic_write(json_path, lambda tmp: Path(tmp).write_text(json.dumps(sidecar, indent=1)))
    return npz_path


def _savez(tmp_name: str, arrays: dict) -> None:
    # np.savez appends .npz when missing; write to the exact temp name instead.
    with open(tmp_name, "wb") as fh:
        np.savez(fh, **arrays)


def read_subject_cache(cache_dir, dataset: str, subject_id: int) -> list[RawRecording]:
    cache_dir = Path(cache_dir)
    stem = _subject_stem(dataset, subject_id)
    npz_path = cache_dir / f"{stem}.npz"
    json_path = cache_dir / f"{stem}.json"
    if not npz_path.exists() or not json_path.exists():
        raise IngestionError(f"missing cache for {dataset} subject {subject_id} "
                             f"under {cache_dir}")
    meta = json.loads(json_path.read_text())
    labels = meta["activity_labels"]
    recordings = []
    with np.load(npz_path) as data:
        for i, key in enumerate(sorted(data.files)):
            recordings.append(RawRecording(
                stream=np.asarray(data[key], dtype=np.float64),
                subject_id=subject_id,
                activity_label=int(labels[i]),
                metadata={"dataset": dataset,
                          "sampling_rate_hz": str(meta["sampling_rate_hz"])},
            ))
    return recordings


def cached_subjects(cache_dir, dataset: str) -> list[int]:
    cache_dir = Path(cache_dir)
    out = []
    for path in sorted(cache_dir.glob(f"{dataset}_subject*.npz")):
        out.append(int(path.stem.rsplit("subject", 1)[1]))
    return out


def ingest(dataset: str, root_path, cache_dir) -> list[Path]:
    """Load a raw dataset and write per-subject cache files. Returns paths."""
    info = dataset_info(dataset)
    recordings = load_dataset(dataset, root_path)
    by_subject: dict[int, list[RawRecording]] = {}
    for rec in recordings:
        by_subject.setdefault(rec.subject_id, []).append(rec)
    paths = []
    for subject_id in sorted(by_subject):
        paths.append(write_subject_cache(
            cache_dir, info.name, subject_id, by_subject[subject_id],
            info.sampling_rate_hz,
        ))
    return paths
