"""Dataset registry and ingestion adapters for the six supported corpora.

Adapters read each dataset's published on-disk layout from a local root and
emit RawRecording streams; no downloading happens here. Streams are split at
activity boundaries so every recording carries a single activity label.
"""

from __future__ import annotations

import logging
import pickle
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from ..errors import IngestionError, RegistryError
from .types import RawRecording

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DatasetInfo:
    name: str
    subjects: int
    classes: int
    channels: int
    sampling_rate_hz: float
    default_window: int
    default_step: int
    channel_names: tuple[str, ...] = ()


def _require(path: Path) -> Path:
    if not path.exists():
        raise IngestionError(f"missing file or directory: {path}")
    return path


def _finite_rows(stream: np.ndarray) -> np.ndarray:
    mask = np.all(np.isfinite(stream), axis=1)
    dropped = stream.shape[0] - int(mask.sum())
    if dropped:
        logger.warning("dropped %d non-finite rows during ingestion", dropped)
    return stream[mask]


def _segments_by_label(stream: np.ndarray, labels: np.ndarray):
    """Yield (label, contiguous_chunk) runs of constant label."""
    if len(labels) == 0:
        return
    change = np.flatnonzero(np.diff(labels)) + 1
    bounds = np.concatenate(([0], change, [len(labels)]))
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        yield int(labels[lo]), stream[lo:hi]


# --- DSADS ------------------------------------------------------------------

def _load_dsads(root: Path) -> list[RawRecording]:
    base = root / "data" if (root / "data").is_dir() else root
    activity_dirs = sorted(d for d in _require(base).iterdir()
                           if d.is_dir() and re.fullmatch(r"a\d{2}", d.name))
    if not activity_dirs:
        raise IngestionError(f"no a01..a19 activity directories under {base}")
    recordings = []
    for adir in activity_dirs:
        activity = int(adir.name[1:]) - 1
        for pdir in sorted(adir.iterdir()):
            if not pdir.is_dir() or not pdir.name.startswith("p"):
                continue
            subject = int(pdir.name[1:]) - 1
            for seg in sorted(pdir.glob("s*.txt")):
                try:
                    stream = np.loadtxt(seg, delimiter=",")
                except ValueError as exc:
                    raise IngestionError(f"corrupt segment file {seg}: {exc}") from exc
                if stream.ndim != 2 or stream.shape[1] != 45:
                    raise IngestionError(f"{seg}: expected 125x45 segment, got {stream.shape}")
                recordings.append(RawRecording(
                    stream=_finite_rows(stream), subject_id=subject,
                    activity_label=activity,
                    metadata={"dataset": "dsads", "segment": seg.name,
                              "sampling_rate_hz": "25"},
                ))
    return recordings


# --- USC-HAD ----------------------------------------------------------------

def _load_usc_had(root: Path) -> list[RawRecording]:
    from scipy.io import loadmat

    recordings = []
    subject_dirs = sorted(_require(root).glob("Subject*"),
                          key=lambda p: int(p.name.replace("Subject", "")))
    if not subject_dirs:
        raise IngestionError(f"no Subject* directories under {root}")
    for sdir in subject_dirs:
        subject = int(sdir.name.replace("Subject", "")) - 1
        for mat_path in sorted(sdir.glob("a*t*.mat")):
            m = re.fullmatch(r"a(\d+)t(\d+)\.mat", mat_path.name)
            if not m:
                continue
            activity = int(m.group(1)) - 1
            try:
                data = loadmat(mat_path)
            except Exception as exc:
                raise IngestionError(f"corrupt mat file {mat_path}: {exc}") from exc
            if "sensor_readings" not in data:
                raise IngestionError(f"{mat_path}: no sensor_readings array")
            stream = np.asarray(data["sensor_readings"], dtype=np.float64)
            recordings.append(RawRecording(
                stream=_finite_rows(stream), subject_id=subject,
                activity_label=activity,
                metadata={"dataset": "usc_had", "trial": m.group(2),
                          "sampling_rate_hz": "100"},
            ))
    return recordings


# --- UCI-HAR ----------------------------------------------------------------

_UCI_SIGNALS = ("total_acc_x", "total_acc_y", "total_acc_z",
                "body_gyro_x", "body_gyro_y", "body_gyro_z")


def _load_uci_har(root: Path) -> list[RawRecording]:
    base = root / "UCI HAR Dataset" if (root / "UCI HAR Dataset").is_dir() else root
    recordings = []
    for split in ("train", "test"):
        split_dir = _require(base / split)
        subjects = np.loadtxt(_require(split_dir / f"subject_{split}.txt"), dtype=np.int64)
        labels = np.loadtxt(_require(split_dir / f"y_{split}.txt"), dtype=np.int64)
        signals = []
        for sig in _UCI_SIGNALS:
            path = _require(split_dir / "Inertial Signals" / f"{sig}_{split}.txt")
            signals.append(np.loadtxt(path))
        cube = np.stack(signals, axis=2)  # (rows, 128, 6)
        if not (len(subjects) == len(labels) == cube.shape[0]):
            raise IngestionError(f"inconsistent row counts in {split_dir}")
        for i in range(cube.shape[0]):
            recordings.append(RawRecording(
                stream=cube[i], subject_id=int(subjects[i]) - 1,
                activity_label=int(labels[i]) - 1,
                metadata={"dataset": "uci_har", "split": split,
                          "sampling_rate_hz": "50"},
            ))
    return recordings


# --- PAMAP2 -----------------------------------------------------------------

# 12 protocol activities kept, in this order, remapped to 0..11
PAMAP2_ACTIVITY_IDS = (1, 2, 3, 4, 5, 6, 7, 12, 13, 16, 17, 24)
# per IMU block of 17 columns: acc16g (1..3), gyro+mag (7..12)
_PAMAP2_IMU_OFFSETS = (3, 20, 37)  # hand, chest, ankle


def _pamap2_columns() -> list[int]:
    cols = []
    for base in _PAMAP2_IMU_OFFSETS:
        cols.extend(range(base + 1, base + 4))
        cols.extend(range(base + 7, base + 13))
    return cols


def _load_pamap2(root: Path) -> list[RawRecording]:
    base = root / "Protocol" if (root / "Protocol").is_dir() else root
    files = sorted(_require(base).glob("subject1*.dat"))
    if not files:
        raise IngestionError(f"no subject1NN.dat files under {base}")
    cols = _pamap2_columns()
    keep = {aid: i for i, aid in enumerate(PAMAP2_ACTIVITY_IDS)}
    recordings = []
    for path in files:
        subject = int(path.stem.replace("subject", "")) - 101
        try:
            raw = np.loadtxt(path)
        except ValueError as exc:
            raise IngestionError(f"corrupt data file {path}: {exc}") from exc
        if raw.ndim != 2 or raw.shape[1] < 54:
            raise IngestionError(f"{path}: expected >=54 columns, got {raw.shape}")
        activity = raw[:, 1].astype(np.int64)
        stream = raw[:, cols]
        for label, chunk in _segments_by_label(stream, activity):
            if label not in keep:
                continue
            chunk = _finite_rows(chunk)
            if len(chunk) == 0:
                continue
            recordings.append(RawRecording(
                stream=chunk, subject_id=subject, activity_label=keep[label],
                metadata={"dataset": "pamap2", "sampling_rate_hz": "100"},
            ))
    return recordings


# --- EMG --------------------------------------------------------------------

def _load_emg(root: Path) -> list[RawRecording]:
    base = root
    nested = [d for d in _require(root).iterdir() if d.is_dir() and d.name.lower().startswith("emg")]
    if nested and not any(d.is_dir() and d.name.isdigit() for d in root.iterdir()):
        base = nested[0]
    subject_dirs = sorted(d for d in base.iterdir() if d.is_dir() and d.name.isdigit())
    if not subject_dirs:
        raise IngestionError(f"no numeric subject directories under {base}")
    recordings = []
    for sdir in subject_dirs:
        subject = int(sdir.name) - 1
        for path in sorted(sdir.glob("*.txt")):
            try:
                raw = np.loadtxt(path, skiprows=1)
            except ValueError as exc:
                raise IngestionError(f"corrupt gesture file {path}: {exc}") from exc
            if raw.ndim != 2 or raw.shape[1] < 10:
                raise IngestionError(f"{path}: expected time + 8 channels + class")
            labels = raw[:, 9].astype(np.int64)
            stream = raw[:, 1:9]
            for label, chunk in _segments_by_label(stream, labels):
                if not 1 <= label <= 6:  # 0 = unmarked, 7 = rare extra gesture
                    continue
                chunk = _finite_rows(chunk)
                if len(chunk) == 0:
                    continue
                recordings.append(RawRecording(
                    stream=chunk, subject_id=subject, activity_label=label - 1,
                    metadata={"dataset": "emg", "sampling_rate_hz": "1000"},
                ))
    return recordings


# --- WESAD ------------------------------------------------------------------

_WESAD_CHEST_KEYS = ("ACC", "ECG", "EDA", "EMG", "Resp", "Temp")
_WESAD_LABELS = {1: 0, 2: 1, 3: 2, 4: 3}  # baseline, stress, amusement, meditation


def _load_wesad(root: Path) -> list[RawRecording]:
    subject_dirs = sorted((d for d in _require(root).iterdir()
                           if d.is_dir() and re.fullmatch(r"S\d+", d.name)),
                          key=lambda p: int(p.name[1:]))
    if not subject_dirs:
        raise IngestionError(f"no S<n> subject directories under {root}")
    recordings = []
    for idx, sdir in enumerate(subject_dirs):
        pkl = _require(sdir / f"{sdir.name}.pkl")
        try:
            with open(pkl, "rb") as fh:
                data = pickle.load(fh, encoding="latin1")
        except Exception as exc:
            raise IngestionError(f"corrupt pickle {pkl}: {exc}") from exc
        try:
            chest = data["signal"]["chest"]
            labels = np.asarray(data["label"]).ravel().astype(np.int64)
        except (KeyError, TypeError) as exc:
            raise IngestionError(f"{pkl}: unexpected structure: {exc}") from exc
        parts = []
        for key in _WESAD_CHEST_KEYS:
            if key not in chest:
                raise IngestionError(f"{pkl}: chest modality {key} missing")
            arr = np.asarray(chest[key], dtype=np.float64)
            parts.append(arr.reshape(arr.shape[0], -1))
        stream = np.concatenate(parts, axis=1)  # 3-axis ACC + 5 scalars = 8
        n = min(stream.shape[0], len(labels))
        for label, chunk in _segments_by_label(stream[:n], labels[:n]):
            if label not in _WESAD_LABELS:
                continue
            chunk = _finite_rows(chunk)
            if len(chunk) == 0:
                continue
            recordings.append(RawRecording(
                stream=chunk, subject_id=idx, activity_label=_WESAD_LABELS[label],
                metadata={"dataset": "wesad", "sampling_rate_hz": "700"},
            ))
    return recordings


# --- registry ---------------------------------------------------------------

DATASETS: dict[str, DatasetInfo] = {
    "dsads": DatasetInfo("dsads", subjects=8, classes=19, channels=45,
                         sampling_rate_hz=25, default_window=125, default_step=125),
    "usc_had": DatasetInfo("usc_had", subjects=14, classes=12, channels=6,
                           sampling_rate_hz=100, default_window=200, default_step=100),
    "uci_har": DatasetInfo("uci_har", subjects=30, classes=6, channels=6,
                           sampling_rate_hz=50, default_window=128, default_step=128),
    "pamap2": DatasetInfo("pamap2", subjects=9, classes=12, channels=27,
                          sampling_rate_hz=100, default_window=200, default_step=100),
    "emg": DatasetInfo("emg", subjects=36, classes=6, channels=8,
                       sampling_rate_hz=1000, default_window=200, default_step=100),
    "wesad": DatasetInfo("wesad", subjects=15, classes=4, channels=8,
                         sampling_rate_hz=700, default_window=200, default_step=100),
}

_LOADERS: dict[str, Callable[[Path], list[RawRecording]]] = {
    "dsads": _load_dsads,
    "usc_had": _load_usc_had,
    "uci_har": _load_uci_har,
    "pamap2": _load_pamap2,
    "emg": _load_emg,
    "wesad": _load_wesad,
}


def dataset_info(name: str) -> DatasetInfo:
    key = name.lower().replace("-", "_")
    if key not in DATASETS:
        raise RegistryError(f"unknown dataset {name!r}; known: {sorted(DATASETS)}")
    return DATASETS[key]


def load_dataset(name: str, root_path) -> list[RawRecording]:
    """Load all recordings of a named dataset from its published layout."""
    info = dataset_info(name)
    recordings = _LOADERS[info.name](Path(root_path))
    if not recordings:
        raise IngestionError(f"{info.name}: no recordings found under {root_path}")
    return recordings
