"""Bundle serialization: per-domain array files plus a JSON manifest."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from ..data.types import DomainDataset, NormalizationSpec, SensorWindow, WindowingSpec
from ..errors import IngestionError
from .specs import ScenarioBundle, ScenarioSpec

MANIFEST_NAME = "manifest.json"


def _domain_file(directory: Path, domain_id: int) -> Path:
    return directory / f"domain{domain_id:02d}.npz"


def save_bundle(bundle: ScenarioBundle, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256()
    for dom in bundle.domains:
        x, y = dom.stack()
        ts = np.array([w.timestamp_index for w in dom.windows], dtype=np.int64)
        path = _domain_file(directory, dom.domain_id)
        with open(path, "wb") as fh:
            np.savez(fh, x=x.astype("<f4"), y=y, ts=ts)
        digest.update(path.read_bytes())
    spec = bundle.spec
    manifest = {
        "scenario": spec.scenario,
        "dataset": spec.dataset if isinstance(spec.dataset, str) else list(spec.dataset),
        "split_table": [list(g) for g in spec.split_table],
        "shape": list(spec.expected_shape),
        "class_count": spec.class_count,
        "domain_count": spec.domain_count,
        "normalization": {"mode": spec.normalization.mode,
                          "statistics_scope": spec.normalization.statistics_scope},
        "windowing": {"window_length": spec.windowing.window_length,
                      "step": spec.windowing.step,
                      "channel_count": spec.windowing.channel_count},
        "checksum": digest.hexdigest(),
        "metadata": bundle.metadata,
    }
    (directory / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1))
    return directory


def load_bundle(directory) -> ScenarioBundle:
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise IngestionError(f"no {MANIFEST_NAME} under {directory}")
    manifest = json.loads(manifest_path.read_text())
    spec = ScenarioSpec(
        scenario=manifest["scenario"],
        dataset=(manifest["dataset"] if isinstance(manifest["dataset"], str)
                 else tuple(manifest["dataset"])),
        split_table=tuple(tuple(g) for g in manifest["split_table"]),
        expected_shape=tuple(manifest["shape"]),
        class_count=manifest["class_count"],
        domain_count=manifest["domain_count"],
        windowing=WindowingSpec(**manifest["windowing"]),
        normalization=NormalizationSpec(**manifest["normalization"]),
    )
    domains = []
    for domain_id in range(spec.domain_count):
        path = _domain_file(directory, domain_id)
        if not path.exists():
            raise IngestionError(f"missing domain file {path}")
        with np.load(path) as data:
            x = np.asarray(data["x"], dtype=np.float64)
            y = data["y"]
            ts = data["ts"]
        windows = [
            SensorWindow(values=x[i], label=int(y[i]), domain_id=domain_id,
                         timestamp_index=int(ts[i]))
            for i in range(x.shape[0])
        ]
        domains.append(DomainDataset(windows=windows, domain_id=domain_id,
                                     class_count=spec.class_count))
    return ScenarioBundle(domains=domains, class_count=spec.class_count, spec=spec,
                          metadata=manifest.get("metadata", {}))
