"""Single-file checkpoints: version tag, config JSON, named float32 arrays."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .config import BackboneConfig
from .bundle import ModelBundle, build_model

CHECKPOINT_VERSION = 1


def save_model(model: ModelBundle, path) -> Path:
    path = Path(path)
    header = {
        "version": CHECKPOINT_VERSION,
        "backbone": model.config.to_dict(),
        "class_count": model.class_count,
        "seed": model.seed,
        "discriminator_domains": model.discriminator_domains,
        "lag_branch_factor": model.lag_branch_factor,
    }
    arrays = {"__header__": np.frombuffer(json.dumps(header).encode(), dtype=np.uint8)}
    state = model.state()
    for name, arr in state["params"].items():
        arrays[f"param/{name}"] = arr.astype("<f4")
    for name, arr in state["buffers"].items():
        arrays[f"buffer/{name}"] = arr.astype("<f4")
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_model(path) -> ModelBundle:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"no checkpoint at {path}")
    with np.load(path) as data:
        if "__header__" not in data.files:
            raise CheckpointError(f"{path}: missing checkpoint header")
        header = json.loads(bytes(data["__header__"]).decode())
        if header.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"{path}: unsupported checkpoint version {header.get('version')}"
            )
        config = BackboneConfig.from_dict(header["backbone"])
        model = build_model(
            config, header["class_count"], seed=header.get("seed", 0),
            discriminator_domains=header.get("discriminator_domains"),
            lag_branch_factor=header.get("lag_branch_factor"),
        )
        state = {"params": {}, "buffers": {}}
        for name in data.files:
            if name.startswith("param/"):
                state["params"][name[len("param/"):]] = np.asarray(data[name],
                                                                   dtype=np.float64)
            elif name.startswith("buffer/"):
                state["buffers"][name[len("buffer/"):]] = np.asarray(data[name],
                                                                     dtype=np.float64)
    model.load_state(state)
    return model
