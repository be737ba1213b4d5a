"""Config-driven experiment entry point."""

from __future__ import annotations

import json
import os
from pathlib import Path

from ..data.synthetic import make_synthetic_suite
from ..data.types import NormalizationSpec, SyntheticShiftSpec
from ..errors import ConfigError
from ..evaluation.grid import Combo, default_grid, run_grid
from ..evaluation.selection import (
    SelectionProtocol,
    select_by_oracle,
    select_by_validation,
)
from ..scenarios.builders import build_scenario, bundle_from_domains
from ..scenarios.serialize import load_bundle
from ..scenarios.specs import default_spec, leave_one_out_tasks
from .config import RunConfig
from .store import ResultsStore


def resolve_bundle(config: RunConfig):
    if config.bundle_dir:
        return load_bundle(config.bundle_dir)
    if config.dataset == "synthetic":
        params = dict(config.synthetic)
        params.setdefault("seed", config.seed)
        spec = SyntheticShiftSpec(**params)
        domains = make_synthetic_suite(spec)
        return bundle_from_domains(domains, spec.class_count,
                                   scenario=config.task, dataset="synthetic")
    if not config.cache_dir:
        raise ConfigError(
            "need cache_dir (from `harood ingest`) or bundle_dir for real datasets"
        )
    norm = NormalizationSpec(mode=config.normalization)
    spec = default_spec(config.task, dataset=config.dataset,
                        window_length=config.window_length, normalization=norm)
    return build_scenario(config.task, config.dataset, config.cache_dir, spec)


def _resolve_grid(config: RunConfig) -> list[Combo]:
    if config.grid is None:
        return [Combo(lr=config.lr, batch_size=config.batch_size)]
    if config.grid == "default":
        return default_grid()
    if isinstance(config.grid, list):
        combos = []
        for entry in config.grid:
            if not isinstance(entry, dict) or "lr" not in entry \
                    or "batch_size" not in entry:
                raise ConfigError(f"grid entries need lr and batch_size: {entry!r}")
            extras = tuple(sorted((k, v) for k, v in entry.items()
                                  if k not in ("lr", "batch_size")))
            combos.append(Combo(lr=float(entry["lr"]),
                                batch_size=int(entry["batch_size"]),
                                overrides=extras))
        return combos
    raise ConfigError(f"grid must be null, 'default', or a list, got {config.grid!r}")


def _workers(config: RunConfig) -> int:
    if os.environ.get("HAROOD_DETERMINISTIC", "") == "1":
        return 1
    if config.workers is not None:
        return max(1, config.workers)
    return max(1, int(os.environ.get("HAROOD_WORKERS", "1")))


def train_entry(config: RunConfig) -> dict:
    """Run the configured grid over the configured leave-one-out tasks,
    persist one record per run, and return the selection summary."""
    bundle = resolve_bundle(config)
    all_tasks = leave_one_out_tasks(bundle)
    if config.test_envs is not None:
        bad = [e for e in config.test_envs if not 0 <= e < bundle.domain_count]
        if bad:
            raise ConfigError(f"test_envs {bad} out of range for "
                              f"{bundle.domain_count} domains")
        tasks = [t for t in all_tasks if t.target_domain in config.test_envs]
    else:
        tasks = all_tasks

    store = ResultsStore(config.output, dataset=str(config.dataset))
    protocol = SelectionProtocol(kind="training_domain_validation",
                                 validation_fraction=config.validation_fraction)
    records = run_grid(
        bundle, config.algorithm, grid=_resolve_grid(config), protocol=protocol,
        trials=config.trials, max_epoch=config.max_epoch, backbone=config.backbone,
        capacity=config.capacity, algo_overrides=config.algorithm_params,
        base_seed=config.seed, tasks=tasks, workers=_workers(config),
        existing=store.load_existing(),
        on_record=lambda key, rec: store.write(rec),
    )

    chosen = (select_by_oracle(records) if config.protocol == "oracle"
              else select_by_validation(records))
    summary = {
        "algorithm": config.algorithm,
        "dataset": config.dataset,
        "task": config.task,
        "backbone": config.backbone,
        "protocol": config.protocol,
        "seed": config.seed,
        "tasks": {},
    }
    by_task: dict[str, list] = {}
    for rec in records:
        by_task.setdefault(rec.task, []).append(rec)
    for task_id, outcome in sorted(chosen.items()):
        selected = [r for r in by_task[task_id]
                    if any(t["combo"] == r.combo and t["seed"] == r.seed
                           for t in outcome.per_trial)]
        f1 = sum(r.macro_f1 for r in selected) / max(1, len(selected))
        summary["tasks"][task_id] = {
            "target_accuracy": outcome.accuracy,
            "macro_f1": f1,
            "combo": outcome.combo_id,
            "per_trial": outcome.per_trial,
        }
    store.root.mkdir(parents=True, exist_ok=True)
    summary_path = store.root / "summary.json"
    summary_path.write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    summary["paths"] = {"store": str(store.root), "summary": str(summary_path)}
    return summary
