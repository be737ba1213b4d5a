"""Trial orchestration: train one run per (task x combo x trial)."""

from __future__ import annotations

import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..algorithms.base import (
    AlgorithmConfig,
    DomainBatch,
    algorithm_info,
    create_algorithm,
)
from ..errors import ConfigError, DivergenceError
from ..models.bundle import build_model
from ..models.config import BackboneConfig
from ..scenarios.specs import LodoTask, ScenarioBundle, leave_one_out_tasks
from .metrics import EvalSet, confusion, evaluate_accuracy, macro_f1_from_confusion
from .selection import SelectionProtocol, split_train_valid

DEFAULT_LRS = (0.001, 0.005, 0.01, 0.05, 0.1)
DEFAULT_BATCH_SIZES = (32, 64, 128, 256)


@dataclass(frozen=True)
class Combo:
    lr: float
    batch_size: int
    overrides: tuple = ()   # extra AlgorithmConfig fields, as (name, value) pairs

    @property
    def id(self) -> str:
        extra = "".join(f"_{k}{v}" for k, v in self.overrides)
        return f"lr{self.lr:g}_bs{self.batch_size}{extra}"

    @property
    def params(self) -> dict:
        return {"lr": self.lr, "batch_size": self.batch_size, **dict(self.overrides)}


def default_grid() -> list[Combo]:
    """The 20-point learning-rate x batch-size grid."""
    return [Combo(lr=lr, batch_size=bs)
            for lr in DEFAULT_LRS for bs in DEFAULT_BATCH_SIZES]


@dataclass
class RunRecord:
    task: str
    algorithm: str
    combo: str
    combo_params: dict
    seed: int
    backbone: str
    epoch_metrics: list[dict] = field(default_factory=list)
    final_val_acc: float = 0.0
    final_target_acc: float = 0.0
    oracle_target_acc: float = 0.0
    macro_f1: float = 0.0
    seconds: float = 0.0
    confusion: list = field(default_factory=list)
    diverged: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "task": d["task"], "algorithm": d["algorithm"], "combo": d["combo"],
            "combo_params": d["combo_params"], "seed": d["seed"],
            "backbone": d["backbone"], "epoch_metrics": d["epoch_metrics"],
            "final": {"val_acc": d["final_val_acc"],
                      "target_acc": d["final_target_acc"],
                      "oracle_target_acc": d["oracle_target_acc"],
                      "macro_f1": d["macro_f1"], "seconds": d["seconds"]},
            "confusion": d["confusion"], "diverged": d["diverged"],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        final = d.get("final", {})
        return cls(
            task=d["task"], algorithm=d["algorithm"], combo=d["combo"],
            combo_params=d.get("combo_params", {}), seed=d["seed"],
            backbone=d.get("backbone", "cnn"),
            epoch_metrics=d.get("epoch_metrics", []),
            final_val_acc=final.get("val_acc", 0.0),
            final_target_acc=final.get("target_acc", 0.0),
            oracle_target_acc=final.get("oracle_target_acc", 0.0),
            macro_f1=final.get("macro_f1", 0.0),
            seconds=final.get("seconds", 0.0),
            confusion=d.get("confusion", []),
            diverged=d.get("diverged", False),
        )


def record_key(task_id: str, algorithm: str, combo_id: str, seed: int) -> str:
    return f"{task_id}/{algorithm}/{combo_id}/{seed}"


class _DomainSampler:
    """Cycle through reshuffled permutations of one domain's train set."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.batch_size = min(batch_size, n) if n < batch_size else batch_size
        self.rng = rng
        self.queue = rng.permutation(n)
        self.pos = 0

    def next_batch(self) -> np.ndarray:
        idx = []
        while len(idx) < self.batch_size:
            if self.pos >= self.n:
                self.queue = self.rng.permutation(self.n)
                self.pos = 0
            take = min(self.batch_size - len(idx), self.n - self.pos)
            idx.extend(self.queue[self.pos : self.pos + take])
            self.pos += take
        return np.asarray(idx, dtype=np.int64)


def _run_seeds(base_seed: int, task: LodoTask, combo: Combo, trial: int):
    entropy = [base_seed, task.target_domain, zlib.crc32(combo.id.encode()), trial]
    ss = np.random.SeedSequence(entropy)
    return ss.spawn(4)


def _evaluate_with(algo, model, data) -> float:
    state = algo.eval_state(model)
    if state is None:
        return evaluate_accuracy(model, data)
    saved = model.state()
    model.load_state(state)
    try:
        return evaluate_accuracy(model, data)
    finally:
        model.load_state(saved)


def run_single(bundle: ScenarioBundle, task: LodoTask, algorithm: str, combo: Combo,
               trial: int, max_epoch: int,
               protocol: SelectionProtocol = SelectionProtocol(),
               backbone: str = "cnn", capacity: str = "small",
               algo_overrides: dict | None = None, base_seed: int = 0,
               backbone_overrides: dict | None = None,
               feature_dump_path=None) -> RunRecord:
    """Train one (task, combo, trial) run for max_epoch epochs."""
    started = time.perf_counter()
    info = algorithm_info(algorithm)
    split_ss, model_ss, algo_ss, batch_ss = _run_seeds(base_seed, task, combo, trial)

    sources = [bundle.domains[d] for d in task.source_domains]
    train_domains, valid = split_train_valid(
        sources, protocol.validation_fraction,
        seed=int(split_ss.generate_state(1)[0]),
    )
    target = bundle.domains[task.target_domain]
    stacked = [dom.stack() for dom in train_domains]
    train_pool = EvalSet(
        x=np.concatenate([x for x, _ in stacked]),
        y=np.concatenate([y for _, y in stacked]),
        class_count=bundle.class_count,
    )

    config = BackboneConfig(family=backbone, input_shape=bundle.shape,
                            capacity=capacity, **(backbone_overrides or {}))
    model = build_model(
        config, bundle.class_count, seed=int(model_ss.generate_state(1)[0]),
        discriminator_domains=len(sources) if info.needs_discriminator else None,
        lag_branch_factor=0.5 if info.needs_global_branch else None,
    )

    min_train = min(len(dom) for dom in train_domains)
    steps_per_epoch = max(1, min_train // combo.batch_size)
    cfg_kwargs = {**(algo_overrides or {}), **dict(combo.overrides)}
    cfg_kwargs.pop("batch_size", None)
    cfg_kwargs["lr"] = combo.lr
    cfg_kwargs["total_steps"] = max_epoch * steps_per_epoch
    cfg = AlgorithmConfig(**cfg_kwargs)
    algo = create_algorithm(algorithm, cfg, seed=int(algo_ss.generate_state(1)[0]))

    batch_rngs = [np.random.default_rng(s) for s in batch_ss.spawn(len(train_domains))]
    samplers = [
        _DomainSampler(len(dom), combo.batch_size, rng)
        for dom, rng in zip(train_domains, batch_rngs)
    ]

    record = RunRecord(task=task.task_id, algorithm=info.name, combo=combo.id,
                       combo_params=combo.params, seed=trial, backbone=backbone)
    best_val = -1.0
    best_state = None
    for epoch in range(1, max_epoch + 1):
        try:
            for _ in range(steps_per_epoch):
                batches = [
                    DomainBatch(inputs=x[idx], labels=y[idx], domain_id=dom.domain_id)
                    for (x, y), dom, idx in (
                        (stacked[i], train_domains[i], samplers[i].next_batch())
                        for i in range(len(train_domains))
                    )
                ]
                algo.step(batches, model)
        except DivergenceError:
            record.diverged = True
        train_acc = _evaluate_with(algo, model, train_pool)
        val_acc = _evaluate_with(algo, model, valid) if len(valid) else train_acc
        target_acc = _evaluate_with(algo, model, target)
        record.epoch_metrics.append({"epoch": epoch, "train_acc": train_acc,
                                     "val_acc": val_acc, "target_acc": target_acc})
        if val_acc > best_val:
            best_val = val_acc
            eval_state = algo.eval_state(model)
            best_state = eval_state if eval_state is not None else model.state()
            if eval_state is not None:
                best_state = {"params": eval_state["params"],
                              "buffers": model.state()["buffers"]}
        if record.diverged:
            break

    if best_state is not None:
        model.load_state(best_state)
    record.final_val_acc = best_val if best_val >= 0 else 0.0
    record.final_target_acc = evaluate_accuracy(model, target)
    record.oracle_target_acc = max(
        (m["target_acc"] for m in record.epoch_metrics), default=0.0,
    )
    cm = confusion(model, target)
    record.confusion = cm.counts.tolist()
    record.macro_f1 = macro_f1_from_confusion(cm.counts)
    if feature_dump_path is not None:
        from ..models.bundle import forward_features

        x_t, y_t = target.stack()
        np.savez(feature_dump_path,
                 features=forward_features(model, x_t).astype("<f4"), labels=y_t)
    record.seconds = time.perf_counter() - started
    return record


def _run_single_args(args) -> RunRecord:
    return run_single(*args)


def run_grid(bundle: ScenarioBundle, algorithm: str, grid: list[Combo] | None = None,
             protocol: SelectionProtocol = SelectionProtocol(), trials: int = 3,
             max_epoch: int = 150, backbone: str = "cnn", capacity: str = "small",
             algo_overrides: dict | None = None, base_seed: int = 0,
             tasks: list[LodoTask] | None = None, workers: int = 1,
             backbone_overrides: dict | None = None,
             existing: dict[str, RunRecord] | None = None,
             on_record=None) -> list[RunRecord]:
    """One RunRecord per (task x combo x trial).

    `existing` short-circuits already-completed runs (crash resume);
    `on_record` is called with each freshly computed record.
    """
    if not grid:
        grid = default_grid()
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    if tasks is None:
        tasks = leave_one_out_tasks(bundle)
    existing = existing or {}

    jobs = []
    records: dict[str, RunRecord] = {}
    for task in tasks:
        for combo in grid:
            for trial in range(trials):
                key = record_key(task.task_id, algorithm_info(algorithm).name,
                                 combo.id, trial)
                if key in existing:
                    records[key] = existing[key]
                    continue
                jobs.append((key, (bundle, task, algorithm, combo, trial, max_epoch,
                                   protocol, backbone, capacity, algo_overrides,
                                   base_seed, backbone_overrides)))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (key, _), record in zip(jobs, pool.map(_run_single_args,
                                                       [a for _, a in jobs])):
                records[key] = record
                if on_record:
                    on_record(key, record)
    else:
        for key, args in jobs:
            record = run_single(*args)
            records[key] = record
            if on_record:
                on_record(key, record)
    return [records[k] for k in sorted(records)]
