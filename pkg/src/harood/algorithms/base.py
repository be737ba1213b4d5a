"""Unified training-algorithm API: one optimizer step per call, one
loss/penalty decomposition returned per step."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from ..errors import BatchError, ConfigError, DivergenceError, RegistryError
from ..models.bundle import ModelBundle
from ..models.layers import softmax

DEFAULT_MMD_BANDWIDTHS = (0.001, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
DEFAULT_AUGMENTATIONS = ("jitter", "scaling", "channel_permutation",
                         "time_segment_permutation")


@dataclass(frozen=True)
class AlgorithmConfig:
    """Hyperparameters shared by the sixteen algorithms; unused knobs are ignored."""

    lr: float = 0.01
    weight_decay: float = 5e-4
    penalty_weight: float = 1.0
    mixup_alpha: float = 0.2
    mmd_bandwidths: Sequence[float] = DEFAULT_MMD_BANDWIDTHS
    dro_eta: float = 0.01
    andmask_tau: float = 1.0
    vrex_warmup_steps: int = 0
    mldg_inner_lr: float = 0.01
    mldg_beta: float = 1.0
    mldg_second_order: bool = False
    fish_meta_lr: float = 0.5
    fishr_ema_decay: float = 0.95
    rsc_feature_pct: float = 1.0 / 3.0
    rsc_batch_pct: float = 1.0 / 3.0
    erm_pp_ema_decay: float = 0.999
    erm_pp_warmup_frac: float = 0.05
    ddlearn_augmentations: Sequence[str] = DEFAULT_AUGMENTATIONS
    ddlearn_jitter_std: float = 0.05
    ddlearn_scale_range: float = 0.2
    lag_align_weight: float = 1.0
    urm_temperature: float = 1.0
    dann_anneal: bool = False
    total_steps: int = 1000

    def __post_init__(self):
        nonneg = ("lr", "weight_decay", "penalty_weight", "mixup_alpha", "dro_eta",
                  "mldg_inner_lr", "mldg_beta", "fish_meta_lr", "lag_align_weight",
                  "urm_temperature", "ddlearn_jitter_std", "ddlearn_scale_range")
        for name in nonneg:
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")
        unit = ("andmask_tau", "fishr_ema_decay", "rsc_feature_pct", "rsc_batch_pct",
                "erm_pp_ema_decay", "erm_pp_warmup_frac")
        for name in unit:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if any(b <= 0 for b in self.mmd_bandwidths):
            raise ConfigError("mmd_bandwidths must be positive")


@dataclass
class DomainBatch:
    inputs: np.ndarray  # (n, channels, 1, length)
    labels: np.ndarray  # (n,) int
    domain_id: int

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.inputs.ndim != 4:
            raise BatchError(f"batch inputs must be 4-D, got {self.inputs.shape}")
        if len(self.inputs) == 0:
            raise BatchError(f"empty batch for domain {self.domain_id}")
        if len(self.inputs) != len(self.labels):
            raise BatchError("inputs and labels disagree in length")

    def __len__(self) -> int:
        return len(self.inputs)


@dataclass
class UpdateReport:
    total_loss: float
    task_loss: float
    penalty: float
    per_domain_risks: list[float]
    step_index: int
    grad_norm: float = 0.0

    def is_finite(self) -> bool:
        vals = [self.total_loss, self.task_loss, self.penalty, *self.per_domain_risks]
        return bool(np.all(np.isfinite(vals)))


class Adam:
    """Adam with classic coupled L2 weight decay (decay added to the gradient)."""

    def __init__(self, lr: float, betas=(0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1t = 1.0 - self.b1 ** self.t
        b2t = 1.0 - self.b2 ** self.t
        for name, p in params.items():
            g = grads[name]
            if self.weight_decay:
                g = g + self.weight_decay * p
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * (g * g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)

    def state(self) -> dict:
        return {"t": self.t,
                "m": {k: v.copy() for k, v in self.m.items()},
                "v": {k: v.copy() for k, v in self.v.items()}}

    def load(self, state: dict) -> None:
        self.t = state["t"]
        self.m = {k: v.copy() for k, v in state["m"].items()}
        self.v = {k: v.copy() for k, v in state["v"].items()}


# --- shared loss pieces -------------------------------------------------------

def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and the softmax probabilities."""
    p = softmax(logits, axis=1)
    n = len(labels)
    loss = -np.mean(np.log(p[np.arange(n), labels] + 1e-300))
    return loss, p


def ce_grad(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """d(sum of per-sample CE)/dlogits, i.e. probs - onehot (no 1/n)."""
    d = probs.copy()
    d[np.arange(len(labels)), labels] -= 1.0
    return d


def concat_batches(batches: list[DomainBatch]):
    """Pool domain batches into one array; return (x, y, per-domain slices)."""
    xs = np.concatenate([b.inputs for b in batches])
    ys = np.concatenate([b.labels for b in batches])
    slices = []
    start = 0
    for b in batches:
        slices.append(slice(start, start + len(b)))
        start += len(b)
    return xs, ys, slices


def grad_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))


class Algorithm:
    """One instance owns the optimizer and any persistent state for one run.

    ``step`` consumes one DomainBatch per source domain, applies exactly one
    optimizer update to the model, and returns the loss decomposition.
    """

    name = "base"
    year = 0
    category = "learning_strategy"
    needs_discriminator = False
    needs_global_branch = False

    def __init__(self, cfg: AlgorithmConfig, seed: int = 0):
        self.cfg = cfg
        self.rng = np.random.default_rng(seed)
        self.step_index = 0
        self.optimizer: Adam | None = None

    # -- overridable pieces --------------------------------------------------
    def prepare(self, batches: list[DomainBatch], model: ModelBundle):
        """Draw any per-step randomness; must not mutate persistent state."""
        return None

    def loss_and_grads(self, model: ModelBundle, batches: list[DomainBatch],
                       task) -> UpdateReport:
        raise NotImplementedError

    def finish_step(self, model: ModelBundle, report: UpdateReport) -> None:
        """Commit persistent-state updates after a successful optimizer step."""

    def eval_state(self, model: ModelBundle):
        """Parameter state to evaluate with (ERM++ substitutes its EMA)."""
        return None

    # -- template ------------------------------------------------------------
    def _ensure_optimizer(self) -> Adam:
        if self.optimizer is None:
            self.optimizer = Adam(self.cfg.lr, weight_decay=self.cfg.weight_decay)
        return self.optimizer

    def current_lr(self) -> float:
        return self.cfg.lr

    def step(self, batches: list[DomainBatch], model: ModelBundle) -> UpdateReport:
        if not batches:
            raise BatchError("need at least one domain batch")
        for b in batches:
            if len(b) == 0:
                raise BatchError(f"empty batch for domain {b.domain_id}")
        task = self.prepare(batches, model)
        model.zero_grads()
        report = self.loss_and_grads(model, batches, task)
        report.step_index = self.step_index
        report.grad_norm = grad_norm(model.grads())
        if not report.is_finite():
            raise DivergenceError("non-finite loss", report=report)
        opt = self._ensure_optimizer()
        opt.lr = self.current_lr()
        opt.step(model.parameters(), model.grads())
        self.finish_step(model, report)
        self.step_index += 1
        return report


# --- registry ----------------------------------------------------------------

@dataclass(frozen=True)
class AlgorithmInfo:
    name: str
    year: int
    category: str
    cls: type = field(repr=False, compare=False, default=None)
    needs_discriminator: bool = False
    needs_global_branch: bool = False


_REGISTRY: dict[str, AlgorithmInfo] = {}


def register(cls: type) -> type:
    _REGISTRY[cls.name] = AlgorithmInfo(
        name=cls.name, year=cls.year, category=cls.category, cls=cls,
        needs_discriminator=cls.needs_discriminator,
        needs_global_branch=cls.needs_global_branch,
    )
    return cls


def canonical_name(name: str) -> str:
    return name.strip().lower().replace("++", "_pp").replace("-", "_")


def algorithm_info(name: str) -> AlgorithmInfo:
    key = canonical_name(name)
    if key not in _REGISTRY:
        raise RegistryError(f"unknown algorithm {name!r}; known: {sorted(_REGISTRY)}")
    return _REGISTRY[key]


def algorithm_names() -> list[str]:
    return sorted(_REGISTRY)


def create_algorithm(name: str, cfg: AlgorithmConfig | None = None,
                     seed: int = 0) -> Algorithm:
    """Instantiate a registered algorithm with fresh persistent state."""
    info = algorithm_info(name)
    return info.cls(cfg or AlgorithmConfig(), seed=seed)
