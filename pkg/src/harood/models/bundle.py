"""Model bundle: feature extractor + classifier head, with optional domain
discriminator and a parallel global-feature branch."""

from __future__ import annotations

import copy

import numpy as np

from ..errors import ConfigError, ShapeError
from .config import BackboneConfig
from .backbones import build_extractor
from .layers import Dense, Module, ReLU, Sequential


def _scaled_config(config: BackboneConfig, factor: float) -> BackboneConfig:
    if config.family == "cnn":
        w1, w2 = config.widths
        widths = (max(1, int(round(w1 * factor))), max(1, int(round(w2 * factor))))
        return BackboneConfig(
            family="cnn", input_shape=config.input_shape, capacity=config.capacity,
            cnn_widths=widths, kernel_size=config.kernel,
        )
    d = config.model_dim
    scaled = max(config.heads, int(round(d * factor / config.heads)) * config.heads)
    return BackboneConfig(
        family="transformer", input_shape=config.input_shape,
        capacity=config.capacity, d_model=scaled, heads=config.heads,
        encoder_blocks=config.encoder_blocks,
        use_positional_encoding=config.use_positional_encoding,
    )


class ModelBundle:
    """Everything one training run mutates: extractor, head, optional parts."""

    def __init__(self, config: BackboneConfig, class_count: int, seed: int = 0,
                 discriminator_domains: int | None = None,
                 lag_branch_factor: float | None = None):
        if lag_branch_factor is not None and lag_branch_factor <= 0:
            raise ConfigError("global-branch width factor must be > 0")
        self.config = config
        self.class_count = class_count
        self.seed = seed
        self.discriminator_domains = discriminator_domains
        self.lag_branch_factor = lag_branch_factor

        ss = np.random.SeedSequence(seed)
        rngs = [np.random.default_rng(s) for s in ss.spawn(4)]
        self.extractor: Module = build_extractor(config, rngs[0])
        self.feature_dim = config.feature_dim

        self.branch: Module | None = None
        self.branch_dim = 0
        if lag_branch_factor is not None:
            branch_cfg = _scaled_config(config, lag_branch_factor)
            self.branch = Sequential(
                [build_extractor(branch_cfg, rngs[2]),
                 Dense(branch_cfg.feature_dim, self.feature_dim, rngs[2], name="proj")],
                name="branch",
            )
            self.branch_dim = self.feature_dim

        self.classifier = Dense(self.feature_dim + self.branch_dim, class_count,
                                rngs[1], name="classifier")

        self.discriminator: Module | None = None
        if discriminator_domains is not None:
            hidden = 64
            self.discriminator = Sequential(
                [Dense(self.feature_dim + self.branch_dim, hidden, rngs[3], name="fc1"),
                 ReLU(),
                 Dense(hidden, discriminator_domains, rngs[3], name="fc2")],
                name="disc",
            )

    # -- shape / sanity ------------------------------------------------------
    def _check_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 4 or tuple(x.shape[1:]) != tuple(self.config.input_shape):
            raise ShapeError(
                f"batch shape {x.shape} does not match input shape "
                f"{self.config.input_shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ShapeError("batch contains non-finite values")
        return x

    # -- forward -------------------------------------------------------------
    def forward_features(self, x, train: bool):
        """Features (concatenated with the global branch when present)."""
        x = self._check_batch(x)
        f_local, tape_local = self.extractor.forward(x, train)
        if self.branch is None:
            return f_local, (tape_local, None)
        f_global, tape_branch = self.branch.forward(x, train)
        return np.concatenate([f_local, f_global], axis=1), (tape_local, tape_branch)

    def classify(self, features):
        return self.classifier.forward(features, train=True)

    def logits(self, x, train: bool):
        features, tape = self.forward_features(x, train)
        z, cls_cache = self.classify(features)
        return z, (tape, cls_cache, features)

    def predict(self, x) -> np.ndarray:
        """Deterministic evaluation-mode logits."""
        z, _ = self.logits(x, train=False)
        return z

    # -- backward ------------------------------------------------------------
    def backward_features(self, tape, dfeatures) -> None:
        tape_local, tape_branch = tape
        if self.branch is None:
            self.extractor.backward(tape_local, dfeatures)
            return
        self.extractor.backward(tape_local, dfeatures[:, : self.feature_dim])
        self.branch.backward(tape_branch, dfeatures[:, self.feature_dim :])

    def backward_logits(self, tape_full, dlogits) -> None:
        tape, cls_cache, _ = tape_full
        dfeatures = self.classifier.backward(cls_cache, dlogits)
        self.backward_features(tape, dfeatures)

    # -- parameter plumbing ----------------------------------------------------
    def _modules(self) -> dict[str, Module]:
        mods = {"extractor": self.extractor, "classifier": self.classifier}
        if self.branch is not None:
            mods["branch"] = self.branch
        if self.discriminator is not None:
            mods["discriminator"] = self.discriminator
        return mods

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for mname, mod in self._modules().items():
            for pname, arr in mod.params().items():
                out[f"{mname}.{pname}"] = arr
        return out

    def grads(self) -> dict[str, np.ndarray]:
        out = {}
        for mname, mod in self._modules().items():
            for pname, arr in mod.grads().items():
                out[f"{mname}.{pname}"] = arr
        return out

    def zero_grads(self) -> None:
        for mod in self._modules().values():
            mod.zero_grads()

    def state(self) -> dict:
        return {
            "params": {k: v.copy() for k, v in self.parameters().items()},
            "buffers": {
                f"{mname}.{bname}": arr.copy()
                for mname, mod in self._modules().items()
                for bname, arr in mod.buffers().items()
            },
        }

    def load_state(self, state: dict) -> None:
        params = self.parameters()
        for k, v in state["params"].items():
            np.copyto(params[k], v)
        buffers = {
            f"{mname}.{bname}": arr
            for mname, mod in self._modules().items()
            for bname, arr in mod.buffers().items()
        }
        for k, v in state.get("buffers", {}).items():
            np.copyto(buffers[k], v)

    def clone(self) -> "ModelBundle":
        return copy.deepcopy(self)

    def parameter_count(self) -> int:
        return sum(v.size for v in self.parameters().values())


def build_model(config: BackboneConfig, class_count: int, seed: int = 0,
                discriminator_domains: int | None = None,
                lag_branch_factor: float | None = None) -> ModelBundle:
    return ModelBundle(config, class_count, seed=seed,
                       discriminator_domains=discriminator_domains,
                       lag_branch_factor=lag_branch_factor)


def attach_lag_branch(model: ModelBundle, width_factor: float = 0.5,
                      seed: int | None = None) -> ModelBundle:
    """Return a bundle with a parallel reduced-width extractor whose output
    concatenates with the main features; the classifier is rebuilt for the
    widened input. Main extractor (and discriminator) weights are kept."""
    if model.branch is not None:
        raise ConfigError("model already has a global branch")
    new = ModelBundle(
        model.config, model.class_count,
        seed=model.seed if seed is None else seed,
        discriminator_domains=model.discriminator_domains,
        lag_branch_factor=width_factor,
    )
    old_params = model.parameters()
    new_params = new.parameters()
    for key, value in old_params.items():
        if key.startswith("extractor.") and key in new_params:
            np.copyto(new_params[key], value)
    return new


def forward_features(model: ModelBundle, batch) -> np.ndarray:
    """Evaluation-mode feature matrix for a batch."""
    features, _ = model.forward_features(batch, train=False)
    return features


def predict_logits(model: ModelBundle, batch) -> np.ndarray:
    """Evaluation-mode logits for a batch."""
    return model.predict(batch)
