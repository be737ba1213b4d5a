"""Representation self-challenging and the two HAR-oriented methods."""

from __future__ import annotations

import numpy as np

from ..errors import BatchError, ConfigError
from .base import (
    Algorithm,
    UpdateReport,
    ce_grad,
    concat_batches,
    cross_entropy,
    register,
)
from .erm_family import pooled_risks


@register
class RSC(Algorithm):
    """Representation self-challenging.

    For a random fraction of the pooled batch, the most salient feature
    units (feature times true-class weight) are zeroed and the loss is
    computed on the masked features; the remaining samples keep their
    unmasked features. Mask selection is treated as constant under the
    gradient.
    """

    name = "rsc"
    year = 2020
    category = "learning_strategy"

    def prepare(self, batches, model):
        n = sum(len(b) for b in batches)
        n_challenged = int(round(self.cfg.rsc_batch_pct * n))
        challenged = self.rng.choice(n, size=n_challenged, replace=False)
        return {"challenged": np.sort(challenged)}

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        features, tape = model.forward_features(x, train=True)
        w = model.classifier._params["w"]  # (F, C)
        n, f_dim = features.shape
        k = int(np.ceil(self.cfg.rsc_feature_pct * f_dim)) \
            if self.cfg.rsc_feature_pct > 0 else 0
        mask = np.ones_like(features)
        challenged = task["challenged"]
        if k > 0 and len(challenged) > 0:
            saliency = features[challenged] * w[:, y[challenged]].T
            top = np.argpartition(saliency, f_dim - k, axis=1)[:, f_dim - k:]
            rows = np.repeat(challenged, k)
            mask[rows, top.ravel()] = 0.0
        masked = features * mask
        z, cls_cache = model.classifier.forward(masked, train=True)
        loss, probs = cross_entropy(z, y)
        risks, _ = pooled_risks(z, y, slices)
        dmasked = model.classifier.backward(cls_cache, ce_grad(probs, y) / n)
        model.backward_features(tape, dmasked * mask)
        return UpdateReport(total_loss=loss, task_loss=loss, penalty=0.0,
                            per_domain_risks=risks, step_index=self.step_index)


def augment_jitter(x, rng, std):
    if std == 0:
        return x.copy()
    return x + rng.normal(0.0, std, size=x.shape)


def augment_scaling(x, rng, scale_range):
    if scale_range == 0:
        return x.copy()
    factors = rng.uniform(1.0 - scale_range, 1.0 + scale_range, size=(len(x), 1, 1, 1))
    return x * factors


def augment_channel_permutation(x, rng):
    out = np.empty_like(x)
    for i in range(len(x)):
        out[i] = x[i, rng.permutation(x.shape[1])]
    return out


def augment_time_segment_permutation(x, rng, segments=4):
    t = x.shape[3]
    bounds = np.linspace(0, t, segments + 1, dtype=np.int64)
    out = np.empty_like(x)
    for i in range(len(x)):
        order = rng.permutation(segments)
        pos = 0
        for seg in order:
            lo, hi = bounds[seg], bounds[seg + 1]
            out[i, :, :, pos : pos + hi - lo] = x[i, :, :, lo:hi]
            pos += hi - lo
    return out


AUGMENTATIONS = {
    "jitter": lambda x, rng, cfg: augment_jitter(x, rng, cfg.ddlearn_jitter_std),
    "scaling": lambda x, rng, cfg: augment_scaling(x, rng, cfg.ddlearn_scale_range),
    "channel_permutation": lambda x, rng, cfg: augment_channel_permutation(x, rng),
    "time_segment_permutation":
        lambda x, rng, cfg: augment_time_segment_permutation(x, rng),
}


def _normalize_rows(z):
    norms = np.sqrt((z ** 2).sum(axis=1, keepdims=True)) + 1e-12
    return z / norms, norms


@register
class DDLearn(Algorithm):
    """Supervised CE on originals plus a view-consistency term and a
    diversity-preservation term on L2-normalized features of augmented
    views: views of one sample should agree, while the mean embeddings of
    distinct augmentation types should stay apart."""

    name = "ddlearn"
    year = 2023
    category = "data_manipulation"

    def prepare(self, batches, model):
        names = list(self.cfg.ddlearn_augmentations)
        for name in names:
            if name not in AUGMENTATIONS:
                raise ConfigError(f"unknown augmentation {name!r}; "
                                  f"known: {sorted(AUGMENTATIONS)}")
        x, y, slices = concat_batches(batches)
        views = [AUGMENTATIONS[name](x, self.rng, self.cfg) for name in names]
        return {"views": views}

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        z, tape_full = model.logits(x, train=True)
        loss, probs = cross_entropy(z, y)
        risks, _ = pooled_risks(z, y, slices)
        model.backward_logits(tape_full, ce_grad(probs, y) / len(y))

        lam = self.cfg.penalty_weight
        views = task["views"]
        a = len(views)
        penalty = 0.0
        if a >= 2:
            feats, tapes, units, norms = [], [], [], []
            for v in views:
                f, tape = model.forward_features(v, train=True)
                u, nr = _normalize_rows(f)
                feats.append(f)
                tapes.append(tape)
                units.append(u)
                norms.append(nr)
            n = len(y)
            npairs = a * (a - 1) // 2
            dunits = [np.zeros_like(u) for u in units]
            agree = 0.0
            diversity = 0.0
            for i in range(a):
                for j in range(i + 1, a):
                    diff = units[i] - units[j]
                    agree += float((diff ** 2).sum()) / (n * npairs)
                    dunits[i] += 2.0 * diff / (n * npairs)
                    dunits[j] -= 2.0 * diff / (n * npairs)
                    mdiff = units[i].mean(axis=0) - units[j].mean(axis=0)
                    diversity += float((mdiff ** 2).sum()) / npairs
                    dunits[i] -= 2.0 * mdiff / (n * npairs)
                    dunits[j] += 2.0 * mdiff / (n * npairs)
            penalty = agree - diversity
            if lam:
                for u, nr, du, tape in zip(units, norms, dunits, tapes):
                    df = (du - u * (du * u).sum(axis=1, keepdims=True)) / nr
                    model.backward_features(tape, lam * df)
        return UpdateReport(total_loss=loss + lam * penalty, task_loss=loss,
                            penalty=float(penalty), per_domain_risks=risks,
                            step_index=self.step_index)


def lag_alignment(local, glob, labels, slices):
    """Mean over domains of the mean over present classes of the squared
    distance between per-class local and global feature means. Returns the
    penalty and its gradient w.r.t. the concatenated [local || global]."""
    s = len(slices)
    f_dim = local.shape[1]
    penalty = 0.0
    dfeatures = np.zeros((local.shape[0], 2 * f_dim))
    for sl in slices:
        y_d = labels[sl]
        classes = np.unique(y_d)
        for c in classes:
            rows = sl.start + np.flatnonzero(y_d == c)
            diff = local[rows].mean(axis=0) - glob[rows].mean(axis=0)
            penalty += float((diff ** 2).sum()) / (len(classes) * s)
            coeff = 2.0 * diff / (len(classes) * s * len(rows))
            dfeatures[rows, :f_dim] += coeff
            dfeatures[rows, f_dim:] -= coeff
    return penalty, dfeatures


@register
class LAG(Algorithm):
    """Classify on [local || global] features; align per-class local and
    global feature means within each source domain."""

    name = "lag"
    year = 2022
    category = "representation_learning"
    needs_global_branch = True

    def loss_and_grads(self, model, batches, task):
        if model.branch is None:
            raise BatchError("LAG requires a model with a global branch")
        x, y, slices = concat_batches(batches)
        z, tape_full = model.logits(x, train=True)
        tape, _, features = tape_full
        loss, probs = cross_entropy(z, y)
        risks, _ = pooled_risks(z, y, slices)
        model.backward_logits(tape_full, ce_grad(probs, y) / len(y))

        f_dim = model.feature_dim
        weight = self.cfg.lag_align_weight
        penalty, dfeatures = lag_alignment(features[:, :f_dim], features[:, f_dim:],
                                           y, slices)
        if weight:
            model.backward_features(tape, weight * dfeatures)
        return UpdateReport(total_loss=loss + weight * penalty, task_loss=loss,
                            penalty=penalty, per_domain_risks=risks,
                            step_index=self.step_index)
