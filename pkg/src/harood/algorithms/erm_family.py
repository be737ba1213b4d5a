"""Pooled-risk algorithms: ERM and its reweighted / regularized variants.

All of them do one pooled forward pass and derive per-domain risks from
logit slices, so every reduction-to-ERM identity holds exactly (batch-norm
statistics included).
"""

from __future__ import annotations

import numpy as np

from ..errors import BatchError
from ..models.layers import softmax
from .base import (
    Algorithm,
    UpdateReport,
    ce_grad,
    concat_batches,
    cross_entropy,
    register,
)


def pooled_risks(logits, labels, slices):
    """Per-domain mean CE and softmax probs from one pooled forward."""
    probs = softmax(logits, axis=1)
    risks = []
    for sl in slices:
        p = probs[sl]
        y = labels[sl]
        risks.append(float(-np.mean(np.log(p[np.arange(len(y)), y] + 1e-300))))
    return risks, probs


def weighted_risk_grad(probs, labels, slices, coeffs):
    """dlogits for sum_d coeffs[d] * risk_d (risk_d = mean CE of slice d)."""
    dz = np.zeros_like(probs)
    for sl, c in zip(slices, coeffs):
        d = ce_grad(probs[sl], labels[sl])
        dz[sl] = (c / (sl.stop - sl.start)) * d
    return dz


def dro_reweight(prior, risks, eta):
    """Exponentiated-gradient step on the domain weights, renormalized."""
    w = np.asarray(prior, dtype=np.float64) * np.exp(eta * np.asarray(risks))
    return w / w.sum()


def masked_mean_gradient(stacked, tau):
    """ANDMask rule: keep a component iff |mean of signs| >= tau; kept
    components take the cross-domain mean, the rest become zero."""
    mask = np.abs(np.sign(stacked).mean(axis=0)) >= tau
    return mask * stacked.mean(axis=0)


@register
class ERM(Algorithm):
    """Minimize mean cross-entropy over the pooled source batches."""

    name = "erm"
    year = 1999
    category = "learning_strategy"

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        z, tape = model.logits(x, train=True)
        loss, probs = cross_entropy(z, y)
        model.backward_logits(tape, ce_grad(probs, y) / len(y))
        risks, _ = pooled_risks(z, y, slices)
        return UpdateReport(total_loss=loss, task_loss=loss, penalty=0.0,
                            per_domain_risks=risks, step_index=self.step_index)


@register
class ERMPlusPlus(ERM):
    """ERM with linear learning-rate warmup and a parameter EMA used for
    evaluation; no early stopping within the epoch budget."""

    name = "erm_pp"
    year = 2025
    category = "learning_strategy"

    def __init__(self, cfg, seed: int = 0):
        super().__init__(cfg, seed)
        self.ema: dict[str, np.ndarray] | None = None

    def current_lr(self) -> float:
        warmup_steps = int(self.cfg.erm_pp_warmup_frac * self.cfg.total_steps)
        if warmup_steps <= 0 or self.step_index >= warmup_steps:
            return self.cfg.lr
        return self.cfg.lr * (self.step_index + 1) / warmup_steps

    def prepare(self, batches, model):
        if self.ema is None:
            # seed the average with the pre-update parameters
            self.ema = {k: v.copy() for k, v in model.parameters().items()}
        return None

    def finish_step(self, model, report):
        decay = self.cfg.erm_pp_ema_decay
        for k, v in model.parameters().items():
            self.ema[k] *= decay
            self.ema[k] += (1.0 - decay) * v

    def eval_state(self, model):
        if self.ema is None:
            return None
        return {"params": {k: v.copy() for k, v in self.ema.items()}, "buffers": {}}


@register
class Mixup(Algorithm):
    """Convexly mix inputs of cross-domain pairs; mix the losses alike."""

    name = "mixup"
    year = 2020
    category = "data_manipulation"

    def prepare(self, batches, model):
        s = len(batches)
        order = self.rng.permutation(s)
        pairs = [(int(order[i]), int(order[(i + 1) % s])) for i in range(s)] \
            if s > 1 else [(0, 0)]
        lams = [float(self.rng.beta(self.cfg.mixup_alpha, self.cfg.mixup_alpha))
                for _ in pairs]
        return {"pairs": pairs, "lams": lams}

    def loss_and_grads(self, model, batches, task):
        pieces, yi_all, yj_all, lams = [], [], [], []
        slices, start = [], 0
        for (i, j), lam in zip(task["pairs"], task["lams"]):
            n = min(len(batches[i]), len(batches[j]))
            pieces.append(lam * batches[i].inputs[:n] + (1 - lam) * batches[j].inputs[:n])
            yi_all.append(batches[i].labels[:n])
            yj_all.append(batches[j].labels[:n])
            lams.append(lam)
            slices.append(slice(start, start + n))
            start += n
        x = np.concatenate(pieces)
        z, tape = model.logits(x, train=True)
        probs = softmax(z, axis=1)
        total = 0.0
        dz = np.zeros_like(probs)
        risks = []
        npairs = len(slices)
        for sl, lam, yi, yj in zip(slices, lams, yi_all, yj_all):
            n = sl.stop - sl.start
            p = probs[sl]
            li = -np.mean(np.log(p[np.arange(n), yi] + 1e-300))
            lj = -np.mean(np.log(p[np.arange(n), yj] + 1e-300))
            pair_loss = lam * li + (1 - lam) * lj
            total += pair_loss / npairs
            risks.append(float(pair_loss))
            dz[sl] = (lam * ce_grad(p, yi) + (1 - lam) * ce_grad(p, yj)) / (n * npairs)
        model.backward_logits(tape, dz)
        return UpdateReport(total_loss=float(total), task_loss=float(total),
                            penalty=0.0, per_domain_risks=risks,
                            step_index=self.step_index)


@register
class GroupDRO(Algorithm):
    """Exponentiated-gradient reweighting toward the worst source domain."""

    name = "groupdro"
    year = 2020
    category = "learning_strategy"

    def __init__(self, cfg, seed: int = 0):
        super().__init__(cfg, seed)
        self.weights: np.ndarray | None = None
        self._pending: np.ndarray | None = None

    def loss_and_grads(self, model, batches, task):
        s = len(batches)
        prior = self.weights if self.weights is not None else np.full(s, 1.0 / s)
        if len(prior) != s:
            raise BatchError("domain count changed across GroupDRO steps")
        x, y, slices = concat_batches(batches)
        z, tape = model.logits(x, train=True)
        risks, probs = pooled_risks(z, y, slices)
        w = dro_reweight(prior, risks, self.cfg.dro_eta)
        self._pending = w
        loss = float(np.dot(w, risks))
        model.backward_logits(tape, weighted_risk_grad(probs, y, slices, w))
        return UpdateReport(total_loss=loss, task_loss=loss, penalty=0.0,
                            per_domain_risks=risks, step_index=self.step_index)

    def finish_step(self, model, report):
        self.weights = self._pending
        self._pending = None


@register
class VREx(Algorithm):
    """Penalize the variance of per-domain risks.

    The penalty weight is 1 until ``vrex_warmup_steps``, then jumps to the
    configured value.
    """

    name = "vrex"
    year = 2021
    category = "representation_learning"

    def effective_weight(self) -> float:
        if self.step_index < self.cfg.vrex_warmup_steps:
            return 1.0
        return self.cfg.penalty_weight

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        z, tape = model.logits(x, train=True)
        risks, probs = pooled_risks(z, y, slices)
        r = np.asarray(risks)
        mean = float(r.mean())
        penalty = float(((r - mean) ** 2).mean())
        lam = self.effective_weight()
        s = len(risks)
        coeffs = 1.0 / s + lam * (2.0 / s) * (r - mean)
        model.backward_logits(tape, weighted_risk_grad(probs, y, slices, coeffs))
        return UpdateReport(total_loss=mean + lam * penalty, task_loss=mean,
                            penalty=penalty, per_domain_risks=risks,
                            step_index=self.step_index)


@register
class URM(Algorithm):
    """Uniform-risk regularizer: a temperature-softened worst-domain risk.

    penalty = T * log-mean-exp(risk / T) - mean(risk); with T -> 0 this
    approaches max(risk) - mean(risk), and it vanishes for equal risks.
    """

    name = "urm"
    year = 2024
    category = "learning_strategy"

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        z, tape = model.logits(x, train=True)
        risks, probs = pooled_risks(z, y, slices)
        r = np.asarray(risks)
        s = len(risks)
        t = max(self.cfg.urm_temperature, 1e-12)
        shifted = r / t
        m = shifted.max()
        lse = t * (m + np.log(np.mean(np.exp(shifted - m))))
        mean = float(r.mean())
        penalty = float(lse - mean)
        lam = self.cfg.penalty_weight
        soft = np.exp(shifted - m)
        soft = soft / soft.sum()
        coeffs = (1.0 - lam) / s + lam * soft
        model.backward_logits(tape, weighted_risk_grad(probs, y, slices, coeffs))
        return UpdateReport(total_loss=mean + lam * penalty, task_loss=mean,
                            penalty=penalty, per_domain_risks=risks,
                            step_index=self.step_index)


@register
class ANDMask(Algorithm):
    """Keep only gradient components whose sign agrees across domains.

    A component survives iff |mean_d sign(g_d)| >= tau; surviving components
    take the cross-domain mean gradient, everything else is zeroed.
    """

    name = "andmask"
    year = 2021
    category = "learning_strategy"

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        z, tape = model.logits(x, train=True)
        risks, probs = pooled_risks(z, y, slices)
        s = len(batches)
        per_domain: list[dict[str, np.ndarray]] = []
        for sl in slices:
            dz = np.zeros_like(probs)
            dz[sl] = ce_grad(probs[sl], y[sl]) / (sl.stop - sl.start)
            model.zero_grads()
            model.backward_logits(tape, dz)
            per_domain.append({k: v.copy() for k, v in model.grads().items()})
        model.zero_grads()
        grads = model.grads()
        for name, g in grads.items():
            stack = np.stack([pd[name] for pd in per_domain])
            np.copyto(g, masked_mean_gradient(stack, self.cfg.andmask_tau))
        mean_risk = float(np.mean(risks))
        return UpdateReport(total_loss=mean_risk, task_loss=mean_risk, penalty=0.0,
                            per_domain_risks=risks, step_index=self.step_index)
