"""Meta-learning style updates: Fish and MLDG."""

from __future__ import annotations

import numpy as np

from ..errors import BatchError, DivergenceError
from .base import (
    Algorithm,
    UpdateReport,
    ce_grad,
    concat_batches,
    cross_entropy,
    grad_norm,
    register,
)
from .erm_family import pooled_risks


@register
class Fish(Algorithm):
    """Inner SGD passes over the domains in random order on a cloned model,
    then interpolate: theta <- theta + eps * (theta_tilde - theta)."""

    name = "fish"
    year = 2022
    category = "learning_strategy"

    def _inner_loss_and_grads(self, clone, batch) -> float:
        """One domain's loss; leaves its gradients on the clone."""
        z, tape = clone.logits(batch.inputs, train=True)
        loss, probs = cross_entropy(z, batch.labels)
        clone.zero_grads()
        clone.backward_logits(tape, ce_grad(probs, batch.labels) / len(batch))
        return float(loss)

    def step(self, batches, model):
        if not batches:
            raise BatchError("need at least one domain batch")
        for b in batches:
            if len(b) == 0:
                raise BatchError(f"empty batch for domain {b.domain_id}")
        order = self.rng.permutation(len(batches))
        clone = model.clone()
        inner_losses = [0.0] * len(batches)
        for d in order:
            batch = batches[int(d)]
            inner_losses[int(d)] = self._inner_loss_and_grads(clone, batch)
            params = clone.parameters()
            grads = clone.grads()
            for name, p in params.items():
                p -= self.cfg.lr * grads[name]
        eps = self.cfg.fish_meta_lr
        base, inner = model.state(), clone.state()
        for key in base["params"]:
            base["params"][key] += eps * (inner["params"][key] - base["params"][key])
        for key in base["buffers"]:
            base["buffers"][key] += eps * (inner["buffers"][key] - base["buffers"][key])
        model.load_state(base)
        mean_loss = float(np.mean(inner_losses))
        report = UpdateReport(total_loss=mean_loss, task_loss=mean_loss, penalty=0.0,
                              per_domain_risks=inner_losses,
                              step_index=self.step_index)
        if not report.is_finite():
            raise DivergenceError("non-finite loss", report=report)
        self.step_index += 1
        return report


@register
class MLDG(Algorithm):
    """Meta-split the sources; evaluate the meta-test loss after a virtual
    inner step and differentiate it first-order (second order via a
    finite-difference Hessian-vector product behind a flag)."""

    name = "mldg"
    year = 2018
    category = "learning_strategy"

    def prepare(self, batches, model):
        if len(batches) < 2:
            raise BatchError("MLDG needs at least 2 source domains")
        order = self.rng.permutation(len(batches))
        return {"meta_test": [int(order[0])],
                "meta_train": [int(i) for i in order[1:]]}

    def _pooled_ce_grads(self, bundle, batches):
        x, y, _ = concat_batches(batches)
        z, tape = bundle.logits(x, train=True)
        loss, probs = cross_entropy(z, y)
        bundle.zero_grads()
        bundle.backward_logits(tape, ce_grad(probs, y) / len(y))
        return float(loss), {k: v.copy() for k, v in bundle.grads().items()}

    def loss_and_grads(self, model, batches, task):
        train_batches = [batches[i] for i in task["meta_train"]]
        test_batches = [batches[i] for i in task["meta_test"]]
        loss_tr, g_tr = self._pooled_ce_grads(model, train_batches)

        inner = model.clone()
        inner_params = inner.parameters()
        for name, p in inner_params.items():
            p -= self.cfg.mldg_inner_lr * g_tr[name]
        loss_te, g_te = self._pooled_ce_grads(inner, test_batches)

        beta = self.cfg.mldg_beta
        model.zero_grads()
        grads = model.grads()
        for name, g in grads.items():
            np.copyto(g, g_tr[name] + beta * g_te[name])
        if self.cfg.mldg_second_order and self.cfg.mldg_inner_lr > 0 and beta > 0:
            hvp = self._hvp_meta_train(model, train_batches, g_te)
            for name, g in grads.items():
                g -= self.cfg.mldg_inner_lr * beta * hvp[name]
        risks = [loss_tr, loss_te]
        return UpdateReport(total_loss=loss_tr + beta * loss_te, task_loss=loss_tr,
                            penalty=loss_te, per_domain_risks=risks,
                            step_index=self.step_index)

    def _hvp_meta_train(self, model, train_batches, vector):
        """Central-difference Hessian-vector product of the meta-train loss."""
        vnorm = grad_norm(vector)
        if vnorm == 0:
            return {k: np.zeros_like(v) for k, v in vector.items()}
        eps = 1e-3 / vnorm
        plus = model.clone()
        for name, p in plus.parameters().items():
            p += eps * vector[name]
        _, g_plus = self._pooled_ce_grads(plus, train_batches)
        minus = model.clone()
        for name, p in minus.parameters().items():
            p -= eps * vector[name]
        _, g_minus = self._pooled_ce_grads(minus, train_batches)
        return {k: (g_plus[k] - g_minus[k]) / (2 * eps) for k in vector}
