"""Feature-distribution alignment algorithms: CORAL, MMD, DANN, Fishr."""

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
from .erm_family import pooled_risks


def coral_penalty(features, slices):
    """Average over domain pairs of ||mu_i - mu_j||^2 + ||C_i - C_j||_F^2.

    Covariances use the unbiased (n - 1) estimator. Returns the penalty and
    its gradient w.r.t. the pooled feature matrix.
    """
    s = len(slices)
    mus, covs, cents = [], [], []
    for sl in slices:
        f = features[sl]
        if len(f) < 2:
            raise BatchError("covariance alignment needs >= 2 samples per domain")
        mu = f.mean(axis=0)
        cent = f - mu
        mus.append(mu)
        cents.append(cent)
        covs.append(cent.T @ cent / (len(f) - 1))
    npairs = s * (s - 1) // 2
    penalty = 0.0
    dmu = [np.zeros_like(mus[0]) for _ in range(s)]
    dcov = [np.zeros_like(covs[0]) for _ in range(s)]
    for i in range(s):
        for j in range(i + 1, s):
            mdiff = mus[i] - mus[j]
            cdiff = covs[i] - covs[j]
            penalty += float((mdiff ** 2).sum() + (cdiff ** 2).sum())
            dmu[i] += 2.0 * mdiff / npairs
            dmu[j] -= 2.0 * mdiff / npairs
            dcov[i] += 2.0 * cdiff / npairs
            dcov[j] -= 2.0 * cdiff / npairs
    penalty /= npairs
    dfeatures = np.zeros_like(features)
    for d, sl in enumerate(slices):
        n = sl.stop - sl.start
        dcent = 2.0 * cents[d] @ dcov[d] / (n - 1)
        dfeatures[sl] = dcent - dcent.mean(axis=0) + dmu[d] / n
    return penalty, dfeatures


def _sq_dists(a, b):
    a2 = (a ** 2).sum(axis=1)[:, None]
    b2 = (b ** 2).sum(axis=1)[None, :]
    return np.maximum(a2 + b2 - 2.0 * (a @ b.T), 0.0)


def gaussian_mmd2(a, b, bandwidths, want_grads=False):
    """Biased squared MMD with a summed Gaussian kernel ladder
    k(x, y) = sum_g exp(-g * ||x - y||^2). Optionally returns gradients."""
    gammas = np.asarray(bandwidths, dtype=np.float64)

    def kernel_and_weight(d2):
        k = np.zeros_like(d2)
        w = np.zeros_like(d2)
        for g in gammas:
            e = np.exp(-g * d2)
            k += e
            w += g * e
        return k, w

    daa = _sq_dists(a, a)
    dbb = _sq_dists(b, b)
    dab = _sq_dists(a, b)
    kaa, waa = kernel_and_weight(daa)
    kbb, wbb = kernel_and_weight(dbb)
    kab, wab = kernel_and_weight(dab)
    mmd2 = float(kaa.mean() + kbb.mean() - 2.0 * kab.mean())
    if not want_grads:
        return mmd2, None, None
    n, m = len(a), len(b)
    # d mean(Kaa)/da_c = -(4 / n^2) * (a_c * rowsum(Waa) - Waa @ a)
    ga = -(4.0 / n ** 2) * (a * waa.sum(axis=1)[:, None] - waa @ a)
    ga += (4.0 / (n * m)) * (a * wab.sum(axis=1)[:, None] - wab @ b)
    gb = -(4.0 / m ** 2) * (b * wbb.sum(axis=1)[:, None] - wbb @ b)
    gb += (4.0 / (n * m)) * (b * wab.sum(axis=0)[:, None] - wab.T @ a)
    return mmd2, ga, gb


@register
class CORAL(Algorithm):
    """Match per-domain feature means and covariances across source pairs."""

    name = "coral"
    year = 2016
    category = "representation_learning"

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        z, tape_full = model.logits(x, train=True)
        tape, _, features = tape_full
        loss, probs = cross_entropy(z, y)
        risks, _ = pooled_risks(z, y, slices)
        model.backward_logits(tape_full, ce_grad(probs, y) / len(y))
        penalty = 0.0
        if len(slices) > 1:
            penalty, dfeatures = coral_penalty(features, slices)
            if self.cfg.penalty_weight:
                model.backward_features(tape, self.cfg.penalty_weight * dfeatures)
        return UpdateReport(
            total_loss=loss + self.cfg.penalty_weight * penalty, task_loss=loss,
            penalty=penalty, per_domain_risks=risks, step_index=self.step_index,
        )


@register
class MMD(Algorithm):
    """Pairwise-average biased squared MMD between source feature sets."""

    name = "mmd"
    year = 2018
    category = "representation_learning"

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        z, tape_full = model.logits(x, train=True)
        tape, _, features = tape_full
        loss, probs = cross_entropy(z, y)
        risks, _ = pooled_risks(z, y, slices)
        model.backward_logits(tape_full, ce_grad(probs, y) / len(y))
        penalty = 0.0
        s = len(slices)
        if s > 1:
            npairs = s * (s - 1) // 2
            dfeatures = np.zeros_like(features)
            for i in range(s):
                for j in range(i + 1, s):
                    m2, gi, gj = gaussian_mmd2(
                        features[slices[i]], features[slices[j]],
                        self.cfg.mmd_bandwidths, want_grads=True,
                    )
                    penalty += m2 / npairs
                    dfeatures[slices[i]] += gi / npairs
                    dfeatures[slices[j]] += gj / npairs
            if self.cfg.penalty_weight:
                model.backward_features(tape, self.cfg.penalty_weight * dfeatures)
        return UpdateReport(
            total_loss=loss + self.cfg.penalty_weight * penalty, task_loss=loss,
            penalty=float(penalty), per_domain_risks=risks,
            step_index=self.step_index,
        )


@register
class DANN(Algorithm):
    """Domain-adversarial training via gradient reversal.

    The discriminator minimizes domain cross-entropy on the features; the
    extractor receives that gradient negated and scaled by the penalty
    weight, while the task path is plain ERM.
    """

    name = "dann"
    year = 2016
    category = "representation_learning"
    needs_discriminator = True

    def reversal_weight(self) -> float:
        lam = self.cfg.penalty_weight
        if self.cfg.dann_anneal:
            p = min(1.0, self.step_index / max(1, self.cfg.total_steps))
            lam = lam * (2.0 / (1.0 + np.exp(-10.0 * p)) - 1.0)
        return lam

    def loss_and_grads(self, model, batches, task):
        if model.discriminator is None:
            raise BatchError("DANN requires a model with a discriminator")
        x, y, slices = concat_batches(batches)
        domain_labels = np.concatenate([
            np.full(sl.stop - sl.start, d, dtype=np.int64)
            for d, sl in enumerate(slices)
        ])
        z, tape_full = model.logits(x, train=True)
        tape, _, features = tape_full
        task_loss, probs = cross_entropy(z, y)
        risks, _ = pooled_risks(z, y, slices)
        model.backward_logits(tape_full, ce_grad(probs, y) / len(y))

        dz_logits, disc_cache = model.discriminator.forward(features, train=True)
        domain_loss, domain_probs = cross_entropy(dz_logits, domain_labels)
        ddomain = ce_grad(domain_probs, domain_labels) / len(domain_labels)
        dfeatures_domain = model.discriminator.backward(disc_cache, ddomain)
        lam = self.reversal_weight()
        if lam:
            model.backward_features(tape, -lam * dfeatures_domain)
        return UpdateReport(
            total_loss=task_loss + lam * domain_loss, task_loss=task_loss,
            penalty=float(domain_loss), per_domain_risks=risks,
            step_index=self.step_index,
        )


@register
class Fishr(Algorithm):
    """Align per-domain variances of per-sample classifier-head gradients.

    Variances are EMA-smoothed per domain; the penalty is the mean squared
    distance of each domain's variance vector to the cross-domain mean. The
    gradient of the penalty is computed in closed form through the
    per-sample gradients (p - y) (x) f of the affine head.
    """

    name = "fishr"
    year = 2023
    category = "learning_strategy"

    def __init__(self, cfg, seed: int = 0):
        super().__init__(cfg, seed)
        self.ema_w: list[np.ndarray] | None = None
        self.ema_b: list[np.ndarray] | None = None
        self._pending: tuple | None = None

    def loss_and_grads(self, model, batches, task):
        x, y, slices = concat_batches(batches)
        z, tape_full = model.logits(x, train=True)
        tape, cls_cache, features = tape_full
        loss, probs = cross_entropy(z, y)
        risks, _ = pooled_risks(z, y, slices)
        n, c = probs.shape
        s = len(slices)
        decay = self.cfg.fishr_ema_decay if self.ema_w is not None else 0.0

        delta = ce_grad(probs, y)  # (N, C) per-sample head-bias gradients
        # per-sample weight gradient is the outer product features x delta;
        # per-domain variance over samples, component-wise
        var_w, var_b, mean_gw, mean_gb = [], [], [], []
        for sl in slices:
            f, dl = features[sl], delta[sl]
            gw = f[:, :, None] * dl[:, None, :]  # (n_d, F, C)
            mw = gw.mean(axis=0)
            mb = dl.mean(axis=0)
            var_w.append(((gw - mw) ** 2).mean(axis=0))
            var_b.append(((dl - mb) ** 2).mean(axis=0))
            mean_gw.append(mw)
            mean_gb.append(mb)
        v_w = [decay * self.ema_w[d] + (1 - decay) * var_w[d] if self.ema_w is not None
               else var_w[d] for d in range(s)]
        v_b = [decay * self.ema_b[d] + (1 - decay) * var_b[d] if self.ema_b is not None
               else var_b[d] for d in range(s)]
        vbar_w = np.mean(v_w, axis=0)
        vbar_b = np.mean(v_b, axis=0)
        penalty = float(
            np.mean([((vw - vbar_w) ** 2).sum() + ((vb - vbar_b) ** 2).sum()
                     for vw, vb in zip(v_w, v_b)])
        )
        self._pending = (v_w, v_b)

        lam = self.cfg.penalty_weight
        dz_pen = np.zeros_like(probs)
        dfeat_pen = np.zeros_like(features)
        scale_through_ema = 1.0 - decay if self.ema_w is not None else 1.0
        for d, sl in enumerate(slices):
            nd = sl.stop - sl.start
            f, dl = features[sl], delta[sl]
            gw = f[:, :, None] * dl[:, None, :]
            coef_w = (2.0 / s) * (v_w[d] - vbar_w) * scale_through_ema * (2.0 / nd)
            coef_b = (2.0 / s) * (v_b[d] - vbar_b) * scale_through_ema * (2.0 / nd)
            a_w = coef_w[None] * (gw - mean_gw[d])  # dP/d(gw_i)
            a_b = coef_b[None] * (dl - mean_gb[d])  # dP/d(gb_i)
            ddelta = np.einsum("nfc,nf->nc", a_w, f) + a_b
            dfeat_pen[sl] += np.einsum("nfc,nc->nf", a_w, dl)
            # chain delta = softmax(z) - onehot through the softmax Jacobian
            p = probs[sl]
            dz_pen[sl] += p * (ddelta - (ddelta * p).sum(axis=1, keepdims=True))
        model.backward_logits(tape_full, ce_grad(probs, y) / n + lam * dz_pen)
        if lam:
            model.backward_features(tape, lam * dfeat_pen)
        return UpdateReport(total_loss=loss + lam * penalty, task_loss=loss,
                            penalty=penalty, per_domain_risks=risks,
                            step_index=self.step_index)

    def finish_step(self, model, report):
        self.ema_w, self.ema_b = self._pending
        self._pending = None
