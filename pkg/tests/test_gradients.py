"""Gradient fidelity: analytic gradients vs 64-bit central finite
differences on a 2-domain toy model (relative error <= 1e-4)."""

import numpy as np
import pytest

from conftest import TOY_CLASSES, toy_backbone, toy_batches
from harood.algorithms import AlgorithmConfig, create_algorithm, cross_entropy
from harood.algorithms.base import ce_grad, concat_batches
from harood.models import build_model

H = 1e-5
RTOL = 1e-4
ATOL = 1e-7  # absolute floor: FD noise on mathematically-zero gradients
MAX_COMPONENTS = 30


def toy_model(seed=7, **kw):
    return build_model(toy_backbone(), TOY_CLASSES, seed=seed, **kw)


def check_against_fd(model, grads, loss_fn, rng, max_components=MAX_COMPONENTS):
    params = model.parameters()
    for name, p in params.items():
        flat, gflat = p.reshape(-1), grads[name].reshape(-1)
        idxs = (range(flat.size) if flat.size <= max_components
                else rng.choice(flat.size, max_components, replace=False))
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + H
            lp = loss_fn()
            flat[i] = orig - H
            lm = loss_fn()
            flat[i] = orig
            fd = (lp - lm) / (2 * H)
            assert abs(fd - gflat[i]) <= RTOL * max(abs(fd), abs(gflat[i])) + ATOL, \
                f"{name}[{i}]: fd={fd} analytic={gflat[i]}"


def fd_case(name, cfg, model_kw=None, setup=None, seed=3):
    model = toy_model(**(model_kw or {}))
    algo = create_algorithm(name, cfg, seed=seed)
    if setup:
        setup(algo)
    batches = toy_batches()
    task = algo.prepare(batches, model)
    model.zero_grads()
    algo.loss_and_grads(model, batches, task)
    grads = {k: v.copy() for k, v in model.grads().items()}

    def loss_fn():
        model.zero_grads()
        return algo.loss_and_grads(model, batches, task).total_loss

    check_against_fd(model, grads, loss_fn, np.random.default_rng(11))


NEUTRAL = dict(lr=0.0, weight_decay=0.0)

CASES = {
    "erm": AlgorithmConfig(**NEUTRAL),
    "mixup": AlgorithmConfig(**NEUTRAL, mixup_alpha=0.4),
    "coral": AlgorithmConfig(**NEUTRAL, penalty_weight=0.7),
    "mmd": AlgorithmConfig(**NEUTRAL, penalty_weight=0.7,
                           mmd_bandwidths=(0.01, 1.0, 10.0)),
    "vrex": AlgorithmConfig(**NEUTRAL, penalty_weight=2.0),
    "urm": AlgorithmConfig(**NEUTRAL, penalty_weight=0.5, urm_temperature=0.7),
    "fishr": AlgorithmConfig(**NEUTRAL, penalty_weight=0.5),
    "ddlearn": AlgorithmConfig(**NEUTRAL, penalty_weight=0.5),
    "rsc": AlgorithmConfig(**NEUTRAL, rsc_feature_pct=1 / 3, rsc_batch_pct=0.5),
    "erm_pp": AlgorithmConfig(**NEUTRAL),
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_fd_fidelity(name):
    fd_case(name, CASES[name])


def test_fd_fidelity_lag():
    fd_case("lag", AlgorithmConfig(**NEUTRAL, lag_align_weight=0.8),
            model_kw={"lag_branch_factor": 0.5})


def test_fd_fidelity_groupdro_frozen_weights():
    # eta=0 freezes the weights so the weighted risk is the differentiated loss
    def preset(algo):
        algo.weights = np.array([0.3, 0.7])

    fd_case("groupdro", AlgorithmConfig(**NEUTRAL, dro_eta=0.0), setup=preset)


def test_fd_fidelity_andmask_tau_zero():
    # with tau=0 the consumed gradient is the cross-domain mean gradient,
    # i.e. the gradient of the mean per-domain risk
    fd_case("andmask", AlgorithmConfig(**NEUTRAL, andmask_tau=0.0))


def test_fd_fidelity_dann_decomposition():
    """Task path and discriminator path each match FD; the extractor update
    is task-grad minus penalty-weight times the domain-path gradient."""
    model = toy_model(discriminator_domains=2)
    batches = toy_batches()
    lam = 0.8
    algo = create_algorithm("dann", AlgorithmConfig(**NEUTRAL, penalty_weight=lam),
                            seed=3)
    model.zero_grads()
    algo.loss_and_grads(model, batches, None)
    applied = {k: v.copy() for k, v in model.grads().items()}

    algo0 = create_algorithm("dann", AlgorithmConfig(**NEUTRAL, penalty_weight=0.0),
                             seed=3)
    model.zero_grads()
    algo0.loss_and_grads(model, batches, None)
    g_task = {k: v.copy() for k, v in model.grads().items()}

    rng = np.random.default_rng(11)
    # extractor + classifier gradients at lambda=0 are the task-CE gradients
    for prefix in ("extractor.", "classifier."):
        check_against_fd_subset(model, g_task, prefix,
                                lambda: _task_loss(algo0, model, batches), rng)
    # discriminator gradients follow the domain CE (independent of lambda)
    check_against_fd_subset(model, g_task, "discriminator.",
                            lambda: _domain_loss(algo0, model, batches), rng)
    for k in applied:
        if k.startswith("discriminator."):
            np.testing.assert_allclose(applied[k], g_task[k], atol=1e-12)
    # reversal: applied extractor grad = task grad - lam * domain-path grad
    g_dom = {k: (g_task[k] - applied[k]) / lam for k in applied
             if k.startswith("extractor.")}
    params = model.parameters()
    for name in sorted(g_dom)[:3]:
        p = params[name]
        flat = p.reshape(-1)
        gflat = g_dom[name].reshape(-1)
        for i in rng.choice(flat.size, min(5, flat.size), replace=False):
            orig = flat[i]
            flat[i] = orig + H
            lp = _domain_loss(algo0, model, batches)
            flat[i] = orig - H
            lm = _domain_loss(algo0, model, batches)
            flat[i] = orig
            fd = (lp - lm) / (2 * H)
            assert abs(fd - gflat[i]) <= RTOL * max(abs(fd), abs(gflat[i])) + ATOL


def check_against_fd_subset(model, grads, prefix, loss_fn, rng):
    params = model.parameters()
    for name, p in params.items():
        if not name.startswith(prefix):
            continue
        flat, gflat = p.reshape(-1), grads[name].reshape(-1)
        idxs = (range(flat.size) if flat.size <= 10
                else rng.choice(flat.size, 10, replace=False))
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + H
            lp = loss_fn()
            flat[i] = orig - H
            lm = loss_fn()
            flat[i] = orig
            fd = (lp - lm) / (2 * H)
            assert abs(fd - gflat[i]) <= RTOL * max(abs(fd), abs(gflat[i])) + ATOL


def _task_loss(algo, model, batches):
    model.zero_grads()
    return algo.loss_and_grads(model, batches, None).task_loss


def _domain_loss(algo, model, batches):
    model.zero_grads()
    return algo.loss_and_grads(model, batches, None).penalty


def test_fd_fidelity_mldg_frozen_offset():
    """First-order MLDG grads equal the gradient of
    L_tr(theta) + beta * L_te(theta + delta) with delta frozen."""
    model = toy_model()
    batches = toy_batches()
    beta, inner_lr = 1.0, 0.1
    algo = create_algorithm("mldg", AlgorithmConfig(**NEUTRAL, mldg_beta=beta,
                                                    mldg_inner_lr=inner_lr), seed=3)
    task = {"meta_train": [0], "meta_test": [1]}
    model.zero_grads()
    algo.loss_and_grads(model, batches, task)
    grads = {k: v.copy() for k, v in model.grads().items()}

    # freeze the inner offset at the base point
    _, g_tr = algo._pooled_ce_grads(model.clone(), [batches[0]])
    delta = {k: -inner_lr * v for k, v in g_tr.items()}

    def frozen_loss():
        loss_tr, _ = algo._pooled_ce_grads(model.clone(), [batches[0]])
        shifted = model.clone()
        for k, p in shifted.parameters().items():
            p += delta[k]
        loss_te, _ = algo._pooled_ce_grads(shifted, [batches[1]])
        return loss_tr + beta * loss_te

    check_against_fd(model, grads, frozen_loss, np.random.default_rng(11),
                     max_components=8)


def test_fd_fidelity_fish_inner_gradient():
    """Fish's inner steps consume exact per-domain CE gradients."""
    model = toy_model()
    batch = toy_batches()[0]
    algo = create_algorithm("fish", AlgorithmConfig(lr=0.1, weight_decay=0.0),
                            seed=3)
    clone = model.clone()
    algo._inner_loss_and_grads(clone, batch)
    grads = {k: v.copy() for k, v in clone.grads().items()}

    def loss_fn():
        z, _ = clone.logits(batch.inputs, train=True)
        loss, _ = cross_entropy(z, batch.labels)
        return loss

    check_against_fd(clone, grads, loss_fn, np.random.default_rng(11),
                     max_components=10)


def test_mldg_second_order_direction_on_quadratic():
    """On a quadratic meta-train loss the FD Hessian-vector product is exact,
    so second-order grads must differ from first-order by -a*b*H g_te."""
    from test_algorithms import QuadraticMLDG, ToyModel, _dummy_batch

    cfg1 = AlgorithmConfig(**NEUTRAL, mldg_inner_lr=0.1, mldg_beta=1.0,
                           mldg_second_order=False)
    cfg2 = AlgorithmConfig(**NEUTRAL, mldg_inner_lr=0.1, mldg_beta=1.0,
                           mldg_second_order=True)
    task = {"meta_train": [0], "meta_test": [1]}
    g = {}
    for key, cfg in (("first", cfg1), ("second", cfg2)):
        algo = QuadraticMLDG(cfg, seed=0)
        model = ToyModel(1.0)
        model.zero_grads()
        algo.loss_and_grads(model, [_dummy_batch(0), _dummy_batch(1)], task)
        g[key] = model.grads()["theta"][0]
    # L_tr = theta^2 -> H = 2; g_te at theta'=0.8 is 2*(0.8-1) = -0.4
    # correction = -0.1 * 1.0 * 2 * (-0.4) = +0.08
    assert abs((g["second"] - g["first"]) - 0.08) < 1e-6
