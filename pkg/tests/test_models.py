"""Backbone shape contracts, gradients, and checkpointing."""

import numpy as np
import pytest

from conftest import TOY_CLASSES, TOY_SHAPE, toy_backbone
from harood.errors import CheckpointError, ConfigError, ShapeError
from harood.models import (
    BackboneConfig,
    attach_lag_branch,
    build_model,
    forward_features,
    load_model,
    predict_logits,
    save_model,
    softmax,
)
from harood.models.backbones import TransformerExtractor, build_cnn_extractor

# the six default input shapes of the scenario table
DEFAULT_SHAPES = [(45, 1, 125), (6, 1, 200), (6, 1, 128), (27, 1, 200),
                  (8, 1, 200), (9, 1, 125), (6, 1, 50)]


def dry_run_feature_dim(config: BackboneConfig) -> int:
    """Independent shape oracle: propagate a probe batch through a model."""
    model = build_model(config, class_count=2, seed=0)
    x = np.zeros((1, *config.input_shape))
    f, _ = model.forward_features(x, train=False)
    return f.shape[1]


@pytest.mark.parametrize("shape", DEFAULT_SHAPES)
@pytest.mark.parametrize("family", ["cnn", "transformer"])
def test_feature_dim_matches_runtime_width(shape, family):
    config = BackboneConfig(family=family, input_shape=shape, capacity="small")
    assert config.feature_dim == dry_run_feature_dim(config)


def test_cnn_pooling_arithmetic_128():
    # conv blocks preserve length; two poolings: 128 -> 64 -> 32
    config = BackboneConfig(family="cnn", input_shape=(6, 1, 128), capacity="small")
    assert config.feature_dim == 32 * 32


def test_cnn_too_short_window_raises():
    rng = np.random.default_rng(0)
    with pytest.raises(ShapeError):
        build_cnn_extractor(
            BackboneConfig(family="cnn", input_shape=(3, 1, 2)), rng)


def test_transformer_feature_dim_k_times_dmodel():
    config = BackboneConfig(family="transformer", input_shape=(6, 1, 200),
                            d_model=16, heads=4)
    assert config.feature_dim == 200 * 16


def test_dmodel_head_divisibility():
    with pytest.raises(ConfigError):
        BackboneConfig(family="transformer", input_shape=(3, 1, 16),
                       d_model=10, heads=4)


def test_parameter_count_monotone_in_capacity():
    for family in ("cnn", "transformer"):
        counts = [
            build_model(BackboneConfig(family=family, input_shape=(6, 1, 64),
                                       capacity=cap), 5, seed=0).parameter_count()
            for cap in ("small", "mid", "large")
        ]
        assert counts[0] < counts[1] < counts[2], family


def test_attention_rows_are_probability_vectors():
    config = BackboneConfig(family="transformer", input_shape=(3, 1, 12),
                            d_model=8, heads=2, encoder_blocks=1)
    model = build_model(config, 3, seed=1)
    extractor = model.extractor
    assert isinstance(extractor, TransformerExtractor)
    x = np.random.default_rng(2).normal(size=(2, 3, 1, 12))
    _, (_, _, block_caches) = extractor.encode(x, train=False)
    attn = block_caches[0][0][4]  # (B, heads, K, K)
    assert np.all(attn >= 0)
    np.testing.assert_allclose(attn.sum(axis=-1), 1.0, atol=1e-6)


def test_identical_keys_give_uniform_attention():
    config = BackboneConfig(family="transformer", input_shape=(3, 1, 10),
                            d_model=8, heads=2, encoder_blocks=1,
                            use_positional_encoding=False)
    model = build_model(config, 3, seed=1)
    x = np.ones((1, 3, 1, 10))  # identical tokens -> identical keys
    _, (_, _, block_caches) = model.extractor.encode(x, train=False)
    attn = block_caches[0][0][4]
    np.testing.assert_allclose(attn, 1.0 / 10, atol=1e-12)


def test_no_positional_encoding_is_permutation_equivariant():
    config = BackboneConfig(family="transformer", input_shape=(3, 1, 10),
                            d_model=8, heads=2, encoder_blocks=1,
                            use_positional_encoding=False)
    model = build_model(config, 3, seed=4)
    rng = np.random.default_rng(5)
    x = rng.normal(size=(2, 3, 1, 10))
    perm = rng.permutation(10)
    enc, _ = model.extractor.encode(x, train=False)
    enc_perm, _ = model.extractor.encode(x[:, :, :, perm], train=False)
    np.testing.assert_allclose(enc_perm, enc[:, perm, :], atol=1e-10)


def test_positional_encoding_breaks_equivariance():
    config = BackboneConfig(family="transformer", input_shape=(3, 1, 10),
                            d_model=8, heads=2, encoder_blocks=1,
                            use_positional_encoding=True)
    model = build_model(config, 3, seed=4)
    rng = np.random.default_rng(5)
    x = rng.normal(size=(1, 3, 1, 10))
    perm = rng.permutation(10)
    enc, _ = model.extractor.encode(x, train=False)
    enc_perm, _ = model.extractor.encode(x[:, :, :, perm], train=False)
    assert not np.allclose(enc_perm, enc[:, perm, :], atol=1e-6)


def test_eval_mode_deterministic_and_batch_independent():
    model = build_model(toy_backbone(), TOY_CLASSES, seed=3)
    rng = np.random.default_rng(6)
    x = rng.normal(size=(8, *TOY_SHAPE))
    # mutate batch-norm running stats away from init via a training pass
    model.forward_features(rng.normal(size=(16, *TOY_SHAPE)), train=True)
    z1 = predict_logits(model, x)
    z2 = predict_logits(model, x)
    np.testing.assert_array_equal(z1, z2)
    single = predict_logits(model, x[3:4])
    np.testing.assert_allclose(single[0], z1[3], atol=1e-5)


def test_nan_input_raises():
    model = build_model(toy_backbone(), TOY_CLASSES, seed=3)
    x = np.full((1, *TOY_SHAPE), np.nan)
    with pytest.raises(ShapeError):
        predict_logits(model, x)


def test_shape_mismatch_raises():
    model = build_model(toy_backbone(), TOY_CLASSES, seed=3)
    with pytest.raises(ShapeError):
        predict_logits(model, np.zeros((2, 5, 1, 8)))


def test_zero_features_give_bias_logits():
    model = build_model(toy_backbone(), TOY_CLASSES, seed=3)
    model.classifier._params["b"][...] = [0.3, -0.2, 1.5]
    f = np.zeros((2, model.feature_dim))
    z, _ = model.classify(f)
    np.testing.assert_allclose(z, np.tile([0.3, -0.2, 1.5], (2, 1)))


def test_softmax_rows_sum_to_one():
    z = np.random.default_rng(7).normal(size=(5, 9)) * 10
    p = softmax(z, axis=1)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-6)
    assert np.argmax(p[0]) == np.argmax(z[0] + 3.0)  # shift invariance


def test_lag_branch_dims_and_zeroed_branch_matches_main():
    model = build_model(toy_backbone(), TOY_CLASSES, seed=3)
    with_branch = attach_lag_branch(model, width_factor=0.5, seed=9)
    assert with_branch.branch is not None
    assert with_branch.classifier.in_dim == 2 * model.feature_dim
    with pytest.raises(ConfigError):
        attach_lag_branch(model, width_factor=0.0)
    with pytest.raises(ConfigError):
        attach_lag_branch(with_branch)

    # zero every branch parameter: branch features vanish, so logits equal
    # the main path through the (copied) classifier block
    for name, arr in with_branch.parameters().items():
        if name.startswith("branch."):
            arr[...] = 0.0
    w = with_branch.classifier._params["w"]
    b = with_branch.classifier._params["b"]
    np.copyto(w[: model.feature_dim], model.classifier._params["w"])
    np.copyto(b, model.classifier._params["b"])
    x = np.random.default_rng(8).normal(size=(3, *TOY_SHAPE))
    np.testing.assert_allclose(predict_logits(with_branch, x),
                               predict_logits(model, x), atol=1e-10)
    feats = forward_features(with_branch, x)
    np.testing.assert_array_equal(feats[:, model.feature_dim:], 0.0)


def test_lag_branch_keeps_main_extractor_weights():
    model = build_model(toy_backbone(), TOY_CLASSES, seed=3)
    with_branch = attach_lag_branch(model, seed=10)
    for name, arr in model.parameters().items():
        if name.startswith("extractor."):
            np.testing.assert_array_equal(arr, with_branch.parameters()[name])


def test_checkpoint_roundtrip(tmp_path):
    model = build_model(toy_backbone(), TOY_CLASSES, seed=3,
                        discriminator_domains=2, lag_branch_factor=0.5)
    model.forward_features(np.random.default_rng(1).normal(size=(4, *TOY_SHAPE)),
                           train=True)  # move running stats off init
    path = save_model(model, tmp_path / "ck.npz")
    loaded = load_model(path)
    x = np.random.default_rng(2).normal(size=(2, *TOY_SHAPE))
    np.testing.assert_allclose(loaded.predict(x), model.predict(x), atol=1e-5)
    with pytest.raises(CheckpointError):
        load_model(tmp_path / "missing.npz")


def test_checkpoint_arrays_are_float32_little_endian(tmp_path):
    model = build_model(toy_backbone(), TOY_CLASSES, seed=3)
    path = save_model(model, tmp_path / "ck.npz")
    with np.load(path) as data:
        for name in data.files:
            if name.startswith("param/"):
                assert data[name].dtype == np.dtype("<f4")


GRADCHECK_CASES = [
    ("cnn", dict(cnn_widths=(3, 4))),
    ("transformer", dict(d_model=8, heads=2, encoder_blocks=1)),
]


@pytest.mark.parametrize("family,extra", GRADCHECK_CASES)
def test_gradients_match_finite_differences(family, extra):
    shape = (3, 1, 12) if family == "cnn" else (3, 1, 8)
    config = BackboneConfig(family=family, input_shape=shape, capacity="small",
                            **extra)
    model = build_model(config, 3, seed=0)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4, *shape))
    y = rng.integers(0, 3, size=4)

    def loss_and_backward():
        z, tape = model.logits(x, train=True)
        p = softmax(z, axis=1)
        loss = -np.mean(np.log(p[np.arange(4), y]))
        dz = p.copy()
        dz[np.arange(4), y] -= 1.0
        model.zero_grads()
        model.backward_logits(tape, dz / 4)
        return loss

    loss_and_backward()
    grads = {k: v.copy() for k, v in model.grads().items()}
    params = model.parameters()
    h = 1e-5
    for name, p in params.items():
        flat, gflat = p.reshape(-1), grads[name].reshape(-1)
        idxs = (range(flat.size) if flat.size <= 40
                else rng.choice(flat.size, 40, replace=False))
        for i in idxs:
            orig = flat[i]
            flat[i] = orig + h
            lp = loss_and_backward()
            flat[i] = orig - h
            lm = loss_and_backward()
            flat[i] = orig
            fd = (lp - lm) / (2 * h)
            assert abs(fd - gflat[i]) <= 1e-4 * max(abs(fd), abs(gflat[i])) + 1e-7, \
                f"{name}[{i}]: fd={fd} analytic={gflat[i]}"
