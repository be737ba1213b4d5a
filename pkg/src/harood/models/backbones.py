"""Feature extractors: two-block CNN and transformer encoder."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, ShapeError
from .config import BackboneConfig
from .layers import (
    BatchNorm1d,
    Conv1dSame,
    Dense,
    EncoderBlock,
    Flatten,
    MaxPool2,
    Module,
    PositionalEncoding,
    ReLU,
    Sequential,
    SqueezeHeight,
    TimeTokens,
)


def build_cnn_extractor(config: BackboneConfig, rng: np.random.Generator) -> Sequential:
    """Two blocks of conv -> batch norm -> ReLU -> width-2 max pool, flattened."""
    if config.family != "cnn":
        raise ConfigError("build_cnn_extractor requires family='cnn'")
    t = config.window_length
    if t < 4:
        raise ShapeError(f"window length {t} too short for two pooling stages")
    w1, w2 = config.widths
    k = config.kernel
    layers = [
        SqueezeHeight(),
        Conv1dSame(config.channels, w1, k, rng, name="b1_conv"),
        BatchNorm1d(w1, name="b1_bn"),
        ReLU(name="b1_relu"),
        MaxPool2(name="b1_pool"),
        Conv1dSame(w1, w2, k, rng, name="b2_conv"),
        BatchNorm1d(w2, name="b2_bn"),
        ReLU(name="b2_relu"),
        MaxPool2(name="b2_pool"),
        Flatten(),
    ]
    return Sequential(layers, name="cnn")


class TransformerExtractor(Module):
    """Embedding -> (positional encoding) -> encoder blocks -> flatten.

    Time steps are sequence positions (K = T) with channels as token
    features; the encoded sequence flattens to K * d_model.
    """

    def __init__(self, config: BackboneConfig, rng: np.random.Generator,
                 name: str = "transformer"):
        super().__init__(name)
        if config.family != "transformer":
            raise ConfigError("TransformerExtractor requires family='transformer'")
        d = config.model_dim
        self.tokens = TimeTokens()
        self.embed = self.add_child("embed", Dense(config.channels, d, rng, name="embed"))
        self.pos = PositionalEncoding(d) if config.use_positional_encoding else None
        self.blocks = [
            self.add_child(f"block{i}", EncoderBlock(d, config.heads, 4 * d, rng))
            for i in range(config.encoder_blocks)
        ]
        self.flatten = Flatten()

    def encode(self, x, train: bool):
        """Return the encoded (B, K, d_model) sequence before flattening."""
        h, c_tokens = self.tokens.forward(x, train)
        h, c_embed = self.embed.forward(h, train)
        if self.pos is not None:
            h, _ = self.pos.forward(h, train)
        block_caches = []
        for block in self.blocks:
            h, cache = block.forward(h, train)
            block_caches.append(cache)
        return h, (c_tokens, c_embed, block_caches)

    def forward(self, x, train: bool):
        h, enc_cache = self.encode(x, train)
        out, c_flat = self.flatten.forward(h, train)
        return out, (enc_cache, c_flat)

    def backward(self, cache, dout):
        (c_tokens, c_embed, block_caches), c_flat = cache
        dh = self.flatten.backward(c_flat, dout)
        for block, bcache in zip(reversed(self.blocks), reversed(block_caches)):
            dh = block.backward(bcache, dh)
        dh = self.embed.backward(c_embed, dh)
        return self.tokens.backward(c_tokens, dh)


def build_extractor(config: BackboneConfig, rng: np.random.Generator) -> Module:
    if config.family == "cnn":
        return build_cnn_extractor(config, rng)
    return TransformerExtractor(config, rng)
