"""Minimal layer framework with explicit forward tapes and hand-written
backward passes.

``forward`` returns ``(output, cache)``; ``backward`` consumes the cache,
accumulates parameter gradients in place, and returns the input gradient.
Caches are read-only, so one tape can be backpropagated several times
(needed for per-domain gradients over a shared pooled forward).
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import ShapeError


class Module:
    """Base class: leaf layers register params; compound layers register children."""

    def __init__(self, name: str = ""):
        self.name = name
        self._params: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}
        self._buffers: dict[str, np.ndarray] = {}
        self._children: dict[str, "Module"] = {}

    # -- registration ------------------------------------------------------
    def add_param(self, name: str, value: np.ndarray) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float64)
        self._params[name] = arr
        self._grads[name] = np.zeros_like(arr)
        return arr

    def add_buffer(self, name: str, value: np.ndarray) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float64)
        self._buffers[name] = arr
        return arr

    def add_child(self, name: str, child: "Module") -> "Module":
        self._children[name] = child
        return child

    # -- traversal ---------------------------------------------------------
    def params(self) -> dict[str, np.ndarray]:
        out = dict(self._params)
        for cname, child in self._children.items():
            for pname, arr in child.params().items():
                out[f"{cname}.{pname}"] = arr
        return out

    def grads(self) -> dict[str, np.ndarray]:
        out = dict(self._grads)
        for cname, child in self._children.items():
            for pname, arr in child.grads().items():
                out[f"{cname}.{pname}"] = arr
        return out

    def buffers(self) -> dict[str, np.ndarray]:
        out = dict(self._buffers)
        for cname, child in self._children.items():
            for bname, arr in child.buffers().items():
                out[f"{cname}.{bname}"] = arr
        return out

    def zero_grads(self) -> None:
        for g in self._grads.values():
            g[...] = 0.0
        for child in self._children.values():
            child.zero_grads()

    # -- state -------------------------------------------------------------
    def state(self) -> dict[str, dict[str, np.ndarray]]:
        return {
            "params": {k: v.copy() for k, v in self.params().items()},
            "buffers": {k: v.copy() for k, v in self.buffers().items()},
        }

    def load_state(self, state) -> None:
        params = self.params()
        for k, v in state["params"].items():
            np.copyto(params[k], v)
        buffers = self.buffers()
        for k, v in state.get("buffers", {}).items():
            np.copyto(buffers[k], v)

    # -- compute -----------------------------------------------------------
    def forward(self, x, train: bool):
        raise NotImplementedError

    def backward(self, cache, dout):
        raise NotImplementedError


class Sequential(Module):
    def __init__(self, layers: list[Module], name: str = "seq"):
        super().__init__(name)
        self.layers = layers
        for i, layer in enumerate(layers):
            self.add_child(layer.name or f"l{i}", layer)

    def forward(self, x, train: bool):
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x, train)
            caches.append(cache)
        return x, caches

    def backward(self, caches, dout):
        for layer, cache in zip(reversed(self.layers), reversed(caches)):
            dout = layer.backward(cache, dout)
        return dout


class Dense(Module):
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator,
                 name: str = "dense"):
        super().__init__(name)
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        self.add_param("w", rng.uniform(-limit, limit, size=(in_dim, out_dim)))
        self.add_param("b", np.zeros(out_dim))
        self.in_dim, self.out_dim = in_dim, out_dim

    def forward(self, x, train: bool):
        return x @ self._params["w"] + self._params["b"], x

    def backward(self, x, dout):
        w = self._params["w"]
        x2 = x.reshape(-1, self.in_dim)
        d2 = dout.reshape(-1, self.out_dim)
        self._grads["w"] += x2.T @ d2
        self._grads["b"] += d2.sum(axis=0)
        return (d2 @ w.T).reshape(x.shape)


class ReLU(Module):
    def __init__(self, name: str = "relu"):
        super().__init__(name)

    def forward(self, x, train: bool):
        mask = x > 0
        return x * mask, mask

    def backward(self, mask, dout):
        return dout * mask


class Flatten(Module):
    def __init__(self, name: str = "flatten"):
        super().__init__(name)

    def forward(self, x, train: bool):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, shape, dout):
        return dout.reshape(shape)


class SqueezeHeight(Module):
    """(B, C, 1, T) -> (B, C, T) at the CNN entry."""

    def __init__(self, name: str = "squeeze"):
        super().__init__(name)

    def forward(self, x, train: bool):
        if x.ndim != 4 or x.shape[2] != 1:
            raise ShapeError(f"expected (B, C, 1, T) input, got {x.shape}")
        return x[:, :, 0, :], x.shape

    def backward(self, shape, dout):
        return dout.reshape(shape)


class Conv1dSame(Module):
    """Time-axis convolution with 'same' zero padding; kernel (1, k)."""

    def __init__(self, in_channels: int, out_channels: int, kernel: int,
                 rng: np.random.Generator, name: str = "conv"):
        super().__init__(name)
        std = np.sqrt(2.0 / (in_channels * kernel))
        self.add_param("w", rng.normal(0.0, std, size=(out_channels, in_channels, kernel)))
        self.add_param("b", np.zeros(out_channels))
        self.kernel = kernel
        self.pad_left = (kernel - 1) // 2
        self.pad_right = kernel - 1 - self.pad_left

    def forward(self, x, train: bool):
        xp = np.pad(x, ((0, 0), (0, 0), (self.pad_left, self.pad_right)))
        xp = np.ascontiguousarray(xp)
        out = kernels.conv1d_forward(xp, self._params["w"], self._params["b"])
        return out, xp

    def backward(self, xp, dout):
        dout = np.ascontiguousarray(dout)
        dxp, dw, db = kernels.conv1d_backward(xp, self._params["w"], dout)
        self._grads["w"] += dw
        self._grads["b"] += db
        t = xp.shape[2] - self.pad_left - self.pad_right
        return dxp[:, :, self.pad_left : self.pad_left + t]


class MaxPool2(Module):
    """Width-2 stride-2 max pooling along time; odd tails are dropped."""

    def __init__(self, name: str = "pool"):
        super().__init__(name)

    def forward(self, x, train: bool):
        if x.shape[2] < 2:
            raise ShapeError(f"cannot pool a length-{x.shape[2]} sequence")
        x = np.ascontiguousarray(x)
        out, idx = kernels.maxpool2_forward(x)
        return out, (idx, x.shape[2])

    def backward(self, cache, dout):
        idx, t_in = cache
        return kernels.maxpool2_backward(idx, np.ascontiguousarray(dout), t_in)


class BatchNorm1d(Module):
    """Per-channel batch normalization over (B, C, T).

    Training uses batch statistics and updates running estimates
    (unbiased variance, momentum 0.1); evaluation uses the running
    estimates, so outputs are independent of batch composition.
    """

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5,
                 name: str = "bn"):
        super().__init__(name)
        self.add_param("gamma", np.ones(channels))
        self.add_param("beta", np.zeros(channels))
        self.add_buffer("running_mean", np.zeros(channels))
        self.add_buffer("running_var", np.ones(channels))
        self.momentum = momentum
        self.eps = eps

    def forward(self, x, train: bool):
        gamma = self._params["gamma"][None, :, None]
        beta = self._params["beta"][None, :, None]
        if train:
            mean = x.mean(axis=(0, 2))
            var = x.var(axis=(0, 2))
            n = x.shape[0] * x.shape[2]
            unbiased = var * n / max(n - 1, 1)
            rm, rv = self._buffers["running_mean"], self._buffers["running_var"]
            rm *= 1.0 - self.momentum
            rm += self.momentum * mean
            rv *= 1.0 - self.momentum
            rv += self.momentum * unbiased
        else:
            mean = self._buffers["running_mean"]
            var = self._buffers["running_var"]
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
        out = gamma * xhat + beta
        return out, (xhat, inv_std, train)

    def backward(self, cache, dout):
        xhat, inv_std, train = cache
        gamma = self._params["gamma"]
        self._grads["gamma"] += (dout * xhat).sum(axis=(0, 2))
        self._grads["beta"] += dout.sum(axis=(0, 2))
        dxhat = dout * gamma[None, :, None]
        if not train:
            return dxhat * inv_std[None, :, None]
        n = dout.shape[0] * dout.shape[2]
        sum_dxhat = dxhat.sum(axis=(0, 2), keepdims=True)
        sum_dxhat_xhat = (dxhat * xhat).sum(axis=(0, 2), keepdims=True)
        return (inv_std[None, :, None] / n) * (
            n * dxhat - sum_dxhat - xhat * sum_dxhat_xhat
        )


class LayerNorm(Module):
    """Normalization over the last dimension."""

    def __init__(self, dim: int, eps: float = 1e-5, name: str = "ln"):
        super().__init__(name)
        self.add_param("gamma", np.ones(dim))
        self.add_param("beta", np.zeros(dim))
        self.eps = eps

    def forward(self, x, train: bool):
        mean = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        return self._params["gamma"] * xhat + self._params["beta"], (xhat, inv_std)

    def backward(self, cache, dout):
        xhat, inv_std = cache
        self._grads["gamma"] += (dout * xhat).sum(axis=tuple(range(dout.ndim - 1)))
        self._grads["beta"] += dout.sum(axis=tuple(range(dout.ndim - 1)))
        dxhat = dout * self._params["gamma"]
        d = dout.shape[-1]
        return inv_std * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )


class TimeTokens(Module):
    """(B, C, 1, T) -> (B, T, C): time steps become sequence positions."""

    def __init__(self, name: str = "tokens"):
        super().__init__(name)

    def forward(self, x, train: bool):
        if x.ndim != 4 or x.shape[2] != 1:
            raise ShapeError(f"expected (B, C, 1, T) input, got {x.shape}")
        return x[:, :, 0, :].transpose(0, 2, 1), x.shape

    def backward(self, shape, dout):
        return dout.transpose(0, 2, 1).reshape(shape)


class PositionalEncoding(Module):
    """Additive sinusoidal position table (parameter-free)."""

    def __init__(self, d_model: int, max_len: int = 4096, name: str = "pos"):
        super().__init__(name)
        position = np.arange(max_len)[:, None]
        div = np.exp(np.arange(0, d_model, 2) * (-np.log(10000.0) / d_model))
        pe = np.zeros((max_len, d_model))
        pe[:, 0::2] = np.sin(position * div)
        pe[:, 1::2] = np.cos(position * div[: pe[:, 1::2].shape[1]])
        self.pe = pe

    def forward(self, x, train: bool):
        return x + self.pe[None, : x.shape[1], :], None

    def backward(self, cache, dout):
        return dout


def softmax(z, axis=-1):
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


class MultiHeadSelfAttention(Module):
    """Scaled dot-product self-attention with separate Q, K, V projections."""

    def __init__(self, d_model: int, heads: int, rng: np.random.Generator,
                 name: str = "attn"):
        super().__init__(name)
        if d_model % heads != 0:
            raise ShapeError(f"d_model {d_model} not divisible by heads {heads}")
        self.d_model = d_model
        self.heads = heads
        self.d_head = d_model // heads
        limit = np.sqrt(6.0 / (2 * d_model))
        for key in ("wq", "wk", "wv", "wo"):
            self.add_param(key, rng.uniform(-limit, limit, size=(d_model, d_model)))
        for key in ("bq", "bk", "bv", "bo"):
            self.add_param(key, np.zeros(d_model))

    def _split(self, x):
        b, k, _ = x.shape
        return x.reshape(b, k, self.heads, self.d_head).transpose(0, 2, 1, 3)

    def _merge(self, x):
        b, h, k, dh = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, k, h * dh)

    def forward(self, x, train: bool):
        p = self._params
        q = self._split(x @ p["wq"] + p["bq"])
        k = self._split(x @ p["wk"] + p["bk"])
        v = self._split(x @ p["wv"] + p["bv"])
        scale = 1.0 / np.sqrt(self.d_head)
        scores = np.einsum("bhqd,bhkd->bhqk", q, k) * scale
        attn = softmax(scores, axis=-1)
        ctx = np.einsum("bhqk,bhkd->bhqd", attn, v)
        merged = self._merge(ctx)
        out = merged @ p["wo"] + p["bo"]
        return out, (x, q, k, v, attn, merged)

    def backward(self, cache, dout):
        x, q, k, v, attn, merged = cache
        p, g = self._params, self._grads
        b, kk, _ = x.shape
        d2 = dout.reshape(-1, self.d_model)
        g["wo"] += merged.reshape(-1, self.d_model).T @ d2
        g["bo"] += d2.sum(axis=0)
        dmerged = (dout @ p["wo"].T).reshape(b, kk, self.heads, self.d_head)
        dctx = dmerged.transpose(0, 2, 1, 3)
        dattn = np.einsum("bhqd,bhkd->bhqk", dctx, v)
        dv = np.einsum("bhqk,bhqd->bhkd", attn, dctx)
        # softmax backward per row
        dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        scale = 1.0 / np.sqrt(self.d_head)
        dq = np.einsum("bhqk,bhkd->bhqd", dscores, k) * scale
        dk = np.einsum("bhqk,bhqd->bhkd", dscores, q) * scale
        dx = np.zeros_like(x)
        x2 = x.reshape(-1, self.d_model)
        for dproj, wkey, bkey in ((dq, "wq", "bq"), (dk, "wk", "bk"), (dv, "wv", "bv")):
            dflat = self._merge(dproj).reshape(-1, self.d_model)
            g[wkey] += x2.T @ dflat
            g[bkey] += dflat.sum(axis=0)
            dx += (dflat @ p[wkey].T).reshape(x.shape)
        return dx


class EncoderBlock(Module):
    """Post-norm transformer block: LN(x + attn(x)) then LN(h + ffn(h))."""

    def __init__(self, d_model: int, heads: int, d_ff: int,
                 rng: np.random.Generator, name: str = "block"):
        super().__init__(name)
        self.attn = self.add_child("attn", MultiHeadSelfAttention(d_model, heads, rng))
        self.ln1 = self.add_child("ln1", LayerNorm(d_model))
        self.fc1 = self.add_child("fc1", Dense(d_model, d_ff, rng))
        self.relu = ReLU()
        self.fc2 = self.add_child("fc2", Dense(d_ff, d_model, rng))
        self.ln2 = self.add_child("ln2", LayerNorm(d_model))

    def forward(self, x, train: bool):
        a, c_attn = self.attn.forward(x, train)
        h, c_ln1 = self.ln1.forward(x + a, train)
        f1, c_fc1 = self.fc1.forward(h, train)
        r, c_relu = self.relu.forward(f1, train)
        f2, c_fc2 = self.fc2.forward(r, train)
        out, c_ln2 = self.ln2.forward(h + f2, train)
        return out, (c_attn, c_ln1, c_fc1, c_relu, c_fc2, c_ln2)

    def backward(self, cache, dout):
        c_attn, c_ln1, c_fc1, c_relu, c_fc2, c_ln2 = cache
        dsum2 = self.ln2.backward(c_ln2, dout)
        dr = self.fc2.backward(c_fc2, dsum2)
        df1 = self.relu.backward(c_relu, dr)
        dh = dsum2 + self.fc1.backward(c_fc1, df1)
        dsum1 = self.ln1.backward(c_ln1, dh)
        dx = dsum1 + self.attn.backward(c_attn, dsum1)
        return dx
