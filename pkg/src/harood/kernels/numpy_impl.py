"""Pure-numpy fallback kernels (im2col + einsum)."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv1d_forward(x, w, b):
    """Valid cross-correlation along the last axis.

    x: (B, C, T), w: (O, C, K), b: (O,) -> (B, O, T-K+1)
    """
    cols = sliding_window_view(x, w.shape[2], axis=2)  # (B, C, To, K)
    out = np.einsum("bctk,ock->bot", cols, w, optimize=True)
    out += b[None, :, None]
    return out


def conv1d_backward(x, w, dout):
    """Gradients of conv1d_forward. Returns (dx, dw, db)."""
    k = w.shape[2]
    cols = sliding_window_view(x, k, axis=2)
    dw = np.einsum("bctk,bot->ock", cols, dout, optimize=True)
    db = dout.sum(axis=(0, 2))
    pad = np.pad(dout, ((0, 0), (0, 0), (k - 1, k - 1)))
    dcols = sliding_window_view(pad, k, axis=2)  # (B, O, T, K)
    dx = np.einsum("botk,ock->bct", dcols, w[:, :, ::-1], optimize=True)
    return dx, dw, db


def maxpool2_forward(x):
    """Non-overlapping max pooling with width 2, stride 2.

    x: (B, C, T) -> (out (B, C, T//2), idx (B, C, T//2) in {0, 1})
    """
    t2 = (x.shape[2] // 2) * 2
    pairs = x[:, :, :t2].reshape(x.shape[0], x.shape[1], t2 // 2, 2)
    idx = pairs.argmax(axis=3).astype(np.int8)
    out = np.take_along_axis(pairs, idx[..., None].astype(np.int64), axis=3)[..., 0]
    return out, idx


def maxpool2_backward(idx, dout, t_in):
    """Scatter pooled gradients back to the pre-pool positions."""
    b, c, to = dout.shape
    dx = np.zeros((b, c, t_in), dtype=dout.dtype)
    pos = 2 * np.arange(to)[None, None, :] + idx
    np.put_along_axis(dx, pos.astype(np.int64), dout, axis=2)
    return dx
