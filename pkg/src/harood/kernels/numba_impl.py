"""Numba-jitted kernels.

Innermost loops run along contiguous time indices with no loop-carried
dependencies, so LLVM auto-vectorizes them; fastmath permits the reordered
reductions that vectorization needs. Loops are serial: results are
reproducible run to run on one machine.
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def conv1d_forward(x, w, b):
    bs, c_in, t = x.shape
    c_out, _, k = w.shape
    t_out = t - k + 1
    out = np.empty((bs, c_out, t_out), dtype=x.dtype)
    for n in range(bs):
        for o in range(c_out):
            acc = out[n, o]
            acc[:] = b[o]
            for c in range(c_in):
                row = x[n, c]
                for j in range(k):
                    wj = w[o, c, j]
                    for i in range(t_out):
                        acc[i] += wj * row[j + i]
    return out


@njit(cache=True, fastmath=True)
def conv1d_backward(x, w, dout):
    bs, c_in, t = x.shape
    c_out, _, k = w.shape
    t_out = t - k + 1
    dx = np.zeros((bs, c_in, t), dtype=x.dtype)
    dw = np.zeros_like(w)
    db = np.zeros(c_out, dtype=x.dtype)
    for n in range(bs):
        for o in range(c_out):
            g = dout[n, o]
            s = 0.0
            for i in range(t_out):
                s += g[i]
            db[o] += s
            for c in range(c_in):
                row = x[n, c]
                drow = dx[n, c]
                for j in range(k):
                    wj = w[o, c, j]
                    acc = 0.0
                    for i in range(t_out):
                        acc += row[j + i] * g[i]
                        drow[j + i] += wj * g[i]
                    dw[o, c, j] += acc
    return dx, dw, db


@njit(cache=True)
def maxpool2_forward(x):
    bs, c, t = x.shape
    t_out = t // 2
    out = np.empty((bs, c, t_out), dtype=x.dtype)
    idx = np.empty((bs, c, t_out), dtype=np.int8)
    for n in range(bs):
        for ch in range(c):
            for i in range(t_out):
                a = x[n, ch, 2 * i]
                b = x[n, ch, 2 * i + 1]
                if b > a:
                    out[n, ch, i] = b
                    idx[n, ch, i] = 1
                else:
                    out[n, ch, i] = a
                    idx[n, ch, i] = 0
    return out, idx


@njit(cache=True)
def maxpool2_backward(idx, dout, t_in):
    bs, c, t_out = dout.shape
    dx = np.zeros((bs, c, t_in), dtype=dout.dtype)
    for n in range(bs):
        for ch in range(c):
            for i in range(t_out):
                dx[n, ch, 2 * i + idx[n, ch, i]] += dout[n, ch, i]
    return dx
