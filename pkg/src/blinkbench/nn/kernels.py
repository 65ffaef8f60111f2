"""Compiled convolution / pooling kernels.

Forward kernels are JIT-compiled loop nests with a pinned accumulation
order: within each output element, products are summed over kernel row,
kernel column, then input channel (row-major over the weight tensor),
and the bias is added last, after the whole accumulation.  This makes
the forward pass bit-for-bit reproducible and identical to a naive
nested-loop evaluation, independent of batch size or thread count
(parallelism is over independent output elements only, never over a
reduction).

Backward kernels use vectorized numpy contractions; gradients carry a
finite-difference tolerance rather than a bitwise contract.
"""

import numba

numba.config.THREADING_LAYER = "omp"

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True, fastmath=False)
def _conv2d_forward(x, w, b, out):
    kh, kw, cin, cout = w.shape
    oh, ow = out.shape[1], out.shape[2]
    for n in prange(x.shape[0]):
        for y in range(oh):
            for xx in range(ow):
                for co in range(cout):
                    acc = 0.0
                    for ky in range(kh):
                        for kx in range(kw):
                            for ci in range(cin):
                                acc += x[n, y + ky, xx + kx, ci] * w[ky, kx, ci, co]
                    out[n, y, xx, co] = acc + b[co]


@njit(cache=True, parallel=True, fastmath=False)
def _avgpool2_forward(x, out):
    oh, ow, c = out.shape[1], out.shape[2], out.shape[3]
    for n in prange(x.shape[0]):
        for y in range(oh):
            for xx in range(ow):
                for ci in range(c):
                    acc = x[n, 2 * y, 2 * xx, ci]
                    acc += x[n, 2 * y, 2 * xx + 1, ci]
                    acc += x[n, 2 * y + 1, 2 * xx, ci]
                    acc += x[n, 2 * y + 1, 2 * xx + 1, ci]
                    out[n, y, xx, ci] = acc / 4.0
    return out


def conv2d_forward(x, w, b):
    """Valid cross-correlation, stride 1.  x: (N,H,W,Cin), w: (kh,kw,Cin,Cout)."""
    n, h, wd, _ = x.shape
    kh, kw, _, cout = w.shape
    out = np.empty((n, h - kh + 1, wd - kw + 1, cout))
    _conv2d_forward(x, w, b, out)
    return out


def conv2d_backward(x, w, gy, need_gx=True):
    """Gradients of the valid cross-correlation.

    Returns (gx, gw, gb); gx is None when need_gx is False (saves the
    scatter pass for the bottom layer during training).
    """
    kh, kw, cin, cout = w.shape
    oh, ow = gy.shape[1], gy.shape[2]
    gb = gy.sum(axis=(0, 1, 2))
    gw = np.empty_like(w)
    gx = np.zeros_like(x) if need_gx else None
    for ky in range(kh):
        for kx in range(kw):
            xs = x[:, ky : ky + oh, kx : kx + ow, :]
            gw[ky, kx] = np.tensordot(xs, gy, axes=([0, 1, 2], [0, 1, 2]))
            if need_gx:
                gx[:, ky : ky + oh, kx : kx + ow, :] += np.tensordot(
                    gy, w[ky, kx], axes=([3], [1])
                )
    return gx, gw, gb


def avgpool2_forward(x):
    """2x2 average pooling with stride 2; odd trailing rows/cols are dropped."""
    n, h, w, c = x.shape
    out = np.empty((n, h // 2, w // 2, c))
    _avgpool2_forward(x, out)
    return out


def avgpool2_backward(x_shape, gy):
    gx = np.zeros(x_shape)
    g = gy / 4.0
    oh, ow = gy.shape[1], gy.shape[2]
    gx[:, 0 : 2 * oh : 2, 0 : 2 * ow : 2, :] = g
    gx[:, 0 : 2 * oh : 2, 1 : 2 * ow : 2, :] = g
    gx[:, 1 : 2 * oh : 2, 0 : 2 * ow : 2, :] = g
    gx[:, 1 : 2 * oh : 2, 1 : 2 * ow : 2, :] = g
    return gx


def set_kernel_threads(n):
    """Pin the number of threads used by the compiled kernels."""
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
