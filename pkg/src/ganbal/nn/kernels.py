"""Convolution kernels (NCHW layout, square kernels).

Three primitives cover both conv2d and transposed_conv2d:

* ``conv_forward``      y = x (*) w
* ``conv_input_grad``   adjoint of conv_forward w.r.t. x (this *is* the
                        transposed convolution)
* ``conv_weight_grad``  gradient of <conv_forward(x, w), gy> w.r.t. w

Each has a numba loop version and a numpy version. ``_backend.USE_NUMBA``
picks one at import time. Both accumulate in a fixed order, so results are
reproducible run to run within one backend (not bit-equal across backends).
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .._backend import USE_NUMBA, njit


def out_extent(n, k, stride, pad):
    return (n + 2 * pad - k) // stride + 1


def transposed_extent(n, k, stride, pad):
    return (n - 1) * stride - 2 * pad + k


# ---------------------------------------------------------------- numpy path

def _windows(x, k, stride, pad, ho, wo):
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    win = sliding_window_view(xp, (k, k), axis=(2, 3))
    # (N, C, Ho, Wo, k, k)
    return win[:, :, : (ho - 1) * stride + 1 : stride, : (wo - 1) * stride + 1 : stride]


def np_conv_forward(x, w, stride, pad):
    n, c, h, wd = x.shape
    k = w.shape[2]
    ho, wo = out_extent(h, k, stride, pad), out_extent(wd, k, stride, pad)
    cols = _windows(x, k, stride, pad, ho, wo)
    y = np.tensordot(cols, w, axes=([1, 4, 5], [1, 2, 3]))  # N, Ho, Wo, O
    return np.ascontiguousarray(y.transpose(0, 3, 1, 2))


def np_conv_input_grad(gy, w, h, wd, stride, pad):
    n, o, ho, wo = gy.shape
    c, k = w.shape[1], w.shape[2]
    gxp = np.zeros((n, c, h + 2 * pad, wd + 2 * pad), dtype=gy.dtype)
    for ky in range(k):
        for kx in range(k):
            contrib = np.tensordot(gy, w[:, :, ky, kx], axes=([1], [0]))  # N, Ho, Wo, C
            gxp[:, :, ky : ky + stride * (ho - 1) + 1 : stride,
                kx : kx + stride * (wo - 1) + 1 : stride] += contrib.transpose(0, 3, 1, 2)
    return np.ascontiguousarray(gxp[:, :, pad : pad + h, pad : pad + wd])


def np_conv_weight_grad(x, gy, k, stride, pad):
    ho, wo = gy.shape[2], gy.shape[3]
    cols = _windows(x, k, stride, pad, ho, wo)
    return np.ascontiguousarray(np.tensordot(gy, cols, axes=([0, 2, 3], [0, 2, 3])))


# ---------------------------------------------------------------- numba path

if USE_NUMBA:

    @njit(cache=True)
    def _nb_im2col(x, k, stride, pad, ho, wo):
        # rows: (n, oy, ox); cols: (c, ky, kx)
        n_, c_, h, wd = x.shape
        cols = np.zeros((n_ * ho * wo, c_ * k * k), dtype=x.dtype)
        for n in range(n_):
            for oy in range(ho):
                for ox in range(wo):
                    r = (n * ho + oy) * wo + ox
                    for c in range(c_):
                        for ky in range(k):
                            iy = oy * stride - pad + ky
                            if iy < 0 or iy >= h:
                                continue
                            base = (c * k + ky) * k
                            for kx in range(k):
                                ix = ox * stride - pad + kx
                                if ix >= 0 and ix < wd:
                                    cols[r, base + kx] = x[n, c, iy, ix]
        return cols

    @njit(cache=True)
    def _nb_col2im(cols, n_, c_, h, wd, k, stride, pad, ho, wo):
        gx = np.zeros((n_, c_, h, wd), dtype=cols.dtype)
        for n in range(n_):
            for oy in range(ho):
                for ox in range(wo):
                    r = (n * ho + oy) * wo + ox
                    for c in range(c_):
                        for ky in range(k):
                            iy = oy * stride - pad + ky
                            if iy < 0 or iy >= h:
                                continue
                            base = (c * k + ky) * k
                            for kx in range(k):
                                ix = ox * stride - pad + kx
                                if ix >= 0 and ix < wd:
                                    gx[n, c, iy, ix] += cols[r, base + kx]
        return gx

    @njit(cache=True)
    def _nb_rows_to_nchw(rows, n_, o_, ho, wo):
        y = np.empty((n_, o_, ho, wo), dtype=rows.dtype)
        for n in range(n_):
            for oy in range(ho):
                for ox in range(wo):
                    r = (n * ho + oy) * wo + ox
                    for o in range(o_):
                        y[n, o, oy, ox] = rows[r, o]
        return y

    @njit(cache=True)
    def _nb_nchw_to_rows(y):
        n_, o_, ho, wo = y.shape
        rows = np.empty((n_ * ho * wo, o_), dtype=y.dtype)
        for n in range(n_):
            for oy in range(ho):
                for ox in range(wo):
                    r = (n * ho + oy) * wo + ox
                    for o in range(o_):
                        rows[r, o] = y[n, o, oy, ox]
        return rows

    @njit(cache=True)
    def _nb_conv_forward(x, w, stride, pad, ho, wo):
        o_, k = w.shape[0], w.shape[2]
        cols = _nb_im2col(x, k, stride, pad, ho, wo)
        wm = np.ascontiguousarray(w.reshape(o_, -1).T)
        return _nb_rows_to_nchw(np.dot(cols, wm), x.shape[0], o_, ho, wo)

    @njit(cache=True)
    def _nb_conv_input_grad(gy, w, h, wd, stride, pad):
        n_, o_, ho, wo = gy.shape
        c_, k = w.shape[1], w.shape[2]
        g = _nb_nchw_to_rows(gy)
        cols = np.dot(g, np.ascontiguousarray(w.reshape(o_, -1)))
        return _nb_col2im(cols, n_, c_, h, wd, k, stride, pad, ho, wo)

    @njit(cache=True)
    def _nb_conv_weight_grad(x, gy, k, stride, pad):
        o_, ho, wo = gy.shape[1], gy.shape[2], gy.shape[3]
        cols = _nb_im2col(x, k, stride, pad, ho, wo)
        g = _nb_nchw_to_rows(gy)
        gw = np.dot(np.ascontiguousarray(g.T), cols)
        return gw.reshape(o_, x.shape[1], k, k)

    def nb_conv_forward(x, w, stride, pad):
        k = w.shape[2]
        ho = out_extent(x.shape[2], k, stride, pad)
        wo = out_extent(x.shape[3], k, stride, pad)
        return _nb_conv_forward(np.ascontiguousarray(x), np.ascontiguousarray(w), stride, pad, ho, wo)

    def nb_conv_input_grad(gy, w, h, wd, stride, pad):
        return _nb_conv_input_grad(np.ascontiguousarray(gy), np.ascontiguousarray(w), h, wd, stride, pad)

    def nb_conv_weight_grad(x, gy, k, stride, pad):
        return _nb_conv_weight_grad(np.ascontiguousarray(x), np.ascontiguousarray(gy), k, stride, pad)

    conv_forward = nb_conv_forward
    conv_input_grad = nb_conv_input_grad
    conv_weight_grad = nb_conv_weight_grad
else:
    conv_forward = np_conv_forward
    conv_input_grad = np_conv_input_grad
    conv_weight_grad = np_conv_weight_grad
