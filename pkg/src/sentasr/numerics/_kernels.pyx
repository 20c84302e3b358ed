# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled LSTM sequence kernels.

Same contract as _kernels_py (the pure-numpy reference): gate layout
[input, forget, cell, output], zero initial states. The time loop runs in C
with BLAS gemm for the recurrent matmuls.
"""

import numpy as np

from libc.math cimport exp, tanh
from libc.string cimport memcpy, memset
from scipy.linalg.cython_blas cimport sgemm, dgemm

ctypedef fused floating:
    float
    double


cdef inline double _sig(double x) nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline void _gemm_rm(bint ta, bint tb, int m, int n, int k,
                          floating alpha, floating* a, int lda,
                          floating* b, int ldb, floating beta,
                          floating* c, int ldc) nogil:
    # row-major C(m,n) = alpha*op(A)(m,k) @ op(B)(k,n) + beta*C, via the
    # column-major identity C^T = op(B)^T op(A)^T
    cdef char cta = b'T' if ta else b'N'
    cdef char ctb = b'T' if tb else b'N'
    if floating is float:
        sgemm(&ctb, &cta, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)
    else:
        dgemm(&ctb, &cta, &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


cdef void _forward(floating[:, :, ::1] gates, floating[:, ::1] w_h,
                   floating[:, :, ::1] h, floating[:, :, ::1] c,
                   floating[:, :, ::1] tanh_c) nogil:
    # gates arrives holding xp and is overwritten in place with the
    # post-activation gate values
    cdef int T = gates.shape[0]
    cdef int B = gates.shape[1]
    cdef int H = gates.shape[2] // 4
    cdef int t, b, j
    cdef double gi, gf, gz, go, cp, ct, tc
    cdef floating* gt
    for t in range(T):
        gt = &gates[t, 0, 0]
        if t > 0:
            _gemm_rm(False, False, B, 4 * H, H, <floating>1.0,
                     &h[t - 1, 0, 0], H, &w_h[0, 0], 4 * H,
                     <floating>1.0, gt, 4 * H)
        for b in range(B):
            for j in range(H):
                gi = _sig(<double>gates[t, b, j])
                gf = _sig(<double>gates[t, b, H + j])
                gz = tanh(<double>gates[t, b, 2 * H + j])
                go = _sig(<double>gates[t, b, 3 * H + j])
                cp = <double>c[t - 1, b, j] if t > 0 else 0.0
                ct = gf * cp + gi * gz
                tc = tanh(ct)
                gates[t, b, j] = <floating>gi
                gates[t, b, H + j] = <floating>gf
                gates[t, b, 2 * H + j] = <floating>gz
                gates[t, b, 3 * H + j] = <floating>go
                c[t, b, j] = <floating>ct
                tanh_c[t, b, j] = <floating>tc
                h[t, b, j] = <floating>(go * tc)


cdef void _backward(floating[:, :, ::1] d_h, floating[:, ::1] w_h,
                    floating[:, :, ::1] h, floating[:, :, ::1] c,
                    floating[:, :, ::1] gates, floating[:, :, ::1] tanh_c,
                    floating[:, :, ::1] d_xp, floating[:, ::1] d_wh,
                    floating[:, ::1] dh_rec, floating[:, ::1] dc) nogil:
    cdef int T = d_h.shape[0]
    cdef int B = d_h.shape[1]
    cdef int H = d_h.shape[2]
    cdef int t, b, j
    cdef double gi, gf, gz, go, tc, cp, dh, do_, dci, di, dz, df
    for t in range(T - 1, -1, -1):
        for b in range(B):
            for j in range(H):
                gi = <double>gates[t, b, j]
                gf = <double>gates[t, b, H + j]
                gz = <double>gates[t, b, 2 * H + j]
                go = <double>gates[t, b, 3 * H + j]
                tc = <double>tanh_c[t, b, j]
                cp = <double>c[t - 1, b, j] if t > 0 else 0.0
                dh = <double>d_h[t, b, j] + <double>dh_rec[b, j]
                do_ = dh * tc
                dci = <double>dc[b, j] + dh * go * (1.0 - tc * tc)
                di = dci * gz
                dz = dci * gi
                df = dci * cp
                dc[b, j] = <floating>(dci * gf)
                d_xp[t, b, j] = <floating>(di * gi * (1.0 - gi))
                d_xp[t, b, H + j] = <floating>(df * gf * (1.0 - gf))
                d_xp[t, b, 2 * H + j] = <floating>(dz * (1.0 - gz * gz))
                d_xp[t, b, 3 * H + j] = <floating>(do_ * go * (1.0 - go))
        if t > 0:
            # d_wh += h_{t-1}^T @ dg ; dh_rec = dg @ w_h^T
            _gemm_rm(True, False, H, 4 * H, B, <floating>1.0,
                     &h[t - 1, 0, 0], H, &d_xp[t, 0, 0], 4 * H,
                     <floating>1.0, &d_wh[0, 0], 4 * H)
            _gemm_rm(False, True, B, H, 4 * H, <floating>1.0,
                     &d_xp[t, 0, 0], 4 * H, &w_h[0, 0], 4 * H,
                     <floating>0.0, &dh_rec[0, 0], H)
        else:
            memset(&dh_rec[0, 0], 0, B * H * sizeof(floating))


def lstm_forward(xp, w_h):
    """See _kernels_py.lstm_forward; identical contract."""
    T, B, H4 = xp.shape
    H = H4 // 4
    dt = xp.dtype
    gates = np.ascontiguousarray(xp).copy()
    h = np.empty((T, B, H), dtype=dt)
    c = np.empty((T, B, H), dtype=dt)
    tanh_c = np.empty((T, B, H), dtype=dt)
    w_h = np.ascontiguousarray(w_h)
    if dt == np.float32:
        _forward[float](gates, w_h, h, c, tanh_c)
    elif dt == np.float64:
        _forward[double](gates, w_h, h, c, tanh_c)
    else:
        raise TypeError(f"unsupported dtype {dt}")
    return h, (h, c, gates, tanh_c)


def lstm_backward(d_h, w_h, cache):
    """See _kernels_py.lstm_backward; identical contract."""
    h, c, gates, tanh_c = cache
    T, B, H = d_h.shape
    dt = d_h.dtype
    d_h = np.ascontiguousarray(d_h)
    w_h = np.ascontiguousarray(w_h)
    d_xp = np.empty((T, B, 4 * H), dtype=dt)
    d_wh = np.zeros_like(w_h)
    dh_rec = np.zeros((B, H), dtype=dt)
    dc = np.zeros((B, H), dtype=dt)
    if dt == np.float32:
        _backward[float](d_h, w_h, h, c, gates, tanh_c, d_xp, d_wh, dh_rec, dc)
    elif dt == np.float64:
        _backward[double](d_h, w_h, h, c, gates, tanh_c, d_xp, d_wh, dh_rec, dc)
    else:
        raise TypeError(f"unsupported dtype {dt}")
    return d_xp, d_wh
