"""Pure-numpy LSTM sequence kernels.

Reference implementation of the hot recurrence; `sentasr.numerics.backend`
swaps in the compiled version when it is available. Both backends share the
exact same contract:

  lstm_forward(xp, w_h)         xp (T, B, 4H) = x @ w_x + b, precomputed
  lstm_backward(d_h, w_h, cache)

Gate layout along the last axis is [input, forget, cell, output]. The
initial hidden and cell states are zero.
"""

import numpy as np


def _sigmoid(x):
    # evaluated piecewise to stay overflow-free for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def lstm_forward(xp, w_h):
    """Run one LSTM direction over a padded batch.

    xp: (T, B, 4H) input projections, w_h: (H, 4H) recurrent weights.
    Returns (h, cache); h is (T, B, H), cache holds what backward needs.
    """
    T, B, H4 = xp.shape
    H = H4 // 4
    dt = xp.dtype
    h = np.empty((T, B, H), dtype=dt)
    c = np.empty((T, B, H), dtype=dt)
    gates = np.empty((T, B, H4), dtype=dt)
    tanh_c = np.empty((T, B, H), dtype=dt)
    h_prev = np.zeros((B, H), dtype=dt)
    c_prev = np.zeros((B, H), dtype=dt)
    for t in range(T):
        g = xp[t] + h_prev @ w_h
        i = _sigmoid(g[:, :H])
        f = _sigmoid(g[:, H:2 * H])
        z = np.tanh(g[:, 2 * H:3 * H])
        o = _sigmoid(g[:, 3 * H:])
        c_t = f * c_prev + i * z
        tc = np.tanh(c_t)
        h_t = o * tc
        gates[t, :, :H] = i
        gates[t, :, H:2 * H] = f
        gates[t, :, 2 * H:3 * H] = z
        gates[t, :, 3 * H:] = o
        c[t] = c_t
        tanh_c[t] = tc
        h[t] = h_t
        h_prev = h_t
        c_prev = c_t
    return h, (h, c, gates, tanh_c)


def lstm_backward(d_h, w_h, cache):
    """Backward pass matching lstm_forward.

    d_h: (T, B, H) adjoint of the hidden outputs.
    Returns (d_xp, d_wh).
    """
    h, c, gates, tanh_c = cache
    T, B, H = d_h.shape
    dt = d_h.dtype
    d_xp = np.empty((T, B, 4 * H), dtype=dt)
    d_wh = np.zeros_like(w_h)
    dh_rec = np.zeros((B, H), dtype=dt)
    dc = np.zeros((B, H), dtype=dt)
    w_h_t = w_h.T.copy()
    for t in range(T - 1, -1, -1):
        i = gates[t, :, :H]
        f = gates[t, :, H:2 * H]
        z = gates[t, :, 2 * H:3 * H]
        o = gates[t, :, 3 * H:]
        tc = tanh_c[t]
        c_prev = c[t - 1] if t > 0 else np.zeros((B, H), dtype=dt)
        h_prev = h[t - 1] if t > 0 else np.zeros((B, H), dtype=dt)

        dh = d_h[t] + dh_rec
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * z
        dz = dc * i
        df = dc * c_prev
        dc = dc * f

        dg = d_xp[t]
        dg[:, :H] = di * i * (1.0 - i)
        dg[:, H:2 * H] = df * f * (1.0 - f)
        dg[:, 2 * H:3 * H] = dz * (1.0 - z * z)
        dg[:, 3 * H:] = do * o * (1.0 - o)

        d_wh += h_prev.T @ dg
        dh_rec = dg @ w_h_t
    return d_xp, d_wh
