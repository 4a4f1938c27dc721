"""Sequence kernels for one LSTM layer over a full window batch.

Written in the numba-compatible subset of numpy so the same source runs
jitted or plain (see package __init__). Constraints that shape the code:
no helper-function calls, np.dot only on contiguous operands (hence the
explicit ascontiguousarray on transposes), and branches that must yield
arrays of one dtype/layout.

Gate layout everywhere is the stacked order [i, f, o, g] along the 4H
axis: input gate, forget gate, output gate, candidate.
"""

import numpy as np


def lstm_layer_forward(x, wx, wh, b):
    """Run one layer left-to-right from zero state.

    x: (T, N, D) inputs; wx: (4H, D); wh: (4H, H); b: (4H,).
    Returns (h_seq, c_seq, gates, tanh_c), each (T, N, ...), the caches
    the backward pass consumes. gates holds post-activation i/f/o/g.
    """
    T, N = x.shape[0], x.shape[1]
    h4 = wx.shape[0]
    H = h4 // 4
    h_seq = np.zeros((T, N, H))
    c_seq = np.zeros((T, N, H))
    gates = np.zeros((T, N, h4))
    tanh_c = np.zeros((T, N, H))
    h = np.zeros((N, H))
    c = np.zeros((N, H))
    wx_t = np.ascontiguousarray(wx.T)
    wh_t = np.ascontiguousarray(wh.T)
    for t in range(T):
        z = np.dot(x[t], wx_t) + np.dot(h, wh_t) + b
        zs = z[:, : 3 * H]
        e = np.exp(-np.abs(zs))
        sig = np.where(zs >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
        g = np.tanh(z[:, 3 * H :])
        i = sig[:, :H]
        f = sig[:, H : 2 * H]
        o = sig[:, 2 * H : 3 * H]
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        gates[t, :, : 3 * H] = sig
        gates[t, :, 3 * H :] = g
        h_seq[t] = h
        c_seq[t] = c
        tanh_c[t] = tc
    return h_seq, c_seq, gates, tanh_c


def lstm_layer_backward(x, wx, wh, h_seq, c_seq, gates, tanh_c, dh_seq):
    """Backprop through time for one layer.

    dh_seq: (T, N, H) upstream gradient w.r.t. every hidden output h_t.
    Returns (dx, dwx, dwh, db) matching the forward argument shapes.
    """
    T, N = x.shape[0], x.shape[1]
    D = x.shape[2]
    h4 = wx.shape[0]
    H = h4 // 4
    dx = np.zeros((T, N, D))
    dwx = np.zeros((h4, D))
    dwh = np.zeros((h4, H))
    db = np.zeros(h4)
    dh_next = np.zeros((N, H))
    dc_next = np.zeros((N, H))
    zero_nh = np.zeros((N, H))
    for t in range(T - 1, -1, -1):
        i = gates[t, :, :H]
        f = gates[t, :, H : 2 * H]
        o = gates[t, :, 2 * H : 3 * H]
        g = gates[t, :, 3 * H :]
        tc = tanh_c[t]
        c_prev = c_seq[t - 1] if t > 0 else zero_nh
        h_prev = h_seq[t - 1] if t > 0 else zero_nh

        dh = dh_seq[t] + dh_next
        do = dh * tc
        dc = dc_next + dh * o * (1.0 - tc * tc)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        dc_next = dc * f

        dz = np.empty((N, h4))
        dz[:, :H] = di * i * (1.0 - i)
        dz[:, H : 2 * H] = df * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = do * o * (1.0 - o)
        dz[:, 3 * H :] = dg * (1.0 - g * g)

        dz_t = np.ascontiguousarray(dz.T)
        dwx += np.dot(dz_t, x[t])
        dwh += np.dot(dz_t, h_prev)
        db += np.sum(dz, axis=0)
        dx[t] = np.dot(dz, wx)
        dh_next = np.dot(dz, wh)
    return dx, dwx, dwh, db
