"""Numba-compiled LSTM layer kernels (hot path).

Same contract as :mod:`qlstm.kernels_numpy`. Matmuls go through ``np.dot``
(BLAS) inside the jitted region; all elementwise gate math is fused into
single loops, which is where this path beats the pure-numpy fallback.
Selected at runtime by :mod:`qlstm.backend` (env var ``QLSTM_BACKEND``).
"""

import numpy as np
from numba import njit

ACT_SIGMOID = 0
ACT_TANH = 1
ACT_ELLIOT = 2
ACT_PARAM_ELLIOT = 3


@njit(cache=True)
def _cell_act(x, code, alpha):
    if code == ACT_SIGMOID:
        return 1.0 / (1.0 + np.exp(-x))
    if code == ACT_TANH:
        return np.tanh(x)
    if code == ACT_ELLIOT:
        return x / (1.0 + abs(x))
    return alpha * x / (1.0 + abs(x))


@njit(cache=True)
def _cell_act_grad(x, y, code, alpha):
    if code == ACT_SIGMOID:
        return y * (1.0 - y)
    if code == ACT_TANH:
        return 1.0 - y * y
    if code == ACT_ELLIOT:
        return 1.0 / ((1.0 + abs(x)) * (1.0 + abs(x)))
    return alpha / ((1.0 + abs(x)) * (1.0 + abs(x)))


@njit(cache=True)
def lstm_layer_forward(X, W_f, b_f, W_i, b_i, W_c, b_c, W_o, b_o,
                       act_code, alpha_cand, alpha_cell):
    T, N, _ = X.shape
    H = W_f.shape[1]
    f = np.empty((T, N, H))
    i = np.empty((T, N, H))
    o = np.empty((T, N, H))
    a_c = np.empty((T, N, H))
    chat = np.empty((T, N, H))
    C = np.empty((T, N, H))
    actC = np.empty((T, N, H))
    h = np.empty((T, N, H))

    h_prev = np.zeros((N, H))
    C_prev = np.zeros((N, H))
    for t in range(T):
        x_t = X[t]
        pre_f = np.dot(h_prev, W_f[:H]) + np.dot(x_t, W_f[H:])
        pre_i = np.dot(h_prev, W_i[:H]) + np.dot(x_t, W_i[H:])
        pre_o = np.dot(h_prev, W_o[:H]) + np.dot(x_t, W_o[H:])
        pre_c = np.dot(h_prev, W_c[:H]) + np.dot(x_t, W_c[H:])
        for n in range(N):
            for j in range(H):
                f_val = 1.0 / (1.0 + np.exp(-(pre_f[n, j] + b_f[j])))
                i_val = 1.0 / (1.0 + np.exp(-(pre_i[n, j] + b_i[j])))
                o_val = 1.0 / (1.0 + np.exp(-(pre_o[n, j] + b_o[j])))
                a_val = pre_c[n, j] + b_c[j]
                chat_val = _cell_act(a_val, act_code, alpha_cand)
                c_val = f_val * C_prev[n, j] + i_val * chat_val
                act_val = _cell_act(c_val, act_code, alpha_cell)
                f[t, n, j] = f_val
                i[t, n, j] = i_val
                o[t, n, j] = o_val
                a_c[t, n, j] = a_val
                chat[t, n, j] = chat_val
                C[t, n, j] = c_val
                actC[t, n, j] = act_val
                h[t, n, j] = o_val * act_val
        h_prev = h[t]
        C_prev = C[t]
    return f, i, o, a_c, chat, C, actC, h


@njit(cache=True)
def lstm_layer_backward(X, f, i, o, a_c, chat, C, actC, h,
                        W_f, W_i, W_c, W_o, d_h,
                        act_code, alpha_cand, alpha_cell):
    T, N, I = X.shape
    H = W_f.shape[1]
    dW_f = np.zeros_like(W_f)
    dW_i = np.zeros_like(W_i)
    dW_c = np.zeros_like(W_c)
    dW_o = np.zeros_like(W_o)
    db_f = np.zeros(H)
    db_i = np.zeros(H)
    db_c = np.zeros(H)
    db_o = np.zeros(H)
    dX = np.empty_like(X)
    d_alpha_cand = 0.0
    d_alpha_cell = 0.0

    # contiguous transposes once per call; np.dot needs contiguous operands
    Wf_hT = np.ascontiguousarray(W_f[:H].T)
    Wi_hT = np.ascontiguousarray(W_i[:H].T)
    Wc_hT = np.ascontiguousarray(W_c[:H].T)
    Wo_hT = np.ascontiguousarray(W_o[:H].T)
    Wf_xT = np.ascontiguousarray(W_f[H:].T)
    Wi_xT = np.ascontiguousarray(W_i[H:].T)
    Wc_xT = np.ascontiguousarray(W_c[H:].T)
    Wo_xT = np.ascontiguousarray(W_o[H:].T)

    dh_rec = np.zeros((N, H))
    dC = np.zeros((N, H))
    da_f = np.empty((N, H))
    da_i = np.empty((N, H))
    da_c = np.empty((N, H))
    da_o = np.empty((N, H))
    zeros_state = np.zeros((N, H))
    for t in range(T - 1, -1, -1):
        C_prev = C[t - 1] if t > 0 else zeros_state
        h_prev = h[t - 1] if t > 0 else zeros_state
        for n in range(N):
            for j in range(H):
                dh = d_h[t, n, j] + dh_rec[n, j]
                c_val = C[t, n, j]
                o_val = o[t, n, j]
                do = dh * actC[t, n, j]
                dC_val = dC[n, j] + dh * o_val * _cell_act_grad(
                    c_val, actC[t, n, j], act_code, alpha_cell)
                if act_code == ACT_PARAM_ELLIOT:
                    d_alpha_cell += dh * o_val * (c_val / (1.0 + abs(c_val)))

                dchat = dC_val * i[t, n, j]
                a_val = a_c[t, n, j]
                da_c[n, j] = dchat * _cell_act_grad(
                    a_val, chat[t, n, j], act_code, alpha_cand)
                if act_code == ACT_PARAM_ELLIOT:
                    d_alpha_cand += dchat * (a_val / (1.0 + abs(a_val)))

                di = dC_val * chat[t, n, j]
                da_i[n, j] = di * i[t, n, j] * (1.0 - i[t, n, j])
                df = dC_val * C_prev[n, j]
                da_f[n, j] = df * f[t, n, j] * (1.0 - f[t, n, j])
                da_o[n, j] = do * o_val * (1.0 - o_val)
                dC[n, j] = dC_val * f[t, n, j]
                db_f[j] += da_f[n, j]
                db_i[j] += da_i[n, j]
                db_c[j] += da_c[n, j]
                db_o[j] += da_o[n, j]

        h_prevT = np.ascontiguousarray(h_prev.T)
        x_tT = np.ascontiguousarray(X[t].T)
        dW_f[:H] += np.dot(h_prevT, da_f)
        dW_i[:H] += np.dot(h_prevT, da_i)
        dW_c[:H] += np.dot(h_prevT, da_c)
        dW_o[:H] += np.dot(h_prevT, da_o)
        dW_f[H:] += np.dot(x_tT, da_f)
        dW_i[H:] += np.dot(x_tT, da_i)
        dW_c[H:] += np.dot(x_tT, da_c)
        dW_o[H:] += np.dot(x_tT, da_o)

        dh_rec = (np.dot(da_f, Wf_hT) + np.dot(da_i, Wi_hT)
                  + np.dot(da_c, Wc_hT) + np.dot(da_o, Wo_hT))
        dX[t] = (np.dot(da_f, Wf_xT) + np.dot(da_i, Wi_xT)
                 + np.dot(da_c, Wc_xT) + np.dot(da_o, Wo_xT))

    return (dW_f, db_f, dW_i, db_i, dW_c, db_c, dW_o, db_o,
            dX, d_alpha_cand, d_alpha_cell)
