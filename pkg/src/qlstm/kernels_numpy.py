"""Pure-numpy LSTM layer kernels (fallback path, also the reference).

Arrays are time-major: inputs are [T, N, I], per-step state is [N, H]. Gate
weights are stored as [H+I, H] with the hidden part in the first H rows, so
the pre-activation is ``h_prev @ W[:H] + x_t @ W[H:] + b``. Gates always use
the sigmoid; the candidate and the cell output use the configured cell
activation, passed as an integer code with its two shape parameters (the
candidate and cell-output alphas are equal when the model shares one).
"""

import numpy as np

# Cell-activation codes; must match activations.ACT_CODES.
ACT_SIGMOID = 0
ACT_TANH = 1
ACT_ELLIOT = 2
ACT_PARAM_ELLIOT = 3


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _cell_act(x, code, alpha):
    if code == ACT_SIGMOID:
        return _sigmoid(x)
    if code == ACT_TANH:
        return np.tanh(x)
    if code == ACT_ELLIOT:
        return x / (1.0 + np.abs(x))
    return alpha * x / (1.0 + np.abs(x))


def _cell_act_grad(x, y, code, alpha):
    """Derivative of the cell activation at pre-activation x (y = act(x))."""
    if code == ACT_SIGMOID:
        return y * (1.0 - y)
    if code == ACT_TANH:
        return 1.0 - y * y
    if code == ACT_ELLIOT:
        return 1.0 / (1.0 + np.abs(x)) ** 2
    return alpha / (1.0 + np.abs(x)) ** 2


def lstm_layer_forward(X, W_f, b_f, W_i, b_i, W_c, b_c, W_o, b_o,
                       act_code, alpha_cand, alpha_cell):
    """Run one LSTM layer over a [T, N, I] batch with h_0 = C_0 = 0.

    Returns the tape (f, i, o, a_c, chat, C, actC, h), each [T, N, H], where
    a_c is the candidate pre-activation and actC the activated cell state
    that the output gate multiplies.
    """
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
        f[t] = _sigmoid(h_prev @ W_f[:H] + x_t @ W_f[H:] + b_f)
        i[t] = _sigmoid(h_prev @ W_i[:H] + x_t @ W_i[H:] + b_i)
        o[t] = _sigmoid(h_prev @ W_o[:H] + x_t @ W_o[H:] + b_o)
        a_c[t] = h_prev @ W_c[:H] + x_t @ W_c[H:] + b_c
        chat[t] = _cell_act(a_c[t], act_code, alpha_cand)
        C[t] = f[t] * C_prev + i[t] * chat[t]
        actC[t] = _cell_act(C[t], act_code, alpha_cell)
        h[t] = o[t] * actC[t]
        h_prev = h[t]
        C_prev = C[t]
    return f, i, o, a_c, chat, C, actC, h


def lstm_layer_backward(X, f, i, o, a_c, chat, C, actC, h,
                        W_f, W_i, W_c, W_o, d_h,
                        act_code, alpha_cand, alpha_cell):
    """Full BPTT for one layer given per-step incoming gradients d_h [T, N, H].

    Returns gate weight/bias gradients, the gradient dX [T, N, I] flowing to
    the layer below, and the accumulated gradients of the candidate and
    cell-output activation parameters (zero unless the activation is the
    parameterized Elliot).
    """
    T, N, _ = X.shape
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

    dh_rec = np.zeros((N, H))
    dC = np.zeros((N, H))
    for t in range(T - 1, -1, -1):
        dh = d_h[t] + dh_rec
        do = dh * actC[t]
        dC = dC + dh * o[t] * _cell_act_grad(C[t], actC[t], act_code, alpha_cell)
        if act_code == ACT_PARAM_ELLIOT:
            d_alpha_cell += float(np.sum(dh * o[t] * (C[t] / (1.0 + np.abs(C[t])))))

        dchat = dC * i[t]
        da_c = dchat * _cell_act_grad(a_c[t], chat[t], act_code, alpha_cand)
        if act_code == ACT_PARAM_ELLIOT:
            d_alpha_cand += float(np.sum(dchat * (a_c[t] / (1.0 + np.abs(a_c[t])))))

        di = dC * chat[t]
        da_i = di * i[t] * (1.0 - i[t])
        C_prev = C[t - 1] if t > 0 else np.zeros((N, H))
        df = dC * C_prev
        da_f = df * f[t] * (1.0 - f[t])
        da_o = do * o[t] * (1.0 - o[t])

        h_prev = h[t - 1] if t > 0 else np.zeros((N, H))
        x_t = X[t]
        dW_f[:H] += h_prev.T @ da_f
        dW_f[H:] += x_t.T @ da_f
        db_f += da_f.sum(axis=0)
        dW_i[:H] += h_prev.T @ da_i
        dW_i[H:] += x_t.T @ da_i
        db_i += da_i.sum(axis=0)
        dW_c[:H] += h_prev.T @ da_c
        dW_c[H:] += x_t.T @ da_c
        db_c += da_c.sum(axis=0)
        dW_o[:H] += h_prev.T @ da_o
        dW_o[H:] += x_t.T @ da_o
        db_o += da_o.sum(axis=0)

        dh_rec = (da_f @ W_f[:H].T + da_i @ W_i[:H].T
                  + da_c @ W_c[:H].T + da_o @ W_o[:H].T)
        dX[t] = (da_f @ W_f[H:].T + da_i @ W_i[H:].T
                 + da_c @ W_c[H:].T + da_o @ W_o[H:].T)
        dC = dC * f[t]

    return (dW_f, db_f, dW_i, db_i, dW_c, db_c, dW_o, db_o,
            dX, d_alpha_cand, d_alpha_cell)
