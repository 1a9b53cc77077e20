"""Batched forward and backward passes for each classifier layer.

All functions take a leading batch axis. Forward functions return
``(output, cache)``; backward functions take the upstream gradient and the
cache and return ``(input_gradient, parameter_gradients)``.
"""
import numpy as np

from ..errors import ShapeError


def sigmoid(x):
    """Logistic function, split by sign so ``exp`` never overflows."""
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0, e) / (1.0 + e)


def _mm(x, m):
    """``x @ m`` over the last axis of ``x`` as one 2-D BLAS call."""
    x2 = np.ascontiguousarray(x).reshape(-1, x.shape[-1])
    return (x2 @ m).reshape(x.shape[:-1] + (m.shape[-1],))


def softmax(z, axis=-1):
    z = z - np.max(z, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def log_softmax(z, axis=-1):
    z = z - np.max(z, axis=axis, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=axis, keepdims=True))


# -- 1-D convolution ---------------------------------------------------------

def conv1d_forward(x, w, b):
    """Valid, stride-1 convolution over time followed by relu.

    x: (B, v, d); w: (n_f, m, d); b: (n_f,) -> (B, v - m + 1, n_f)
    """
    if x.ndim != 3 or w.ndim != 3 or x.shape[2] != w.shape[2] or w.shape[1] > x.shape[1]:
        raise ShapeError(f"conv1d: input {x.shape} incompatible with filters {w.shape}")
    n_f, m, d = w.shape
    t_out = x.shape[1] - m + 1
    patches = np.stack([x[:, i:i + m, :].reshape(x.shape[0], m * d) for i in range(t_out)], axis=1)
    z = _mm(patches, w.reshape(n_f, m * d).T) + b
    return np.maximum(z, 0.0), (patches, z, w.shape)


def conv1d_backward(dout, cache):
    patches, z, wshape = cache
    n_f, m, d = wshape
    dz = dout * (z > 0)
    dw = (dz.reshape(-1, n_f).T @ patches.reshape(-1, m * d)).reshape(wshape)
    db = dz.sum(axis=(0, 1))
    return {"w": dw, "b": db}


# -- LSTM ----------------------------------------------------------------------
# Stacked gate layout along the first axis of W, U and b: input, forget, output, candidate.

def lstm_forward(x, W, U, b):
    """Scan an LSTM over time from t=0 with zero initial state.

    x: (B, T, in); W: (4H, in); U: (4H, H); b: (4H,) -> hidden states (B, T, H)
    """
    B, T, n_in = x.shape
    H = U.shape[1]
    if W.shape != (4 * H, n_in) or U.shape != (4 * H, H) or b.shape != (4 * H,):
        raise ShapeError(f"lstm: bad parameter shapes W{W.shape} U{U.shape} b{b.shape} for input {x.shape}")
    xw = _mm(x, W.T) + b
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    hs = np.empty((B, T, H))
    h_prev_all = np.empty((B, T, H))
    steps = []
    for t in range(T):
        a = xw[:, t] + h @ U.T
        gates = sigmoid(a[:, :3 * H])
        i, f, o = gates[:, :H], gates[:, H:2 * H], gates[:, 2 * H:]
        g = np.tanh(a[:, 3 * H:])
        c_prev = c
        h_prev_all[:, t] = h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        hs[:, t] = h
        steps.append((i, f, o, g, c_prev, tc))
    return hs, (x, W, U, steps, h_prev_all)


def lstm_backward(dhs, cache):
    """Backpropagation through time; returns (dx, {"W", "U", "b"})."""
    x, W, U, steps, h_prev_all = cache
    B, T, n_in = x.shape
    H = U.shape[1]
    da_all = np.empty((B, T, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    for t in reversed(range(T)):
        i, f, o, g, c_prev, tc = steps[t]
        dh = dhs[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        da = da_all[:, t]
        da[:, :H] = dc * g * i * (1.0 - i)
        da[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
        da[:, 2 * H:3 * H] = dh * tc * o * (1.0 - o)
        da[:, 3 * H:] = dc * i * (1.0 - g * g)
        dh_next = da @ U
        dc_next = dc * f
    flat = da_all.reshape(B * T, 4 * H)
    dW = flat.T @ x.reshape(B * T, n_in)
    dU = flat.T @ h_prev_all.reshape(B * T, H)
    db = flat.sum(axis=0)
    dx = _mm(da_all, W)
    return dx, {"W": dW, "U": dU, "b": db}


def bilstm_forward(x, fwd, bwd):
    """Forward and time-reversed LSTM passes, concatenated per step -> (B, T, 2H).

    ``fwd`` and ``bwd`` are (W, U, b) triples.
    """
    hf, cf = lstm_forward(x, *fwd)
    hb_rev, cb = lstm_forward(x[:, ::-1], *bwd)
    return np.concatenate([hf, hb_rev[:, ::-1]], axis=2), (cf, cb, hf.shape[2])


def bilstm_backward(dout, cache):
    cf, cb, H = cache
    dxf, gf = lstm_backward(dout[:, :, :H], cf)
    dxb_rev, gb = lstm_backward(dout[:, ::-1, H:], cb)
    return dxf + dxb_rev[:, ::-1], gf, gb


# -- self-attention ------------------------------------------------------------

def attention_forward(h, Wg, Wg_prime, bg, Walpha, balpha, check=False):
    """Additive self-attention with a logistic score squashed before the softmax.

    h: (B, T, D); Wg, Wg_prime: (A, D); bg: (A,); Walpha: (1, A); balpha: (1,)
    Returns context vectors (B, T, D); the cache carries the (B, T, T) weights.
    """
    if h.ndim != 3 or Wg.shape[1] != h.shape[2] or Wg_prime.shape != Wg.shape or Walpha.shape != (1, Wg.shape[0]):
        raise ShapeError(f"attention: input {h.shape} incompatible with Wg {Wg.shape}")
    p_query = _mm(h, Wg.T)
    p_key = _mm(h, Wg_prime.T)
    g = np.tanh(p_query[:, :, None, :] + p_key[:, None, :, :] + bg)
    score = sigmoid(g @ Walpha[0] + balpha[0])
    weights = softmax(score, axis=-1)
    if check:
        assert np.all(np.abs(weights.sum(axis=-1) - 1.0) <= 1e-12)
    out = weights @ h
    return out, (h, Wg, Wg_prime, Walpha, g, score, weights)


def attention_backward(dout, cache):
    h, Wg, Wg_prime, Walpha, g, score, weights = cache
    dweights = dout @ h.transpose(0, 2, 1)
    dh = weights.transpose(0, 2, 1) @ dout
    dscore = weights * (dweights - np.sum(dweights * weights, axis=-1, keepdims=True))
    de = dscore * score * (1.0 - score)
    dWalpha = (de.reshape(-1) @ g.reshape(-1, g.shape[-1]))[None, :]
    dbalpha = np.array([de.sum()])
    dpre = de[..., None] * Walpha[0] * (1.0 - g * g)
    dbg = dpre.sum(axis=(0, 1, 2))
    dq = dpre.sum(axis=2)
    dk = dpre.sum(axis=1)
    h2 = h.reshape(-1, h.shape[-1])
    dWg = dq.reshape(-1, dq.shape[-1]).T @ h2
    dWg_prime = dk.reshape(-1, dk.shape[-1]).T @ h2
    dh = dh + _mm(dq, Wg) + _mm(dk, Wg_prime)
    grads = {"Wg": dWg, "Wg_prime": dWg_prime, "bg": dbg, "Walpha": dWalpha, "balpha": dbalpha}
    return dh, grads


# -- flatten, dropout, dense softmax --------------------------------------------

def head_forward(l, W, b, mask=None, p=0.0):
    """Flatten each sample row-major, apply inverted dropout if ``mask`` is given,
    then a dense layer and softmax. Returns (probabilities, logits, cache)."""
    B = l.shape[0]
    flat = l.reshape(B, -1)
    if W.shape[1] != flat.shape[1]:
        raise ShapeError(f"dense: weight {W.shape} vs flattened input width {flat.shape[1]}")
    if mask is not None:
        flat = flat * mask / (1.0 - p)
    logits = flat @ W.T + b
    return softmax(logits), logits, (flat, W, mask, p, l.shape)


def head_backward(dlogits, cache):
    flat, W, mask, p, lshape = cache
    dW = dlogits.T @ flat
    db = dlogits.sum(axis=0)
    dflat = dlogits @ W
    if mask is not None:
        dflat = dflat * mask / (1.0 - p)
    return dflat.reshape(lshape), {"W": dW, "b": db}
