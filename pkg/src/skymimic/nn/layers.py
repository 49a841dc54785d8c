"""Forward passes and hand-derived backward passes for the fixed
architectures used here: affine layers, tanh MLPs, LSTM cells and
sequences, and softmax. Everything is float64 and batched over the
leading axis.
"""

from __future__ import annotations

import numpy as np

from .params import DimensionError, ParamSet, uniform_init


class NumericError(ArithmeticError):
    """Raised when a computation produces non-finite values."""


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


# ---------------------------------------------------------------------------
# affine

def affine(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    x, W, b = np.asarray(x, float), np.asarray(W, float), np.asarray(b, float)
    if x.shape[-1] != W.shape[0]:
        raise DimensionError(
            f"affine: x shape {x.shape} does not conform with W shape "
            f"{W.shape}")
    if b.shape[-1] != W.shape[1]:
        raise DimensionError(
            f"affine: b shape {b.shape} does not conform with W shape "
            f"{W.shape}")
    return x @ W + b


def affine_backward(dy: np.ndarray, x: np.ndarray, W: np.ndarray):
    """Returns (dx, dW, db) for y = xW + b."""
    x2 = x if x.ndim == 2 else x[None, :]
    dy2 = dy if dy.ndim == 2 else dy[None, :]
    dx = dy2 @ W.T
    dW = x2.T @ dy2
    db = dy2.sum(axis=0)
    return dx.reshape(x.shape), dW, db


# ---------------------------------------------------------------------------
# softmax

def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, float)
    if z.size == 0:
        raise ValueError("softmax: empty input")
    m = z.max(axis=-1, keepdims=True)
    e = np.exp(z - m)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# LSTM cell; gate order i, f, g, o in the stacked weight matrices.

def lstm_init(rng: np.random.Generator, d_in: int, hidden: int,
              prefix: str = "") -> ParamSet:
    p = ParamSet()
    p[prefix + "Wx"] = uniform_init(rng, d_in, (d_in, 4 * hidden))
    p[prefix + "Wh"] = uniform_init(rng, hidden, (hidden, 4 * hidden))
    p[prefix + "b"] = np.zeros(4 * hidden)
    return p


def lstm_step(x: np.ndarray, h: np.ndarray, c: np.ndarray, p: ParamSet,
              prefix: str = ""):
    """One LSTM cell update. Returns (h', c', cache) for backward."""
    Wx, Wh, b = p[prefix + "Wx"], p[prefix + "Wh"], p[prefix + "b"]
    x = np.asarray(x, float)
    h = np.asarray(h, float)
    c = np.asarray(c, float)
    if x.shape[-1] != Wx.shape[0]:
        raise DimensionError(
            f"lstm_step: input shape {x.shape} vs Wx shape {Wx.shape}")
    H = Wh.shape[0]
    if h.shape[-1] != H or c.shape[-1] != H:
        raise DimensionError(
            f"lstm_step: state shapes {h.shape}/{c.shape} vs hidden {H}")
    z = x @ Wx + h @ Wh + b
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:])
    c_new = f * c + i * g
    tc = np.tanh(c_new)
    h_new = o * tc
    cache = (x, h, c, i, f, g, o, tc)
    return h_new, c_new, cache


def lstm_step_backward(dh: np.ndarray, dc: np.ndarray, cache, p: ParamSet,
                       grads: ParamSet, prefix: str = ""):
    """Backward of one cell step.

    dh, dc are gradients w.r.t. h', c'. Accumulates weight gradients
    into `grads` and returns (dx, dh_prev, dc_prev).
    """
    x, h, c, i, f, g, o, tc = cache
    Wx, Wh = p[prefix + "Wx"], p[prefix + "Wh"]
    H = Wh.shape[0]
    do = dh * tc
    dct = dc + dh * o * (1.0 - tc * tc)
    df = dct * c
    dc_prev = dct * f
    di = dct * g
    dg = dct * i
    dz = np.concatenate([
        di * i * (1.0 - i),
        df * f * (1.0 - f),
        dg * (1.0 - g * g),
        do * o * (1.0 - o),
    ], axis=-1)
    x2 = x if x.ndim == 2 else x[None, :]
    h2 = h if h.ndim == 2 else h[None, :]
    dz2 = dz if dz.ndim == 2 else dz[None, :]
    grads[prefix + "Wx"] = grads[prefix + "Wx"] + x2.T @ dz2
    grads[prefix + "Wh"] = grads[prefix + "Wh"] + h2.T @ dz2
    grads[prefix + "b"] = grads[prefix + "b"] + dz2.sum(axis=0)
    dx = (dz2 @ Wx.T).reshape(x.shape)
    dh_prev = (dz2 @ Wh.T).reshape(h.shape)
    return dx, dh_prev, dc_prev


def lstm_forward(xs: np.ndarray, p: ParamSet, prefix: str = "",
                 h0: np.ndarray | None = None,
                 c0: np.ndarray | None = None):
    """Run the cell over time axis 0 of xs (T, ..., D).

    Returns (hs stacked over time, final h, final c, caches).
    """
    H = p[prefix + "Wh"].shape[0]
    lead = xs.shape[1:-1]
    h = np.zeros(lead + (H,)) if h0 is None else h0
    c = np.zeros(lead + (H,)) if c0 is None else c0
    hs, caches = [], []
    for t in range(xs.shape[0]):
        h, c, cache = lstm_step(xs[t], h, c, p, prefix)
        hs.append(h)
        caches.append(cache)
    return np.stack(hs), h, c, caches


def lstm_backward(dhs, caches, p: ParamSet, grads: ParamSet,
                  prefix: str = "", dh_final=None, dc_final=None):
    """BPTT over a sequence run by lstm_forward.

    dhs: per-step gradients w.r.t. each h_t (array over time, or None).
    dh_final/dc_final: extra gradient flowing into the last state.
    Returns (dxs stacked over time, dh0, dc0).
    """
    T = len(caches)
    sample = caches[-1][1]
    dh = np.zeros_like(sample) if dh_final is None else dh_final.copy()
    dc = np.zeros_like(sample) if dc_final is None else dc_final.copy()
    dxs = [None] * T
    for t in range(T - 1, -1, -1):
        if dhs is not None:
            dh = dh + dhs[t]
        dx, dh, dc = lstm_step_backward(dh, dc, caches[t], p, grads, prefix)
        dxs[t] = dx
    return np.stack(dxs), dh, dc


# ---------------------------------------------------------------------------
# tanh MLP with linear output head

def mlp_init(rng: np.random.Generator, dims: list[int],
             prefix: str = "") -> ParamSet:
    p = ParamSet()
    for li in range(len(dims) - 1):
        p[f"{prefix}W{li}"] = uniform_init(rng, dims[li],
                                           (dims[li], dims[li + 1]))
        p[f"{prefix}b{li}"] = np.zeros(dims[li + 1])
    return p


def mlp_forward(x: np.ndarray, p: ParamSet, n_layers: int, prefix: str = ""):
    """tanh on hidden layers, linear output. Returns (y, cache)."""
    acts = [np.asarray(x, float)]
    for li in range(n_layers):
        z = affine(acts[-1], p[f"{prefix}W{li}"], p[f"{prefix}b{li}"])
        acts.append(np.tanh(z) if li < n_layers - 1 else z)
    return acts[-1], acts


def mlp_backward(dy: np.ndarray, acts, p: ParamSet, n_layers: int,
                 grads: ParamSet, prefix: str = "") -> np.ndarray:
    """Returns dx; accumulates parameter gradients into grads."""
    d = dy
    for li in range(n_layers - 1, -1, -1):
        if li < n_layers - 1:
            a = acts[li + 1]
            d = d * (1.0 - a * a)
        dx, dW, db = affine_backward(d, acts[li], p[f"{prefix}W{li}"])
        grads[f"{prefix}W{li}"] = grads[f"{prefix}W{li}"] + dW
        grads[f"{prefix}b{li}"] = grads[f"{prefix}b{li}"] + db
        d = dx
    return d


def check_finite(name: str, *arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError(f"{name}: non-finite values encountered")
