"""LSTM cell, single-direction scan and the bidirectional layer.

Gate rows of ``W`` (4H x D), ``V`` (4H x H) and ``b`` (4H) are stacked in
the order input, forget, cell candidate, output:

    i, f, o = sigmoid(.)        g = tanh(.)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

Padding positions are run through the recurrence like any other step; the
PAD embedding is zero so only biases act there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeMismatch


def sigmoid(x):
    # tanh form avoids overflow warnings in exp for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmDirectionParams:
    W: np.ndarray
    V: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.V.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def check(self):
        H4, D = self.W.shape
        if H4 % 4 or self.V.shape != (H4, H4 // 4) or self.b.shape != (H4,):
            raise ShapeMismatch(
                f"inconsistent LSTM shapes W{self.W.shape} V{self.V.shape} b{self.b.shape}"
            )


def init_direction(input_dim: int, hidden: int, rng: np.random.Generator, dtype=np.float32):
    """Glorot-uniform weights, zero biases except 1.0 on the forget gate."""
    H4 = 4 * hidden
    lim_w = np.sqrt(6.0 / (input_dim + H4))
    lim_v = np.sqrt(6.0 / (hidden + H4))
    W = rng.uniform(-lim_w, lim_w, size=(H4, input_dim)).astype(dtype)
    V = rng.uniform(-lim_v, lim_v, size=(H4, hidden)).astype(dtype)
    b = np.zeros(H4, dtype=dtype)
    b[hidden : 2 * hidden] = 1.0
    return LstmDirectionParams(W, V, b)


def _cell(xw_t, h_prev, c_prev, V, H):
    a = xw_t + h_prev @ V.T
    i = sigmoid(a[:, :H])
    f = sigmoid(a[:, H : 2 * H])
    g = np.tanh(a[:, 2 * H : 3 * H])
    o = sigmoid(a[:, 3 * H :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (h_prev, c_prev, i, f, g, o, tc)


def _cell_backward(dh, dc, cache, V, H):
    h_prev, c_prev, i, f, g, o, tc = cache
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    da = np.concatenate(
        [
            dc * g * i * (1.0 - i),
            dc * c_prev * f * (1.0 - f),
            dc * i * (1.0 - g * g),
            do * o * (1.0 - o),
        ],
        axis=1,
    )
    return da, da @ V, dc * f


def lstm_cell_forward(x_t, h_prev, c_prev, params: LstmDirectionParams):
    """One LSTM step. Accepts single vectors or batches (rows = examples)."""
    params.check()
    H = params.hidden
    single = np.ndim(x_t) == 1
    x_t, h_prev, c_prev = (np.atleast_2d(v) for v in (x_t, h_prev, c_prev))
    if x_t.shape[1] != params.input_dim or h_prev.shape[1] != H or c_prev.shape != h_prev.shape:
        raise ShapeMismatch(
            f"x{x_t.shape} h{h_prev.shape} c{c_prev.shape} vs D={params.input_dim}, H={H}"
        )
    if x_t.shape[0] != h_prev.shape[0]:
        raise ShapeMismatch("batch sizes of x and state differ")
    xw = x_t @ params.W.T + params.b
    h, c, inner = _cell(xw, h_prev, c_prev, params.V, H)
    cache = (x_t, single, inner)
    if single:
        return h[0], c[0], cache
    return h, c, cache


def lstm_cell_backward(dh, dc, cache, params: LstmDirectionParams):
    """Returns ``(dx, dh_prev, dc_prev, dW, dV, db)`` for one step."""
    x_t, single, inner = cache
    H = params.hidden
    dh, dc = np.atleast_2d(dh), np.atleast_2d(dc)
    da, dh_prev, dc_prev = _cell_backward(dh, dc, inner, params.V, H)
    dW = da.T @ x_t
    dV = da.T @ inner[0]
    db = da.sum(axis=0)
    dx = da @ params.W
    if single:
        return dx[0], dh_prev[0], dc_prev[0], dW, dV, db
    return dx, dh_prev, dc_prev, dW, dV, db


def direction_forward(x, params: LstmDirectionParams, reverse: bool = False):
    """Scan ``x`` (B x L x D) from zero state. Returns states (B x L x H) at
    their original time positions, plus a cache for :func:`direction_backward`."""
    params.check()
    B, L, D = x.shape
    if D != params.input_dim:
        raise ShapeMismatch(f"input dim {D} != {params.input_dim}")
    H = params.hidden
    xw = (x.reshape(B * L, D) @ params.W.T + params.b).reshape(B, L, 4 * H)
    h = np.zeros((B, H), dtype=x.dtype)
    c = np.zeros((B, H), dtype=x.dtype)
    hs = np.empty((B, L, H), dtype=x.dtype)
    steps = range(L - 1, -1, -1) if reverse else range(L)
    caches = {}
    for t in steps:
        h, c, caches[t] = _cell(xw[:, t], h, c, params.V, H)
        hs[:, t] = h
    return hs, (x, reverse, caches)


def direction_backward(dhs, cache, params: LstmDirectionParams):
    """BPTT for one direction. ``dhs`` holds dLoss/dh_t at each position.
    Returns ``(dx, {"W", "V", "b"})``."""
    x, reverse, caches = cache
    B, L, D = x.shape
    H = params.hidden
    dh = np.zeros((B, H), dtype=dhs.dtype)
    dc = np.zeros((B, H), dtype=dhs.dtype)
    das = np.zeros((B, L, 4 * H), dtype=dhs.dtype)
    steps = range(L) if reverse else range(L - 1, -1, -1)
    for t in steps:
        da, dh, dc = _cell_backward(dh + dhs[:, t], dc, caches[t], params.V, H)
        das[:, t] = da
    hprev = np.stack([caches[t][0] for t in range(L)], axis=1)
    flat_da = das.reshape(B * L, 4 * H)
    grads = {
        "W": flat_da.T @ x.reshape(B * L, D),
        "V": flat_da.T @ hprev.reshape(B * L, H),
        "b": flat_da.sum(axis=0),
    }
    dx = (flat_da @ params.W).reshape(B, L, D)
    return dx, grads


def pooling_weights(lengths, L: int, mode: str = "last", dtype=np.float32):
    """Per-position weights that collapse each direction's states to one vector.

    ``last`` picks the forward state at ``length - 1`` and the backward state at
    position 0; ``mean`` averages both directions over valid positions.
    Zero-length rows get all-zero weights.
    """
    lengths = np.asarray(lengths)
    B = lengths.shape[0]
    fwd = np.zeros((B, L), dtype=dtype)
    bwd = np.zeros((B, L), dtype=dtype)
    rows = np.nonzero(lengths > 0)[0]
    if mode == "last":
        fwd[rows, lengths[rows] - 1] = 1.0
        bwd[rows, 0] = 1.0
    elif mode == "mean":
        valid = np.arange(L)[None, :] < lengths[:, None]
        w = valid / np.maximum(lengths, 1)[:, None]
        fwd[:] = w
        bwd[:] = w
    else:
        raise ValueError(f"unknown summary mode {mode!r}")
    return fwd, bwd


def bilstm_forward(x, lengths, fwd: LstmDirectionParams, bwd: LstmDirectionParams, summary="last"):
    """BiLSTM over a padded batch ``x`` (B x L x D); returns (B x 2H summary, cache)."""
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeMismatch(f"expected B x L x D input, got shape {x.shape}")
    lengths = np.asarray(lengths)
    B, L, _ = x.shape
    if lengths.shape != (B,) or (lengths > L).any() or (lengths < 0).any():
        raise ShapeMismatch(f"lengths {lengths.shape} invalid for batch {B} x {L}")
    if fwd.hidden != bwd.hidden or fwd.input_dim != bwd.input_dim:
        raise ShapeMismatch("forward and backward directions disagree on D or H")
    hf, cf = direction_forward(x, fwd, reverse=False)
    hb, cb = direction_forward(x, bwd, reverse=True)
    pf, pb = pooling_weights(lengths, L, summary, x.dtype)
    out = np.concatenate(
        [np.einsum("bl,blh->bh", pf, hf), np.einsum("bl,blh->bh", pb, hb)], axis=1
    )
    return out, (cf, cb, pf, pb, hf, hb)


def bilstm_backward(dout, cache, fwd: LstmDirectionParams, bwd: LstmDirectionParams):
    """Returns ``(dx, grads_fwd, grads_bwd)``."""
    cf, cb, pf, pb, _, _ = cache
    H = fwd.hidden
    dhf = pf[:, :, None] * dout[:, None, :H]
    dhb = pb[:, :, None] * dout[:, None, H:]
    dxf, gf = direction_backward(dhf, cf, fwd)
    dxb, gb = direction_backward(dhb, cb, bwd)
    return dxf + dxb, gf, gb
