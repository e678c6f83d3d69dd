import math

import numpy as np
import pytest

from edithumor.errors import ShapeMismatch
from edithumor.net.lstm import (
    LstmDirectionParams,
    bilstm_backward,
    bilstm_forward,
    direction_forward,
    init_direction,
    lstm_cell_backward,
    lstm_cell_forward,
    pooling_weights,
)

from fd import max_rel_error, numeric_grad


def _zero_params(D, H):
    return LstmDirectionParams(np.zeros((4 * H, D)), np.zeros((4 * H, H)), np.zeros(4 * H))


def _random_params(rng, D, H, scale=0.5):
    return LstmDirectionParams(
        rng.normal(0, scale, (4 * H, D)), rng.normal(0, scale, (4 * H, H)), rng.normal(0, scale, 4 * H)
    )


def test_zero_params_give_zero_state(rng):
    p = _zero_params(3, 4)
    h, c, _ = lstm_cell_forward(rng.normal(size=3), np.zeros(4), np.zeros(4), p)
    assert (h == 0).all() and (c == 0).all()


def test_forget_bias_only():
    H = 4
    p = _zero_params(3, H)
    p.b[H : 2 * H] = 1.0
    c_prev = np.ones(H)
    h, c, _ = lstm_cell_forward(np.zeros(3), np.zeros(H), c_prev, p)
    # scalar hand computation: sigmoid(1) * 1 + sigmoid(0) * tanh(0)
    sig1 = 1.0 / (1.0 + math.exp(-1.0))
    np.testing.assert_allclose(c, sig1 * c_prev, atol=1e-6)
    assert sig1 == pytest.approx(0.7311, abs=1e-4)
    np.testing.assert_allclose(h, 0.5 * math.tanh(sig1), atol=1e-6)


def test_init_direction_forget_bias(rng):
    p = init_direction(5, 3, rng)
    assert p.W.shape == (12, 5) and p.V.shape == (12, 3)
    np.testing.assert_array_equal(p.b, [0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0])
    lim = math.sqrt(6 / (5 + 12))
    assert np.abs(p.W).max() <= lim


def test_cell_shape_mismatch(rng):
    p = _zero_params(3, 4)
    with pytest.raises(ShapeMismatch):
        lstm_cell_forward(np.zeros(5), np.zeros(4), np.zeros(4), p)
    with pytest.raises(ShapeMismatch):
        lstm_cell_forward(np.zeros(3), np.zeros(2), np.zeros(2), p)


def test_cell_gradients_finite_difference(rng):
    D, H = 3, 4
    p = _random_params(rng, D, H)
    x, h0, c0 = rng.normal(size=D), rng.normal(size=H), rng.normal(size=H)
    rh, rc = rng.normal(size=H), rng.normal(size=H)

    def loss():
        h, c, _ = lstm_cell_forward(x, h0, c0, p)
        return float(rh @ h + rc @ c)

    _, _, cache = lstm_cell_forward(x, h0, c0, p)
    dx, dh0, dc0, dW, dV, db = lstm_cell_backward(rh, rc, cache, p)
    for analytic, target in ((dx, x), (dh0, h0), (dc0, c0), (dW, p.W), (dV, p.V), (db, p.b)):
        assert max_rel_error(analytic, numeric_grad(loss, target)) < 1e-4


def test_all_pad_summary_is_zero():
    D, H, L = 3, 4, 6
    fwd, bwd = _zero_params(D, H), _zero_params(D, H)
    fwd.W[:] = 0.3
    bwd.V[:] = -0.2
    out, _ = bilstm_forward(np.zeros((1, L, D)), np.array([0]), fwd, bwd)
    assert out.shape == (1, 2 * H)
    assert (out == 0).all()
    out, _ = bilstm_forward(np.zeros((1, L, D)), np.array([L]), fwd, bwd)
    assert (out == 0).all()


def test_reversal_property(rng):
    B, L, D, H = 3, 7, 4, 5
    x = rng.normal(size=(B, L, D))
    bwd = _random_params(rng, D, H)
    hb, _ = direction_forward(x, bwd, reverse=True)
    hr, _ = direction_forward(x[:, ::-1].copy(), bwd, reverse=False)
    np.testing.assert_allclose(hb, hr[:, ::-1], rtol=0, atol=1e-14)


def test_summary_picks_last_forward_and_first_backward(rng):
    B, L, D, H = 3, 5, 2, 3
    x = rng.normal(size=(B, L, D))
    lengths = np.array([5, 2, 1])
    fwd, bwd = _random_params(rng, D, H), _random_params(rng, D, H)
    out, _ = bilstm_forward(x, lengths, fwd, bwd)
    hf, _ = direction_forward(x, fwd)
    hb, _ = direction_forward(x, bwd, reverse=True)
    for i, n in enumerate(lengths):
        np.testing.assert_array_equal(out[i, :H], hf[i, n - 1])
        np.testing.assert_array_equal(out[i, H:], hb[i, 0])


def test_pooling_weights_mean():
    fwd, bwd = pooling_weights(np.array([2, 0, 4]), 4, "mean", np.float64)
    np.testing.assert_allclose(fwd.sum(axis=1), [1, 0, 1])
    np.testing.assert_allclose(fwd[0], [0.5, 0.5, 0, 0])
    np.testing.assert_array_equal(fwd, bwd)


def test_bilstm_rejects_bad_lengths(rng):
    p = _random_params(rng, 2, 3)
    with pytest.raises(ShapeMismatch):
        bilstm_forward(np.zeros((2, 4, 2)), np.array([5, 1]), p, p)
    with pytest.raises(ShapeMismatch):
        bilstm_forward(np.zeros((2, 4, 2)), np.array([1]), p, p)


@pytest.mark.parametrize("summary", ["last", "mean"])
def test_bilstm_bptt_finite_difference(rng, summary):
    B, L, D, H = 2, 5, 3, 4
    x = rng.normal(size=(B, L, D))
    lengths = np.array([5, 3])
    fwd, bwd = _random_params(rng, D, H), _random_params(rng, D, H)
    r = rng.normal(size=(B, 2 * H))

    def loss():
        out, _ = bilstm_forward(x, lengths, fwd, bwd, summary)
        return float(np.sum(out * r))

    _, cache = bilstm_forward(x, lengths, fwd, bwd, summary)
    dx, gf, gb = bilstm_backward(r, cache, fwd, bwd)
    assert max_rel_error(dx, numeric_grad(loss, x)) < 1e-4
    for params, grads in ((fwd, gf), (bwd, gb)):
        for name in ("W", "V", "b"):
            assert max_rel_error(grads[name], numeric_grad(loss, getattr(params, name))) < 1e-4
