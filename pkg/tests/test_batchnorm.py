import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edithumor.errors import DegenerateBatch, ShapeMismatch
from edithumor.net.batchnorm import BatchNormParams, batchnorm_backward, batchnorm_forward

from fd import max_rel_error, numeric_grad


def _params(F, dtype=np.float64, **kw):
    return BatchNormParams.create(F, dtype=dtype, **kw)


def test_constant_batch_gives_zeros():
    z = np.tile([1.0, -2.0, 5.0], (8, 1))
    out, _ = batchnorm_forward(z, _params(3), train=True)
    np.testing.assert_array_equal(out, np.zeros_like(z))


def test_gamma_zero_outputs_beta(rng):
    p = _params(4)
    p.gamma[:] = 0
    p.beta[:] = [1, 2, 3, 4]
    out, _ = batchnorm_forward(rng.normal(size=(6, 4)), p, train=True)
    np.testing.assert_array_equal(out, np.tile(p.beta, (6, 1)))


def test_train_mode_standardizes(rng):
    z = rng.normal(3.0, 2.0, size=(64, 10))
    p = _params(10)
    out, (xhat, _, _) = batchnorm_forward(z, p, train=True)
    var = z.var(axis=0)
    assert np.abs(out.mean(axis=0)).max() < 1e-5
    # population variance of the standardized values is var / (var + eps)
    np.testing.assert_allclose(out.var(axis=0) * (var + p.epsilon) / var, 1.0, atol=1e-5)
    np.testing.assert_array_equal(out, xhat)


def test_running_stats_update(rng):
    z = rng.normal(size=(5, 3))
    p = _params(3)
    batchnorm_forward(z, p, train=True)
    np.testing.assert_allclose(p.running_mean, 0.01 * z.mean(axis=0))
    np.testing.assert_allclose(p.running_var, 0.99 + 0.01 * z.var(axis=0))
    assert (p.running_var >= 0).all()


def test_degenerate_batch():
    with pytest.raises(DegenerateBatch):
        batchnorm_forward(np.ones((1, 3)), _params(3), train=True)
    out, _ = batchnorm_forward(np.ones((1, 3)), _params(3), train=False)
    assert out.shape == (1, 3)


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        batchnorm_forward(np.ones((4, 2)), _params(3), train=True)


@pytest.mark.parametrize("train", [True, False])
def test_backward_finite_difference(rng, train):
    z = rng.normal(size=(5, 4))
    p = _params(4)
    p.gamma[:] = rng.normal(size=4)
    p.beta[:] = rng.normal(size=4)
    p.running_mean[:] = rng.normal(size=4)
    p.running_var[:] = rng.uniform(0.5, 2, size=4)
    r = rng.normal(size=(5, 4))

    def loss():
        q = BatchNormParams(p.gamma, p.beta, p.running_mean.copy(), p.running_var.copy(), p.epsilon)
        return float(np.sum(batchnorm_forward(z, q, train)[0] * r))

    q = BatchNormParams(p.gamma, p.beta, p.running_mean.copy(), p.running_var.copy(), p.epsilon)
    _, cache = batchnorm_forward(z, q, train)
    dz, dgamma, dbeta = batchnorm_backward(r, cache, p)
    assert max_rel_error(dz, numeric_grad(loss, z)) < 1e-4
    assert max_rel_error(dgamma, numeric_grad(loss, p.gamma)) < 1e-4
    assert max_rel_error(dbeta, numeric_grad(loss, p.beta)) < 1e-4


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 1000))
def test_infer_mode_is_per_example_affine(n, seed):
    rng = np.random.default_rng(seed)
    p = _params(3)
    p.running_mean[:] = rng.normal(size=3)
    p.running_var[:] = rng.uniform(0.1, 3, size=3)
    p.gamma[:] = rng.normal(size=3)
    z = rng.normal(size=(n, 3))
    out, _ = batchnorm_forward(z, p, train=False)
    # each row alone gives the same result as inside the batch
    for i in range(n):
        alone, _ = batchnorm_forward(z[i : i + 1], p, train=False)
        np.testing.assert_allclose(alone[0], out[i], rtol=0, atol=1e-15)
    # affine: f(a z1 + (1-a) z2) = a f(z1) + (1-a) f(z2)
    z2 = rng.normal(size=(n, 3))
    a = 0.3
    mix, _ = batchnorm_forward(a * z + (1 - a) * z2, p, train=False)
    out2, _ = batchnorm_forward(z2, p, train=False)
    np.testing.assert_allclose(mix, a * out + (1 - a) * out2, atol=1e-12)
