"""Batch normalization over the feature axis of a B x F matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateBatch, ShapeMismatch


@dataclass
class BatchNormParams:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    epsilon: float = 1e-3
    momentum: float = 0.99

    @classmethod
    def create(cls, features: int, epsilon=1e-3, momentum=0.99, dtype=np.float32):
        return cls(
            gamma=np.ones(features, dtype=dtype),
            beta=np.zeros(features, dtype=dtype),
            running_mean=np.zeros(features, dtype=dtype),
            running_var=np.ones(features, dtype=dtype),
            epsilon=epsilon,
            momentum=momentum,
        )


def batchnorm_forward(z, params: BatchNormParams, train: bool):
    """Standardize, scale by gamma, shift by beta.

    Train mode uses the batch's mean and population variance and updates the
    running statistics in place; infer mode uses the running statistics.
    """
    if z.ndim != 2 or z.shape[1] != params.gamma.shape[0]:
        raise ShapeMismatch(f"batchnorm input {z.shape} vs {params.gamma.shape[0]} features")
    if train:
        if z.shape[0] < 2:
            raise DegenerateBatch(f"train-mode batch norm needs >= 2 rows, got {z.shape[0]}")
        mean = z.mean(axis=0)
        var = z.var(axis=0)
        m = params.momentum
        params.running_mean[...] = m * params.running_mean + (1 - m) * mean
        params.running_var[...] = m * params.running_var + (1 - m) * var
    else:
        mean, var = params.running_mean, params.running_var
    inv_std = 1.0 / np.sqrt(var + params.epsilon)
    xhat = (z - mean) * inv_std
    out = params.gamma * xhat + params.beta
    return out, (xhat, inv_std, train)


def batchnorm_backward(dout, cache, params: BatchNormParams):
    """Returns ``(dz, dgamma, dbeta)``."""
    xhat, inv_std, train = cache
    dgamma = (dout * xhat).sum(axis=0)
    dbeta = dout.sum(axis=0)
    dxhat = dout * params.gamma
    if not train:
        return dxhat * inv_std, dgamma, dbeta
    n = dout.shape[0]
    dz = (inv_std / n) * (
        n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
    )
    return dz, dgamma, dbeta
