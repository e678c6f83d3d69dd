"""Embedding -> BiLSTM -> batch norm -> linear head, as flat named tensors.

Parameters live in one ``dict[str, ndarray]`` so the optimizer, checkpoint
writer and gradient checker can treat them uniformly. Batch-norm running
statistics are kept apart in ``buffers`` because they are not trained.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..text import PAD_ID
from .batchnorm import BatchNormParams, batchnorm_backward, batchnorm_forward
from .head import head_backward, head_forward
from .lstm import LstmDirectionParams, bilstm_backward, bilstm_forward, init_direction

PARAM_NAMES = (
    "embedding",
    "fwd.W",
    "fwd.V",
    "fwd.b",
    "bwd.W",
    "bwd.V",
    "bwd.b",
    "bn.gamma",
    "bn.beta",
    "head.w",
    "head.b",
)
BUFFER_NAMES = ("bn.running_mean", "bn.running_var")


@dataclass(frozen=True)
class ModelSpec:
    """Shape and behaviour knobs that are fixed for the life of a model."""

    vocab_size: int
    embed_dim: int = 300
    hidden: int = 128
    summary: str = "last"
    bn_epsilon: float = 1e-3
    bn_momentum: float = 0.99
    output_relu: bool = False


def init_params(spec: ModelSpec, rng: np.random.Generator, embedding=None, dtype=np.float32):
    """Fresh parameters and buffers. ``embedding`` (vocab x D) is copied if given."""
    params = {}
    if embedding is None:
        emb = rng.uniform(-0.05, 0.05, size=(spec.vocab_size, spec.embed_dim))
    else:
        emb = np.array(embedding)
        if emb.shape != (spec.vocab_size, spec.embed_dim):
            raise ValueError(f"embedding shape {emb.shape} does not match {spec}")
    emb = emb.astype(dtype)
    emb[PAD_ID] = 0.0
    params["embedding"] = emb
    for name in ("fwd", "bwd"):
        d = init_direction(spec.embed_dim, spec.hidden, rng, dtype)
        params[f"{name}.W"], params[f"{name}.V"], params[f"{name}.b"] = d.W, d.V, d.b
    F = 2 * spec.hidden
    bn = BatchNormParams.create(F, spec.bn_epsilon, spec.bn_momentum, dtype)
    params["bn.gamma"], params["bn.beta"] = bn.gamma, bn.beta
    lim = np.sqrt(6.0 / (F + 1))
    params["head.w"] = rng.uniform(-lim, lim, size=F).astype(dtype)
    params["head.b"] = np.zeros((), dtype=dtype)
    buffers = {"bn.running_mean": bn.running_mean, "bn.running_var": bn.running_var}
    return params, buffers


def _direction(params, name):
    return LstmDirectionParams(params[f"{name}.W"], params[f"{name}.V"], params[f"{name}.b"])


def _bn(params, buffers, spec):
    return BatchNormParams(
        params["bn.gamma"],
        params["bn.beta"],
        buffers["bn.running_mean"],
        buffers["bn.running_var"],
        spec.bn_epsilon,
        spec.bn_momentum,
    )


def model_forward(spec: ModelSpec, params, buffers, tokens, lengths, train: bool):
    """Predictions (B,) and a cache for :func:`model_backward`.

    Train mode normalizes with batch statistics and updates ``buffers``.
    """
    tokens = np.asarray(tokens)
    x = params["embedding"][tokens]
    fwd, bwd = _direction(params, "fwd"), _direction(params, "bwd")
    s, c_lstm = bilstm_forward(x, lengths, fwd, bwd, spec.summary)
    bn = _bn(params, buffers, spec)
    z, c_bn = batchnorm_forward(s, bn, train)
    pred, c_head = head_forward(z, params["head.w"], params["head.b"], spec.output_relu)
    return pred, (tokens, c_lstm, c_bn, c_head)


def model_backward(spec: ModelSpec, params, buffers, dpred, cache):
    """Gradients for every entry of ``params``.

    The embedding gradient includes the PAD row; the optimizer is what keeps
    that row frozen.
    """
    tokens, c_lstm, c_bn, c_head = cache
    dz, dw, db = head_backward(dpred, c_head, params["head.w"])
    ds, dgamma, dbeta = batchnorm_backward(dz, c_bn, _bn(params, buffers, spec))
    fwd, bwd = _direction(params, "fwd"), _direction(params, "bwd")
    dx, gf, gb = bilstm_backward(ds, c_lstm, fwd, bwd)
    demb = np.zeros_like(params["embedding"])
    np.add.at(demb, tokens.reshape(-1), dx.reshape(-1, dx.shape[-1]))
    grads = {"embedding": demb}
    for name, g in (("fwd", gf), ("bwd", gb)):
        for k, v in g.items():
            grads[f"{name}.{k}"] = v
    grads.update({"bn.gamma": dgamma, "bn.beta": dbeta, "head.w": dw, "head.b": db})
    return grads
