"""Loss, RMSprop and the training loop."""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from typing import Sequence

import numpy as np

from .corpus import Example, stack
from .errors import EmptyBatch, NonFiniteLoss, ShapeMismatch
from .net.head import clamp
from .net.model import ModelSpec, init_params, model_backward, model_forward
from .text import PAD_ID

log = logging.getLogger(__name__)

# rows of these parameters that the optimizer never touches
FROZEN_ROWS = {"embedding": (PAD_ID,)}


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 128
    learning_rate: float = 0.001
    rho: float = 0.9
    eps: float = 1e-8
    seq_len: int = 20
    hidden: int = 128
    embed_dim: int = 300
    seed: int = 0
    shuffle: bool = True
    clamp_eval: bool = True
    clip_norm: float | None = None
    summary: str = "last"
    output_relu: bool = False
    bn_epsilon: float = 1e-3
    bn_momentum: float = 0.99

    def __post_init__(self):
        for name in ("batch_size", "learning_rate", "seq_len", "hidden", "embed_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.summary not in ("last", "mean"):
            raise ValueError(f"summary must be 'last' or 'mean', not {self.summary!r}")

    def model_spec(self, vocab_size: int) -> ModelSpec:
        return ModelSpec(
            vocab_size=vocab_size,
            embed_dim=self.embed_dim,
            hidden=self.hidden,
            summary=self.summary,
            bn_epsilon=self.bn_epsilon,
            bn_momentum=self.bn_momentum,
            output_relu=self.output_relu,
        )

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class TrainState:
    config: TrainConfig
    spec: ModelSpec
    params: dict
    buffers: dict
    opt: dict
    rng: np.random.Generator
    epoch: int = 0

    def copy(self) -> "TrainState":
        return copy.deepcopy(self)


@dataclass
class TrainResult:
    state: TrainState
    best: TrainState
    history: list[tuple[int, float, float]] = field(default_factory=list)
    initial_mse: float = math.nan
    best_epoch: int = 0


def mse_loss(pred, target):
    """Mean squared error and its gradient with respect to ``pred``."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
    n = pred.size
    if n == 0:
        raise EmptyBatch("mse_loss of an empty batch")
    diff = pred - target
    return float(np.mean(diff * diff)), (2.0 / n) * diff


def init_rmsprop(params: dict) -> dict:
    return {k: np.zeros_like(v) for k, v in params.items()}


def rmsprop_step(params: dict, grads: dict, state: dict, lr: float, rho=0.9, eps=1e-8):
    """In-place update: ``s = rho s + (1-rho) g^2``, ``p -= lr g / (sqrt(s) + eps)``.

    Rows listed in ``FROZEN_ROWS`` keep both parameter and accumulator. For
    those tensors only rows with a nonzero gradient are updated; every other
    row's accumulator just decays, which is exactly the dense result.
    """
    for name, p in params.items():
        g = grads[name]
        s = state[name]
        if g.shape != p.shape or s.shape != p.shape:
            raise ShapeMismatch(f"{name}: param {p.shape}, grad {g.shape}, state {s.shape}")
        frozen = FROZEN_ROWS.get(name)
        if frozen is None:
            s *= rho
            s += (1 - rho) * g * g
            p -= lr * g / (np.sqrt(s) + eps)
            continue
        live = np.ones(p.shape[0], dtype=bool)
        live[list(frozen)] = False
        s[live] *= rho
        rows = np.flatnonzero(live & g.reshape(g.shape[0], -1).any(axis=1))
        g = g[rows]
        s_rows = s[rows] + (1 - rho) * g * g
        s[rows] = s_rows
        p[rows] -= lr * g / (np.sqrt(s_rows) + eps)


def _clip(grads: dict, max_norm: float) -> float:
    total = math.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / (total + 1e-12)
        for g in grads.values():
            g *= scale
    return total


def new_state(config: TrainConfig, vocab_size: int, embedding=None, rng=None) -> TrainState:
    rng = np.random.default_rng(config.seed) if rng is None else rng
    spec = config.model_spec(vocab_size)
    params, buffers = init_params(spec, rng, embedding)
    return TrainState(config, spec, params, buffers, init_rmsprop(params), rng)


def predict(state: TrainState, tokens, lengths, batch_size=512, clamp_output=False):
    """Infer-mode predictions; never touches running statistics."""
    out = []
    for i in range(0, len(tokens), batch_size):
        pred, _ = model_forward(
            state.spec,
            state.params,
            state.buffers,
            tokens[i : i + batch_size],
            lengths[i : i + batch_size],
            train=False,
        )
        out.append(pred)
    pred = np.concatenate(out) if out else np.zeros(0, dtype=np.float32)
    return clamp(pred) if clamp_output else pred


def predict_examples(state: TrainState, examples: Sequence[Example], clamp_output=False):
    tokens, lengths, _ = stack(examples)
    return predict(state, tokens, lengths, clamp_output=clamp_output)


def _batches(n: int, batch_size: int, order):
    out = []
    for i in range(0, n, batch_size):
        idx = order[i : i + batch_size]
        if len(idx) >= 2:
            out.append(idx)
    return out


def _train_mode_mse(state: TrainState, tokens, lengths, targets) -> float:
    """MSE under batch statistics without touching the real running stats."""
    buffers = {k: v.copy() for k, v in state.buffers.items()}
    sq, count = 0.0, 0
    for idx in _batches(len(targets), state.config.batch_size, np.arange(len(targets))):
        pred, _ = model_forward(state.spec, state.params, buffers, tokens[idx], lengths[idx], True)
        sq += float(np.sum((pred.astype(np.float64) - targets[idx]) ** 2))
        count += len(idx)
    return sq / count if count else math.nan


def train(
    train_examples: Sequence[Example],
    config: TrainConfig,
    vocab_size: int,
    dev_examples: Sequence[Example] | None = None,
    embedding=None,
    state: TrainState | None = None,
) -> TrainResult:
    """Run ``config.epochs`` epochs of minibatch RMSprop on the MSE loss.

    Every epoch reshuffles with the state's generator. A final batch of one
    example is dropped since train-mode batch norm needs two rows. The best
    state by dev RMSE is kept alongside the last one; training never stops early.
    """
    if not train_examples:
        raise EmptyBatch("training set is empty")
    tokens, lengths, targets = stack(train_examples)
    if targets is None:
        raise ValueError("training examples must all carry a target")
    if tokens.shape[1] != config.seq_len:
        raise ShapeMismatch(f"examples have length {tokens.shape[1]}, config says {config.seq_len}")
    if state is None:
        state = new_state(config, vocab_size, embedding)
    dev = stack(dev_examples) if dev_examples else None
    if dev is not None and dev[2] is None:
        raise ValueError("dev examples must all carry a target")

    result = TrainResult(state=state, best=state.copy())
    result.initial_mse = _train_mode_mse(state, tokens, lengths, targets)
    best_rmse = math.inf
    dtype = state.params["embedding"].dtype
    n = len(targets)
    for _ in range(config.epochs):
        state.epoch += 1
        order = state.rng.permutation(n) if config.shuffle else np.arange(n)
        sq, count = 0.0, 0
        for step, idx in enumerate(_batches(n, config.batch_size, order)):
            pred, cache = model_forward(
                state.spec, state.params, state.buffers, tokens[idx], lengths[idx], True
            )
            loss, dpred = mse_loss(pred, targets[idx].astype(dtype))
            if not math.isfinite(loss):
                raise NonFiniteLoss(state.epoch, step, loss)
            grads = model_backward(state.spec, state.params, state.buffers, dpred, cache)
            if config.clip_norm is not None:
                _clip(grads, config.clip_norm)
            rmsprop_step(state.params, grads, state.opt, config.learning_rate, config.rho, config.eps)
            sq += loss * len(idx)
            count += len(idx)
        train_mse = sq / count if count else math.nan
        dev_rmse = math.nan
        if dev is not None:
            pred = predict(state, dev[0], dev[1], clamp_output=config.clamp_eval)
            dev_rmse = float(np.sqrt(np.mean((pred.astype(np.float64) - dev[2]) ** 2)))
            if dev_rmse < best_rmse:
                best_rmse = dev_rmse
                result.best = state.copy()
                result.best_epoch = state.epoch
        result.history.append((state.epoch, train_mse, dev_rmse))
        log.info("epoch %d  train_mse %.5f  dev_rmse %.5f", state.epoch, train_mse, dev_rmse)
    if dev is None or result.best_epoch == 0:
        result.best = state.copy()
        result.best_epoch = state.epoch
    return result


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
