"""Finite-difference verification of the model's analytic gradients.

Runs the full model in float64 on toy dimensions, perturbs sampled
coordinates of every parameter tensor by +/- ``step`` and compares the
central difference of the MSE loss with the backward pass.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from .net.model import PARAM_NAMES, ModelSpec, init_params, model_backward, model_forward
from .text import PAD_ID
from .train import mse_loss

MAX_TOY_DIM = 8


@dataclass
class GradcheckConfig:
    batch: int = 4
    seq_len: int = 5
    embed_dim: int = 6
    hidden: int = 4
    vocab_size: int = 8
    samples: int = 20
    step: float = 1e-5
    tolerance: float = 1e-4
    seed: int = 0
    summary: str = "last"
    output_relu: bool = False
    zero_loss: bool = False

    def __post_init__(self):
        dims = (self.batch, self.seq_len, self.embed_dim, self.hidden, self.vocab_size)
        if max(dims) > MAX_TOY_DIM:
            raise ValueError(f"gradcheck dimensions must be <= {MAX_TOY_DIM}, got {dims}")
        if self.batch < 2:
            raise ValueError("batch must be >= 2 for train-mode batch norm")


@dataclass
class GradcheckReport:
    max_rel_error: dict[str, float] = field(default_factory=dict)
    coords_checked: dict[str, int] = field(default_factory=dict)
    tolerance: float = 1e-4

    @property
    def failures(self) -> list[str]:
        return [k for k, v in self.max_rel_error.items() if not v < self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.failures

    def lines(self) -> list[str]:
        out = []
        for name, err in self.max_rel_error.items():
            status = "ok" if err < self.tolerance else "FAIL"
            out.append(f"{name:<12} {self.coords_checked[name]:>4} coords  max rel err {err:.3e}  {status}")
        return out


def relative_error(analytic: float, numeric: float, floor: float = 1e-8) -> float:
    """``|a - n| / max(|a|, |n|)``; falls back to the absolute error when both
    magnitudes are below ``floor`` so that zero gradients compare cleanly."""
    scale = max(abs(analytic), abs(numeric))
    diff = abs(analytic - numeric)
    return diff / scale if scale > floor else diff


def toy_problem(config: GradcheckConfig):
    """Random float64 model, batch and targets for the harness."""
    rng = np.random.default_rng(config.seed)
    spec = ModelSpec(
        vocab_size=config.vocab_size,
        embed_dim=config.embed_dim,
        hidden=config.hidden,
        summary=config.summary,
        output_relu=config.output_relu,
    )
    params, buffers = init_params(spec, rng, dtype=np.float64)
    B, L = config.batch, config.seq_len
    lengths = rng.integers(1, L + 1, size=B)
    lengths[0] = L
    tokens = rng.integers(1, config.vocab_size, size=(B, L))
    tokens[0, 1] = tokens[0, 0]  # a repeated token, so embedding grads accumulate
    for i, n in enumerate(lengths):
        tokens[i, n:] = PAD_ID
    if config.zero_loss:
        for name in PARAM_NAMES:
            params[name][...] = 0.0
        params["head.b"][...] = 1.5
        targets = np.full(B, 1.5)
    else:
        # move off the init point so BN affine params and biases are generic
        for name in PARAM_NAMES:
            params[name] += rng.normal(0.0, 0.1, size=params[name].shape)
        params["embedding"][PAD_ID] = 0.0
        targets = rng.uniform(0.0, 3.0, size=B)
    return spec, params, buffers, tokens, lengths, targets, rng


def gradcheck(
    config: GradcheckConfig | None = None,
    grad_hook: Callable[[dict], dict] | None = None,
) -> GradcheckReport:
    """Compare analytic and central-difference gradients for every parameter.

    ``grad_hook`` may rewrite the analytic gradients before comparison; it
    exists for fault-injection tests.
    """
    config = config or GradcheckConfig()
    spec, params, buffers, tokens, lengths, targets, rng = toy_problem(config)

    def loss() -> float:
        scratch = {k: v.copy() for k, v in buffers.items()}
        pred, _ = model_forward(spec, params, scratch, tokens, lengths, train=True)
        return mse_loss(pred, targets)[0]

    pred, cache = model_forward(spec, params, dict(buffers), tokens, lengths, train=True)
    _, dpred = mse_loss(pred, targets)
    grads = model_backward(spec, params, buffers, dpred, cache)
    if grad_hook is not None:
        grads = grad_hook(grads)

    report = GradcheckReport(tolerance=config.tolerance)
    h = config.step
    for name in PARAM_NAMES:
        p = params[name]
        size = p.size
        if size <= config.samples:
            flat_idx = np.arange(size)
        else:
            flat_idx = rng.choice(size, config.samples, replace=False)
        worst = 0.0
        for k in flat_idx:
            idx = np.unravel_index(k, p.shape)
            orig = p[idx]
            p[idx] = orig + h
            up = loss()
            p[idx] = orig - h
            down = loss()
            p[idx] = orig
            numeric = (up - down) / (2 * h)
            worst = max(worst, relative_error(float(grads[name][idx]), numeric))
        report.max_rel_error[name] = worst
        report.coords_checked[name] = len(flat_idx)
    return report
