"""Single-neuron regression head."""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

GRADE_RANGE = (0.0, 3.0)


def head_forward(s, weight, bias, relu: bool = False):
    if s.ndim != 2 or weight.shape != (s.shape[1],):
        raise ShapeMismatch(f"head input {s.shape} vs weight {weight.shape}")
    z = s @ weight + bias
    if relu:
        return np.maximum(z, 0.0), (s, z > 0)
    return z, (s, None)


def head_backward(dpred, cache, weight):
    """Returns ``(ds, dweight, dbias)``."""
    s, active = cache
    if active is not None:
        dpred = dpred * active
    return np.outer(dpred, weight), s.T @ dpred, np.asarray(dpred.sum(), dtype=s.dtype)


def clamp(pred, lo=GRADE_RANGE[0], hi=GRADE_RANGE[1]):
    """Inference-only clamp to the grade range."""
    return np.clip(pred, lo, hi)
