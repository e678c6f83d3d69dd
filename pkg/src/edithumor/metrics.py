"""Task-1 regression metrics and Task-2 pairwise scoring."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import EmptyInput, NoLabeledPairs, ShapeMismatch

RMSE_AT_K = (10, 20, 30)


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ShapeMismatch(f"pred {pred.shape} vs truth {truth.shape}")
    if pred.size == 0:
        raise EmptyInput("no examples to score")
    return pred, truth


def rmse(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def top_k_indices(values, k_percent: float) -> np.ndarray:
    """Indices of the ``ceil(k% * n)`` largest values; ties keep input order."""
    values = np.asarray(values, dtype=np.float64)
    n_top = math.ceil(k_percent * values.size / 100)
    order = np.argsort(-values, kind="stable")
    return order[:n_top]


def rmse_at_k(pred, truth, k_percent: float, basis: str = "truth") -> float:
    """RMSE over the top ``k_percent`` of items ranked by ``basis``.

    ``basis="truth"`` ranks by gold funniness, ``basis="pred"`` by the
    system's own predictions.
    """
    pred, truth = _pair(pred, truth)
    if not 0 < k_percent <= 100:
        raise ValueError(f"k_percent must lie in (0, 100], got {k_percent}")
    if basis == "truth":
        idx = top_k_indices(truth, k_percent)
    elif basis == "pred":
        idx = top_k_indices(pred, k_percent)
    else:
        raise ValueError(f"unknown ranking basis {basis!r}")
    return rmse(pred[idx], truth[idx])


def compare_pair(pred_a: float, pred_b: float) -> int:
    """1 if headline a is predicted funnier, else 2. Exact ties go to 1."""
    return 2 if pred_b > pred_a else 1


def compare_pairs(pred_a, pred_b) -> np.ndarray:
    pred_a = np.asarray(pred_a)
    pred_b = np.asarray(pred_b)
    return np.where(pred_b > pred_a, 2, 1)


def task2_metrics(labels, pred_labels, grades_a, grades_b) -> dict:
    """Accuracy and reward over pairs whose gold label is 1 or 2.

    Reward credits ``+|grade_a - grade_b|`` for a correct pick and the
    negative of it otherwise; tie pairs (label 0) are left out of both.
    """
    labels = np.asarray(labels)
    pred_labels = np.asarray(pred_labels)
    delta = np.abs(np.asarray(grades_a, dtype=np.float64) - np.asarray(grades_b, dtype=np.float64))
    if not (labels.shape == pred_labels.shape == delta.shape):
        raise ShapeMismatch("labels, predictions and grades must align")
    keep = labels != 0
    if not keep.any():
        raise NoLabeledPairs("no pairs with label 1 or 2")
    correct = pred_labels[keep] == labels[keep]
    signed = np.where(correct, delta[keep], -delta[keep])
    return {
        "accuracy": float(np.mean(correct)),
        "reward": float(np.mean(signed)),
        "n_pairs": int(keep.sum()),
        "n_ties_excluded": int((~keep).sum()),
    }


@dataclass
class MetricsReport:
    rmse: float | None = None
    rmse_at: dict[str, float] = field(default_factory=dict)
    rmse_at_basis: str | None = None
    n_examples: int = 0
    task2: dict | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_json() + "\n")


def task1_report(pred, truth, basis: str = "truth", clamp_range=(0.0, 3.0)) -> MetricsReport:
    pred, truth = _pair(pred, truth)
    if clamp_range is not None:
        pred = np.clip(pred, *clamp_range)
    return MetricsReport(
        rmse=rmse(pred, truth),
        rmse_at={str(k): rmse_at_k(pred, truth, k, basis) for k in RMSE_AT_K},
        rmse_at_basis=basis,
        n_examples=int(pred.size),
    )


def task2_report(labels, pred_labels, grades_a, grades_b) -> MetricsReport:
    stats = task2_metrics(labels, pred_labels, grades_a, grades_b)
    return MetricsReport(task2=stats, n_examples=len(labels))


def constant_baseline_rmse(train_targets, eval_targets) -> float:
    """RMSE of predicting the training-set mean grade for every item."""
    mean = float(np.mean(np.asarray(train_targets, dtype=np.float64)))
    truth = np.asarray(eval_targets, dtype=np.float64)
    return rmse(np.full_like(truth, mean), truth)
