import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edithumor.errors import EmptyInput, NoLabeledPairs
from edithumor.metrics import (
    MetricsReport,
    compare_pair,
    compare_pairs,
    constant_baseline_rmse,
    rmse,
    rmse_at_k,
    task1_report,
    task2_metrics,
)

from oracles import rmse_at_k_loop, rmse_loop, task2_loop


def _pairs(rng, n):
    ga = np.round(rng.uniform(0, 3, n), 1)
    gb = np.round(rng.uniform(0, 3, n), 1)
    labels = np.where(ga > gb, 1, np.where(gb > ga, 2, 0))
    return labels, ga, gb


def test_rmse_trivial():
    assert rmse([1.0, 2.0], [1.0, 2.0]) == 0
    assert rmse([0.0, 3.0], [3.0, 0.0]) == 3.0


def test_rmse_empty():
    with pytest.raises(EmptyInput):
        rmse([], [])


def test_rmse_against_loop(rng):
    pred, truth = rng.uniform(0, 3, 100), rng.uniform(0, 3, 100)
    assert abs(rmse(pred, truth) - rmse_loop(pred, truth)) < 1e-12


def test_rmse_at_k_saturates_to_rmse(rng):
    pred, truth = rng.uniform(0, 3, 3), rng.uniform(0, 3, 3)
    # ceil(0.4 * 3) = 2 < 3, so use n small enough that ceil covers everything
    assert rmse_at_k(pred[:1], truth[:1], 10) == rmse(pred[:1], truth[:1])
    assert rmse_at_k(pred, truth, 100) == pytest.approx(rmse(pred, truth), abs=1e-15)


def test_rmse_at_k_top_item():
    truth = np.array([0.0, 1.0, 2.0, 3.0])
    assert rmse_at_k(truth, truth, 25) == 0.0
    pred = np.array([0.0, 1.0, 2.0, 2.0])
    assert rmse_at_k(pred, truth, 25) == 1.0


def test_rmse_at_k_stable_ties():
    truth = np.array([1.0, 2.0, 2.0, 0.0])
    pred = np.array([0.0, 0.0, 1.0, 0.0])
    # ceil(25% of 4) = 1 item: the first of the tied 2.0s (index 1)
    assert rmse_at_k(pred, truth, 25) == 2.0


def test_rmse_at_k_against_sort_and_slice(rng):
    pred, truth = rng.uniform(0, 3, 50), np.round(rng.uniform(0, 3, 50), 1)
    for basis in ("truth", "pred"):
        assert abs(rmse_at_k(pred, truth, 20, basis) - rmse_at_k_loop(pred, truth, 20, basis)) < 1e-12


def test_compare_pair():
    assert compare_pair(1.2, 0.4) == 1
    assert compare_pair(0.4, 1.2) == 2
    assert compare_pair(0.7, 0.7) == 1
    np.testing.assert_array_equal(compare_pairs([1.2, 0.4, 0.7], [0.4, 1.2, 0.7]), [1, 2, 1])


def test_task2_all_correct():
    labels = np.array([1, 2, 1])
    ga, gb = np.array([1.8, 0.2, 2.0]), np.array([1.0, 1.0, 1.2])
    out = task2_metrics(labels, labels, ga, gb)
    assert out["accuracy"] == 1.0
    assert out["reward"] == pytest.approx(0.8, abs=1e-12)


def test_task2_all_flipped():
    labels = np.array([1, 2, 1])
    ga, gb = np.array([1.8, 0.2, 2.5]), np.array([1.0, 1.0, 1.2])
    out = task2_metrics(labels, 3 - labels, ga, gb)
    assert out["accuracy"] == 0.0
    assert out["reward"] == pytest.approx(-np.mean(np.abs(ga - gb)), abs=1e-12)


def test_task2_ties_excluded():
    out = task2_metrics([0, 1, 0], [1, 1, 2], [1.0, 2.0, 0.5], [1.0, 1.0, 0.5])
    assert out == {"accuracy": 1.0, "reward": 1.0, "n_pairs": 1, "n_ties_excluded": 2}


def test_task2_no_labeled_pairs():
    with pytest.raises(NoLabeledPairs):
        task2_metrics([0, 0], [1, 2], [1.0, 1.0], [1.0, 1.0])


def test_task2_against_loop(rng):
    labels, ga, gb = _pairs(rng, 200)
    pa, pb = rng.uniform(0, 3, 200), rng.uniform(0, 3, 200)
    pa[:5] = pb[:5]  # exercise the tie rule
    out = task2_metrics(labels, compare_pairs(pa, pb), ga, gb)
    acc, reward = task2_loop(labels, pa, pb, ga, gb)
    assert abs(out["accuracy"] - acc) < 1e-12
    assert abs(out["reward"] - reward) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_reward_bounded_by_mean_delta(seed):
    rng = np.random.default_rng(seed)
    labels, ga, gb = _pairs(rng, 30)
    if not (labels != 0).any():
        return
    pa, pb = rng.uniform(0, 3, 30), rng.uniform(0, 3, 30)
    out = task2_metrics(labels, compare_pairs(pa, pb), ga, gb)
    keep = labels != 0
    mean_delta = float(np.mean(np.abs(ga - gb)[keep]))
    assert out["reward"] <= mean_delta + 1e-12
    assert math.isclose(out["reward"], mean_delta, abs_tol=1e-12) == (out["accuracy"] == 1.0)


@pytest.mark.parametrize("f", [lambda x: 2 * x + 1, lambda x: x**3], ids=["affine", "cube"])
def test_monotone_transform_invariance(rng, f):
    pa, pb = rng.uniform(-2, 3, 500), rng.uniform(-2, 3, 500)
    pb[:10] = pa[:10]
    np.testing.assert_array_equal(compare_pairs(f(pa), f(pb)), compare_pairs(pa, pb))


def test_task1_report_json_fields(rng):
    pred, truth = rng.uniform(-1, 4, 40), rng.uniform(0, 3, 40)
    report = task1_report(pred, truth)
    data = json.loads(report.to_json())
    assert set(data) == {"rmse", "rmse_at", "rmse_at_basis", "n_examples", "task2"}
    assert set(data["rmse_at"]) == {"10", "20", "30"}
    assert data["n_examples"] == 40
    assert data["rmse"] == pytest.approx(rmse_loop(np.clip(pred, 0, 3), truth), abs=1e-12)


def test_constant_baseline():
    assert constant_baseline_rmse([1.0, 2.0, 3.0], [2.0, 2.0]) == 0.0
    assert constant_baseline_rmse([0.0, 2.0], [0.0, 2.0]) == 1.0


def test_report_save(tmp_path):
    r = MetricsReport(task2={"accuracy": 0.5, "reward": 0.1, "n_pairs": 2, "n_ties_excluded": 0})
    r.save(tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text())["task2"]["accuracy"] == 0.5
