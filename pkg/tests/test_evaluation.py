"""Evaluation metrics, cross-validation, and the lambda sweep."""

import math

import numpy as np
import pytest
from scipy.special import expit

from strataware import (
    Dataset,
    LinearModel,
    TrainConfig,
    best_response,
    cross_validate,
    evaluate,
    evaluate_folds,
    identity_cost_model,
    lambda_sweep,
    make_folds,
    make_taxonomy,
    metrics_csv,
    save_metrics_csv,
    true_improvement,
)
from strataware.exceptions import NoOracle

TAX = make_taxonomy(["i", "m"], ["improvable", "manipulable"])
LM = LinearModel(intercept=0.0, weights=np.array([1.0, 1.0]))


def four_points(oracle=None):
    X = np.array([[2.0, 0.0], [-0.5, 0.0], [-1.0, 0.0], [-5.0, 0.0]])
    y = np.array([1, 1, -1, -1])
    return Dataset(X=X, y=y, taxonomy=TAX, oracle=oracle)


def test_evaluate_hand_computed():
    data = four_points()
    cm = identity_cost_model(TAX)
    rep = evaluate(LM, data, cm)
    # static predictions: +, -, -, - against labels +, +, -, -
    assert rep.test_error == pytest.approx(0.25)
    # gaming responses move the two mildly rejected rows to the boundary,
    # so the y = -1 row at score -1 slips through
    assert rep.deployment_error == pytest.approx(0.25)
    # among true negatives, only the score -1 row can improve its way in
    assert rep.improvement_rate == pytest.approx(0.5)
    assert rep.n_eval == 4
    assert rep.deployment_family == "M"


def test_evaluate_prediction_conditioned_improvement():
    data = four_points()
    cm = identity_cost_model(TAX)
    rep = evaluate(LM, data, cm, improvement_condition="prediction")
    # rejected rows are the three with negative scores; two can reach 0
    assert rep.improvement_rate == pytest.approx(2.0 / 3.0)


def test_evaluate_improvement_rate_none_without_negatives():
    tax = TAX
    data = Dataset(
        X=np.array([[1.0, 0.0], [2.0, 0.0]]), y=np.array([1, 1]), taxonomy=tax
    )
    rep = evaluate(LM, data, identity_cost_model(tax))
    assert rep.improvement_rate is None


def test_evaluate_report_obj_uses_external_key():
    data = four_points()
    rep = evaluate(LM, data, identity_cost_model(TAX), method="ca", lambda_=2.0, fold=1)
    obj = rep.to_obj()
    assert obj["lambda"] == 2.0
    assert "lambda_" not in obj
    assert obj["fold"] == 1 and obj["method"] == "ca"


def test_true_improvement_hand_computed():
    oracle = lambda x: float(expit(x[0]))
    data = four_points(oracle=oracle)
    cm = identity_cost_model(TAX)
    got = true_improvement(LM, data, cm)
    # statically rejected rows sit at scores -0.5, -1, -5; the first two
    # reach the boundary by moving the improvable coordinate to 0
    expected = np.mean(
        [
            expit(0.0) - expit(-0.5),
            expit(0.0) - expit(-1.0),
            0.0,
        ]
    )
    assert got == pytest.approx(expected, rel=1e-12)
    # agreement with per-row responses restricted to improvable moves
    deltas = []
    for x, s in zip(data.X, LM.score(data.X)):
        if s >= 0:
            continue
        r = best_response(x, LM, cm, TAX, "I")
        deltas.append(oracle(r.adapted) - oracle(x))
    assert got == pytest.approx(float(np.mean(deltas)), rel=1e-12)


def test_true_improvement_requires_oracle():
    with pytest.raises(NoOracle):
        true_improvement(LM, four_points(), identity_cost_model(TAX))


def test_true_improvement_no_rejected_rows():
    oracle = lambda x: 0.5
    data = Dataset(
        X=np.array([[3.0, 0.0], [4.0, 0.0]]),
        y=np.array([1, -1]),
        taxonomy=TAX,
        oracle=oracle,
    )
    assert true_improvement(LM, data, identity_cost_model(TAX)) == 0.0


# -- cross-validation -----------------------------------------------------------


def test_cross_validate_aggregates(toy_small, toy_default):
    cm = identity_cost_model(toy_small.taxonomy, 1.0, 0.2)
    folds = make_folds(len(toy_small.y), 3, seed=0)
    cfg = TrainConfig(method="static", max_iters=120)
    summary = cross_validate(toy_small, cm, cfg, folds)
    assert summary.method == "static"
    assert [r.fold for r in summary.fold_reports] == [0, 1, 2]
    errs = [r.test_error for r in summary.fold_reports]
    assert summary.means["test_error"] == pytest.approx(float(np.mean(errs)))
    assert summary.stds["test_error"] == pytest.approx(float(np.std(errs, ddof=1)))
    assert 0.0 <= summary.means["test_error"] < 0.5
    # each holdout row is used exactly once
    assert sum(r.n_eval for r in summary.fold_reports) == len(toy_small.y)


def test_cross_validate_deterministic(toy_small):
    cm = identity_cost_model(toy_small.taxonomy, 1.0, 0.2)
    folds = make_folds(len(toy_small.y), 3, seed=0)
    cfg = TrainConfig(method="ca", max_iters=120)
    a = cross_validate(toy_small, cm, cfg, folds)
    b = cross_validate(toy_small, cm, cfg, folds)
    assert a.means == b.means and a.stds == b.stds


def test_cross_validate_labels_fold_errors(toy_small):
    cm = identity_cost_model(toy_small.taxonomy, 1.0, 0.2)
    folds = make_folds(len(toy_small.y), 3, seed=0)
    bad = TrainConfig(method="ca", l2_reg=float("1e300"))
    with pytest.raises(Exception) as exc:
        cross_validate(toy_small, cm, bad, folds)
    assert "fold 0" in str(exc.value)


def test_evaluate_folds_fixed_model(toy_small):
    cm = identity_cost_model(toy_small.taxonomy, 1.0, 0.2)
    folds = make_folds(len(toy_small.y), 3, seed=0)
    lm = LinearModel(intercept=0.0, weights=np.array([1.0, 1.0, 0.0, 0.0]))
    summary = evaluate_folds(lm, toy_small, cm, folds, method="fixed")
    for i, rep in enumerate(summary.fold_reports):
        direct = evaluate(
            lm, toy_small.subset(folds.holdout_indices(i)), cm, method="fixed", fold=i
        )
        assert rep.test_error == direct.test_error
        assert rep.deployment_error == direct.deployment_error


def test_single_fold_std_is_zero():
    data = four_points()
    cm = identity_cost_model(TAX)
    folds = make_folds(4, 2, seed=0)
    summary = evaluate_folds(LM, data, cm, folds)
    # two folds give a real std; collapse to one report to check the 0 path
    from strataware.evaluation import _aggregate

    means, stds = _aggregate(summary.fold_reports[:1])
    assert stds["test_error"] == 0.0


# -- lambda sweep ----------------------------------------------------------------


def test_lambda_sweep_structure(toy_small):
    cm = identity_cost_model(toy_small.taxonomy, 1.0, 0.2)
    folds = make_folds(len(toy_small.y), 2, seed=0)
    cfg = TrainConfig(method="ca", max_iters=80)
    sweep = lambda_sweep(toy_small, cm, cfg, [0.1, 1.0], folds)
    assert sweep.lambda_grid == (0.1, 1.0)
    assert [s.lambda_ for s in sweep.summaries] == [0.1, 1.0]
    for s in sweep.summaries:
        assert s.method == "ca"
        assert len(s.fold_reports) == 2


def test_lambda_sweep_requires_ascending_grid(toy_small):
    cm = identity_cost_model(toy_small.taxonomy, 1.0, 0.2)
    folds = make_folds(len(toy_small.y), 2, seed=0)
    with pytest.raises(ValueError):
        lambda_sweep(toy_small, cm, TrainConfig(), [1.0, 0.1], folds)
    with pytest.raises(ValueError):
        lambda_sweep(toy_small, cm, TrainConfig(), [1.0, 1.0], folds)


# -- csv rendering ----------------------------------------------------------------


def test_metrics_csv_layout(toy_small, tmp_path):
    cm = identity_cost_model(toy_small.taxonomy, 1.0, 0.2)
    folds = make_folds(len(toy_small.y), 2, seed=0)
    summary = cross_validate(
        toy_small, cm, TrainConfig(method="static", max_iters=80), folds
    )
    text = metrics_csv([summary])
    lines = text.strip().split("\n")
    assert lines[0] == "method,lambda,fold,test_error,deployment_error,improvement_rate"
    # 2 fold rows + 1 mean row
    assert len(lines) == 4
    assert lines[1].startswith("static,")
    assert lines[3].split(",")[2] == "mean"
    p = tmp_path / "metrics.csv"
    save_metrics_csv([summary], p)
    assert p.read_text() == text


def test_metrics_csv_blank_for_missing_metric():
    data = Dataset(
        X=np.array([[1.0, 0.0], [2.0, 0.0], [1.5, 0.0], [2.5, 0.0]]),
        y=np.array([1, 1, 1, 1]),
        taxonomy=TAX,
    )
    cm = identity_cost_model(TAX)
    folds = make_folds(4, 2, seed=0)
    summary = evaluate_folds(LM, data, cm, folds)
    text = metrics_csv([summary])
    for line in text.strip().split("\n")[1:]:
        assert line.endswith(",")  # improvement_rate column is empty
