"""Evaluation and audit metrics for deployed linear models.

Three headline metrics, all computed with the closed-form best response:

- test_error: plain misclassification rate, nobody adapts.
- deployment_error: misclassification rate after every subject plays
  their best response with the manipulable features (the family is a
  knob; "M" models gaming at deployment, "A" is a diagnostic).
- improvement_rate: share of truly negative subjects who could reach
  acceptance using improvable features only. Conditioning on the true
  label is the default; conditioning on the model's own rejections is
  available as a flag.

true_improvement additionally consults the dataset's ground-truth oracle:
the mean change in the positive-label probability that rejected subjects
would realize by playing their improvable best response.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .cost import CostModel
from .data import Dataset, FoldPlan
from .model import LinearModel, predict_sign
from .response import adapted_matrix, response_scores
from .training import TrainConfig, train

IMPROVEMENT_BY_LABEL = "label"
IMPROVEMENT_BY_PREDICTION = "prediction"

METRIC_NAMES = ("test_error", "deployment_error", "improvement_rate")


@dataclass(frozen=True)
class EvalReport:
    test_error: float
    deployment_error: float
    improvement_rate: float | None  # None when no row matches the conditioning
    n_eval: int
    deployment_family: str = "M"
    method: str = ""
    lambda_: float | None = None
    fold: int | None = None

    def to_obj(self) -> dict:
        return {
            "test_error": self.test_error,
            "deployment_error": self.deployment_error,
            "improvement_rate": self.improvement_rate,
            "n_eval": self.n_eval,
            "deployment_family": self.deployment_family,
            "method": self.method,
            "lambda": self.lambda_,
            "fold": self.fold,
        }


def evaluate(
    linear: LinearModel,
    data: Dataset,
    cost_model: CostModel,
    deployment_family: str = "M",
    improvement_condition: str = IMPROVEMENT_BY_LABEL,
    method: str = "",
    lambda_: float | None = None,
    fold: int | None = None,
) -> EvalReport:
    if improvement_condition not in (IMPROVEMENT_BY_LABEL, IMPROVEMENT_BY_PREDICTION):
        raise ValueError(
            f"improvement_condition must be '{IMPROVEMENT_BY_LABEL}' or "
            f"'{IMPROVEMENT_BY_PREDICTION}', got {improvement_condition!r}"
        )
    scores = np.atleast_1d(linear.score(data.X))
    predictions = predict_sign(scores)
    test_error = float(np.mean(predictions != data.y))

    deployed = predict_sign(
        response_scores(data.X, linear, cost_model, data.taxonomy, deployment_family)
    )
    deployment_error = float(np.mean(deployed != data.y))

    if improvement_condition == IMPROVEMENT_BY_LABEL:
        mask = data.y == -1
    else:
        mask = predictions == -1
    if not np.any(mask):
        improvement_rate = None
    else:
        improved = predict_sign(
            response_scores(data.X, linear, cost_model, data.taxonomy, "I")
        )
        improvement_rate = float(np.mean(improved[mask] == 1))

    return EvalReport(
        test_error=test_error,
        deployment_error=deployment_error,
        improvement_rate=improvement_rate,
        n_eval=data.n,
        deployment_family=deployment_family,
        method=method,
        lambda_=lambda_,
        fold=fold,
    )


def true_improvement(linear: LinearModel, data: Dataset, cost_model: CostModel) -> float:
    """Oracle-measured gain of the improvable response among rejected rows.

    Returns 0.0 when the model rejects nobody (there is no one to improve).
    Raises NoOracle if the dataset has no ground-truth oracle.
    """
    scores = np.atleast_1d(linear.score(data.X))
    rejected = np.flatnonzero(predict_sign(scores) == -1)
    if rejected.size == 0:
        # force the NoOracle error even in the trivial case
        data.oracle_values(data.X[:0])
        return 0.0
    before = data.oracle_values(data.X[rejected])
    adapted = adapted_matrix(data.X[rejected], linear, cost_model, data.taxonomy, "I")
    after = data.oracle_values(adapted)
    return float(np.mean(after - before))


# -- cross-validated training ------------------------------------------------


@dataclass(frozen=True)
class CVSummary:
    """Per-fold reports plus their mean and sample standard deviation.

    improvement_rate aggregates over the folds where it is defined; if no
    fold defines it, the key is absent from means/stds.
    """

    method: str
    lambda_: float
    fold_reports: tuple[EvalReport, ...]
    means: dict
    stds: dict

    def to_obj(self) -> dict:
        return {
            "method": self.method,
            "lambda": self.lambda_,
            "means": dict(self.means),
            "stds": dict(self.stds),
            "folds": [r.to_obj() for r in self.fold_reports],
        }


def _aggregate(reports: Sequence[EvalReport]) -> tuple[dict, dict]:
    means: dict = {}
    stds: dict = {}
    for name in METRIC_NAMES:
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if not values:
            continue
        arr = np.asarray(values, dtype=np.float64)
        means[name] = float(arr.mean())
        stds[name] = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return means, stds


def cross_validate(
    data: Dataset,
    cost_model: CostModel,
    config: TrainConfig,
    folds: FoldPlan,
    deployment_family: str = "M",
    improvement_condition: str = IMPROVEMENT_BY_LABEL,
) -> CVSummary:
    """Train on k-1 folds, evaluate on the held-out fold, k times."""
    if folds.n != data.n:
        raise ValueError(f"fold plan covers {folds.n} rows but dataset has {data.n}")
    reports = []
    for fold in range(folds.k):
        try:
            fit = train(data.subset(folds.training_indices(fold)), cost_model, config)
            report = evaluate(
                fit.model,
                data.subset(folds.holdout_indices(fold)),
                cost_model,
                deployment_family=deployment_family,
                improvement_condition=improvement_condition,
                method=config.method,
                lambda_=config.lambda_,
                fold=fold,
            )
        except Exception as err:
            raise type(err)(f"fold {fold}: {err}") from err
        reports.append(report)
    means, stds = _aggregate(reports)
    return CVSummary(
        method=config.method,
        lambda_=config.lambda_,
        fold_reports=tuple(reports),
        means=means,
        stds=stds,
    )


def evaluate_folds(
    linear: LinearModel,
    data: Dataset,
    cost_model: CostModel,
    folds: FoldPlan,
    deployment_family: str = "M",
    improvement_condition: str = IMPROVEMENT_BY_LABEL,
    method: str = "",
    lambda_: float | None = None,
) -> CVSummary:
    """Evaluate one fixed model fold by fold (no training), for mean/std
    error bars on its metrics."""
    if folds.n != data.n:
        raise ValueError(f"fold plan covers {folds.n} rows but dataset has {data.n}")
    reports = tuple(
        evaluate(
            linear,
            data.subset(folds.holdout_indices(fold)),
            cost_model,
            deployment_family=deployment_family,
            improvement_condition=improvement_condition,
            method=method,
            lambda_=lambda_,
            fold=fold,
        )
        for fold in range(folds.k)
    )
    means, stds = _aggregate(reports)
    return CVSummary(
        method=method,
        lambda_=lambda_ if lambda_ is not None else float("nan"),
        fold_reports=reports,
        means=means,
        stds=stds,
    )


# -- hyperparameter sweeps -----------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    lambda_grid: tuple[float, ...]
    summaries: tuple[CVSummary, ...]

    def to_obj(self) -> dict:
        return {
            "lambda_grid": list(self.lambda_grid),
            "summaries": [s.to_obj() for s in self.summaries],
        }


def lambda_sweep(
    data: Dataset,
    cost_model: CostModel,
    base_config: TrainConfig,
    lambda_grid: Sequence[float],
    folds: FoldPlan,
    deployment_family: str = "M",
    improvement_condition: str = IMPROVEMENT_BY_LABEL,
) -> SweepResult:
    """Cross-validate the base config at each lambda of an ascending grid."""
    grid = [float(v) for v in lambda_grid]
    if not grid:
        raise ValueError("lambda grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError(f"lambda grid must be strictly ascending, got {grid}")
    summaries = tuple(
        cross_validate(
            data,
            cost_model,
            replace(base_config, lambda_=lam),
            folds,
            deployment_family=deployment_family,
            improvement_condition=improvement_condition,
        )
        for lam in grid
    )
    return SweepResult(lambda_grid=tuple(grid), summaries=summaries)


# -- tabular / file output -----------------------------------------------------

CSV_COLUMNS = ("method", "lambda", "fold", "test_error", "deployment_error", "improvement_rate")


def metrics_csv(summaries: Sequence[CVSummary]) -> str:
    """Fold-level metrics of one or more CV summaries as CSV text.

    Each summary contributes one row per fold plus a "mean" row; an
    undefined improvement rate is left blank.
    """

    def cell(value) -> str:
        if value is None:
            return ""
        v = float(value)
        return "" if np.isnan(v) else repr(v)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for summary in summaries:
        for report in summary.fold_reports:
            writer.writerow(
                [
                    summary.method,
                    cell(summary.lambda_),
                    report.fold,
                    cell(report.test_error),
                    cell(report.deployment_error),
                    cell(report.improvement_rate),
                ]
            )
        writer.writerow(
            [
                summary.method,
                cell(summary.lambda_),
                "mean",
                cell(summary.means.get("test_error")),
                cell(summary.means.get("deployment_error")),
                cell(summary.means.get("improvement_rate")),
            ]
        )
    return buf.getvalue()


def save_metrics_csv(summaries: Sequence[CVSummary], path: str | Path) -> None:
    Path(path).write_text(metrics_csv(summaries))


def save_report_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
