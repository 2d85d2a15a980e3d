"""Datasets: container type, synthetic generator, CSV ingestion, folds."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np
from scipy.special import expit

from .exceptions import (
    DimensionMismatch,
    MissingColumn,
    NonNumericCell,
    NoOracle,
    TooFewRows,
    UnknownLabelValue,
)
from .taxonomy import FeatureKind, FeatureTaxonomy, make_taxonomy


@dataclass(frozen=True)
class Dataset:
    """Feature matrix, labels in {-1, +1}, and the governing taxonomy.

    ``oracle`` optionally maps one feature vector to the ground-truth
    probability of the positive label; synthetic data carries it, CSV data
    normally does not.
    """

    X: np.ndarray
    y: np.ndarray
    taxonomy: FeatureTaxonomy
    oracle: Callable[[np.ndarray], float] | None = None
    name: str = ""

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64).copy()
        y = np.asarray(self.y).copy()
        if X.ndim != 2:
            raise DimensionMismatch(f"X must be 2-D, got shape {X.shape}")
        if X.shape[1] != self.taxonomy.d:
            raise DimensionMismatch(
                f"X has {X.shape[1]} columns but taxonomy has {self.taxonomy.d} features"
            )
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionMismatch(
                f"y has shape {y.shape}, expected ({X.shape[0]},)"
            )
        if y.size and not np.all(np.isin(y, (-1, 1))):
            bad = sorted(set(np.unique(y)) - {-1, 1})
            raise ValueError(f"labels must be -1 or +1; found {bad}")
        y = y.astype(np.int64)
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return replace(self, X=self.X[idx], y=self.y[idx])

    def oracle_values(self, X=None) -> np.ndarray:
        """Ground-truth positive probability per row; raises NoOracle."""
        if self.oracle is None:
            raise NoOracle(f"dataset {self.name or '<unnamed>'} has no ground-truth oracle")
        rows = self.X if X is None else np.asarray(X, dtype=np.float64)
        return np.array([self.oracle(row) for row in rows], dtype=np.float64)


# -- synthetic generator -----------------------------------------------------


TOY_FEATURE_NAMES = ("X1", "X2", "M1", "M2")


@dataclass(frozen=True)
class ToyParams:
    """Generator knobs for the four-feature synthetic task.

    Two improvable causes X1, X2 drive the label; two manipulable gauges
    M1, M2 merely reflect it (M1 through the label, M2 through X2 and the
    label), so moving a gauge never changes the true label odds.
    """

    n: int = 5000
    noise_x2: float = 0.5
    label_weights: tuple[float, float] = (1.5, 1.5)
    label_noise: float = 1.0
    m1_coupling: float = 1.0
    m2_coupling_x2: float = 0.5
    m2_coupling_y: float = 0.5
    m_noise: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "label_weights", tuple(float(v) for v in self.label_weights))
        if self.n < 10:
            raise ValueError("toy datasets need at least 10 rows")
        if len(self.label_weights) != 2:
            raise ValueError("label_weights must have exactly two entries")
        for name in ("noise_x2", "label_noise", "m_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def to_obj(self) -> dict:
        return {
            "n": self.n,
            "noise_x2": self.noise_x2,
            "label_weights": list(self.label_weights),
            "label_noise": self.label_noise,
            "m1_coupling": self.m1_coupling,
            "m2_coupling_x2": self.m2_coupling_x2,
            "m2_coupling_y": self.m2_coupling_y,
            "m_noise": self.m_noise,
            "seed": self.seed,
        }

    @classmethod
    def from_obj(cls, obj: Mapping) -> "ToyParams":
        known = {
            "n",
            "noise_x2",
            "label_weights",
            "label_noise",
            "m1_coupling",
            "m2_coupling_x2",
            "m2_coupling_y",
            "m_noise",
            "seed",
        }
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown toy parameter(s): {sorted(unknown)}")
        kwargs = dict(obj)
        if "label_weights" in kwargs:
            kwargs["label_weights"] = tuple(kwargs["label_weights"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "ToyParams":
        return cls.from_obj(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_obj(), indent=2) + "\n")


def toy_taxonomy() -> FeatureTaxonomy:
    return make_taxonomy(
        TOY_FEATURE_NAMES,
        (
            FeatureKind.IMPROVABLE,
            FeatureKind.IMPROVABLE,
            FeatureKind.MANIPULABLE,
            FeatureKind.MANIPULABLE,
        ),
    )


def _toy_oracle(b1: float, b2: float, label_noise: float) -> Callable[[np.ndarray], float]:
    def oracle(x: np.ndarray) -> float:
        logit = b1 * x[0] + b2 * x[1]
        if label_noise == 0.0:
            return 1.0 if logit >= 0 else 0.0
        return float(expit(logit / label_noise))

    return oracle


def generate_toy(params: ToyParams | None = None) -> Dataset:
    """Sample the synthetic task.

    Draw order is fixed (z1, z2, x2 noise, label uniforms, m1 noise,
    m2 noise) so identical params give bit-identical datasets. At
    label_noise = 0 the label is the hard sign of the logit; the uniforms
    are drawn regardless so the switch does not shift later draws.
    """
    p = params if params is not None else ToyParams()
    rng = np.random.default_rng(p.seed)
    b1, b2 = p.label_weights
    z1 = rng.standard_normal(p.n)
    z2 = rng.standard_normal(p.n)
    x1 = z1
    x2 = z2 + p.noise_x2 * rng.standard_normal(p.n)
    u = rng.uniform(size=p.n)
    logit = b1 * x1 + b2 * x2
    if p.label_noise == 0.0:
        y = np.where(logit >= 0, 1, -1)
    else:
        y = np.where(u < expit(logit / p.label_noise), 1, -1)
    m1 = p.m1_coupling * y + p.m_noise * rng.standard_normal(p.n)
    m2 = (
        p.m2_coupling_x2 * x2
        + p.m2_coupling_y * y
        + p.m_noise * rng.standard_normal(p.n)
    )
    X = np.column_stack([x1, x2, m1, m2])
    return Dataset(
        X=X,
        y=y,
        taxonomy=toy_taxonomy(),
        oracle=_toy_oracle(b1, b2, p.label_noise),
        name="toy",
    )


# -- taxonomy misspecification ----------------------------------------------


def misspecify(data: Dataset, swaps: Iterable[tuple[str, str | FeatureKind]]) -> Dataset:
    """Same rows, same oracle, but features reassigned to other kinds.

    Models the auditor holding a wrong causal map of the world: the data
    generating process does not change, only the taxonomy the training and
    evaluation pipeline believes in.
    """
    return replace(data, taxonomy=data.taxonomy.with_kinds(dict(swaps)))


# -- CSV ingestion ------------------------------------------------------------


def load_csv(
    path: str | Path,
    taxonomy: FeatureTaxonomy,
    label_column: str = "label",
    positive_label: str = "1",
) -> Dataset:
    """Read an RFC-4180 CSV with a header row into a Dataset.

    Every taxonomy feature and the label column must appear in the header;
    extra columns are ignored. Label cells must literally match
    positive_label or the single remaining value, which is mapped to -1.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise TooFewRows(f"{path} is empty") from None
        col_of = {name: i for i, name in enumerate(header)}
        missing = [n for n in (*taxonomy.names, label_column) if n not in col_of]
        if missing:
            raise MissingColumn(f"{path} lacks column(s): {missing}")
        feat_cols = [col_of[n] for n in taxonomy.names]
        label_col = col_of[label_column]
        rows: list[list[float]] = []
        labels_raw: list[str] = []
        for row_num, row in enumerate(reader, start=1):
            if not row:
                continue
            values = []
            for name, col in zip(taxonomy.names, feat_cols):
                try:
                    values.append(float(row[col]))
                except (ValueError, IndexError):
                    cell = row[col] if col < len(row) else "<missing>"
                    raise NonNumericCell(
                        f"{path} row {row_num}, column {name!r}: "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            rows.append(values)
            labels_raw.append(row[label_col] if label_col < len(row) else "")
    if not rows:
        raise TooFewRows(f"{path} has a header but no data rows")
    distinct = sorted(set(labels_raw))
    if positive_label not in distinct:
        raise UnknownLabelValue(
            f"{path}: positive label {positive_label!r} never occurs; "
            f"label values found: {distinct}"
        )
    if len(distinct) > 2:
        raise UnknownLabelValue(
            f"{path}: expected at most two label values, found {distinct}"
        )
    y = np.array([1 if v == positive_label else -1 for v in labels_raw], dtype=np.int64)
    return Dataset(
        X=np.array(rows, dtype=np.float64),
        y=y,
        taxonomy=taxonomy,
        name=path.stem,
    )


def save_csv(data: Dataset, path: str | Path, label_column: str = "label") -> None:
    """Write the dataset as CSV; floats use repr so a round trip is exact."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([*data.taxonomy.names, label_column])
        for row, label in zip(data.X, data.y):
            writer.writerow([*(repr(float(v)) for v in row), int(label)])


# -- cross-validation folds ---------------------------------------------------


@dataclass(frozen=True)
class FoldPlan:
    """Deterministic assignment of each row to one of k folds."""

    k: int
    assignments: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        arr = np.asarray(self.assignments, dtype=np.int64).copy()
        if self.k < 2:
            raise ValueError("need at least 2 folds")
        if arr.ndim != 1:
            raise DimensionMismatch("fold assignments must be a vector")
        if arr.size and (arr.min() < 0 or arr.max() >= self.k):
            raise ValueError("fold assignments out of range")
        counts = np.bincount(arr, minlength=self.k)
        if np.any(counts == 0):
            empty = np.flatnonzero(counts == 0).tolist()
            raise TooFewRows(f"fold(s) {empty} would be empty")
        arr.flags.writeable = False
        object.__setattr__(self, "assignments", arr)

    @property
    def n(self) -> int:
        return self.assignments.shape[0]

    def holdout_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def training_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def make_folds(n: int, k: int, seed: int = 0) -> FoldPlan:
    """Shuffle rows with the seed and deal them into k near-equal folds;
    the first n mod k folds take one extra row."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise TooFewRows(f"cannot split {n} rows into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    base, extra = divmod(n, k)
    start = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        assignments[perm[start : start + size]] = fold
        start += size
    return FoldPlan(k=k, assignments=assignments, seed=seed)
