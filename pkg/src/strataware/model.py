"""Linear scoring models and their JSON serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .exceptions import DimensionMismatch
from .taxonomy import FeatureTaxonomy


@dataclass(frozen=True)
class LinearModel:
    """Affine scorer s(x) = intercept + weights . x with decision sign(s).

    A score of exactly zero counts as accept: sign(0) = +1 throughout the
    package. Decisions are invariant under positive rescaling of
    (intercept, weights).
    """

    intercept: float
    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64).copy()
        if w.ndim != 1:
            raise DimensionMismatch(f"weights must be a vector, got shape {w.shape}")
        w0 = float(self.intercept)
        if not (np.isfinite(w0) and np.all(np.isfinite(w))):
            raise ValueError("model coefficients must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "intercept", w0)
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def check_taxonomy(self, taxonomy: FeatureTaxonomy) -> None:
        if self.d != taxonomy.d:
            raise DimensionMismatch(
                f"model has {self.d} weights but taxonomy has {taxonomy.d} features"
            )

    def score(self, X) -> np.ndarray | float:
        """Score one vector (returns float) or a matrix of rows (returns array)."""
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 1:
            if arr.shape[0] != self.d:
                raise DimensionMismatch(
                    f"expected {self.d} features, got {arr.shape[0]}"
                )
            return float(self.intercept + arr @ self.weights)
        if arr.ndim == 2:
            if arr.shape[1] != self.d:
                raise DimensionMismatch(
                    f"expected {self.d} feature columns, got {arr.shape[1]}"
                )
            return self.intercept + arr @ self.weights
        raise DimensionMismatch(f"expected a vector or matrix, got ndim={arr.ndim}")

    def predict(self, X) -> np.ndarray | int:
        s = self.score(X)
        if np.ndim(s) == 0:
            return 1 if s >= 0 else -1
        return predict_sign(s)


def predict_sign(scores: np.ndarray) -> np.ndarray:
    """Vectorized decision rule with sign(0) = +1."""
    return np.where(np.asarray(scores) >= 0, 1, -1).astype(np.int64)


# -- serialization ---------------------------------------------------------


def model_to_obj(
    model: LinearModel,
    taxonomy: FeatureTaxonomy,
    method: str = "",
    config: Mapping | None = None,
    converged: bool | None = None,
) -> dict:
    model.check_taxonomy(taxonomy)
    obj = {
        "intercept": model.intercept,
        "weights": model.weights.tolist(),
        "taxonomy_hash": taxonomy.digest(),
        "method": method,
        "config": dict(config) if config is not None else {},
    }
    if converged is not None:
        obj["converged"] = bool(converged)
    return obj


def model_from_obj(obj: Mapping) -> tuple[LinearModel, dict]:
    """Parse a model JSON object; returns (model, metadata).

    Metadata keeps taxonomy_hash, method, config, and converged so callers
    can verify the model matches the taxonomy they loaded.
    """
    try:
        model = LinearModel(float(obj["intercept"]), np.asarray(obj["weights"], dtype=float))
    except (KeyError, TypeError):
        raise ValueError("model JSON needs 'intercept' and 'weights'") from None
    meta = {
        "taxonomy_hash": obj.get("taxonomy_hash", ""),
        "method": obj.get("method", ""),
        "config": obj.get("config", {}),
        "converged": obj.get("converged"),
    }
    return model, meta


def save_model(
    model: LinearModel,
    taxonomy: FeatureTaxonomy,
    path: str | Path,
    method: str = "",
    config: Mapping | None = None,
    converged: bool | None = None,
) -> None:
    obj = model_to_obj(model, taxonomy, method=method, config=config, converged=converged)
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


def load_model(path: str | Path) -> tuple[LinearModel, dict]:
    return model_from_obj(json.loads(Path(path).read_text()))
