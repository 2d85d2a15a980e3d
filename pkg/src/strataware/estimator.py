"""Scikit-learn style wrappers around the trainers and the best response."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .cost import CostModel
from .data import Dataset
from .model import LinearModel, predict_sign
from .response import adapted_matrix
from .taxonomy import FeatureTaxonomy
from .training import TrainConfig, train


def _to_signed_labels(y, classes: np.ndarray) -> np.ndarray:
    """Map a two-class label vector onto {-1, +1} by class order."""
    return np.where(y == classes[1], 1, -1).astype(np.int64)


class StrategicClassifier(BaseEstimator, ClassifierMixin):
    """Linear classifier trained against strategic feature adaptation.

    Parameters mirror TrainConfig; ``improvement_weight`` is the reward
    weight on genuine improvement and ``direction_weight`` the directional
    penalty weight (both used by method="ca" only). The taxonomy and cost
    model are estimator parameters rather than fit arguments so the
    estimator clones cleanly inside pipelines and searches.

    Accepts labels {-1, +1} or {0, 1}; predictions use the original labels.
    """

    def __init__(
        self,
        method: str = "ca",
        improvement_weight: float = 1.0,
        direction_weight: float = 0.0,
        l2_reg: float = 1e-3,
        max_iters: int = 500,
        grad_tol: float = 1e-6,
        restarts: int = 3,
        seed: int = 0,
        taxonomy: FeatureTaxonomy | None = None,
        cost_model: CostModel | None = None,
    ):
        self.method = method
        self.improvement_weight = improvement_weight
        self.direction_weight = direction_weight
        self.l2_reg = l2_reg
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.restarts = restarts
        self.seed = seed
        self.taxonomy = taxonomy
        self.cost_model = cost_model

    def _config(self) -> TrainConfig:
        return TrainConfig(
            method=self.method,
            lambda_=self.improvement_weight,
            eta=self.direction_weight,
            l2_reg=self.l2_reg,
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            restarts=self.restarts,
            seed=self.seed,
        )

    def fit(self, X, y):
        if self.taxonomy is None or self.cost_model is None:
            raise ValueError(
                "StrategicClassifier needs taxonomy= and cost_model= to fit"
            )
        X, y = check_X_y(X, y)
        classes = np.unique(y)
        if classes.size != 2:
            raise ValueError(f"need exactly two classes, got {classes.tolist()}")
        allowed = ({-1, 1}, {0, 1})
        if set(classes.tolist()) not in allowed:
            raise ValueError(
                f"labels must be {{-1, +1}} or {{0, 1}}, got {classes.tolist()}"
            )
        signed = _to_signed_labels(y, classes)
        data = Dataset(X=X, y=signed, taxonomy=self.taxonomy)
        result = train(data, self.cost_model, self._config())
        self.classes_ = classes
        self.linear_model_ = result.model
        self.intercept_ = np.array([result.model.intercept])
        self.coef_ = result.model.weights.reshape(1, -1)
        self.converged_ = result.converged
        self.n_iter_ = result.n_iter
        self.train_loss_ = result.loss
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "linear_model_")
        X = check_array(X)
        return np.atleast_1d(self.linear_model_.score(X))

    def predict(self, X) -> np.ndarray:
        signed = predict_sign(self.decision_function(X))
        return np.where(signed == 1, self.classes_[1], self.classes_[0])


class BestResponseTransformer(BaseEstimator, TransformerMixin):
    """Replaces each row with its best response to a published model.

    ``model`` may be a LinearModel or a fitted StrategicClassifier; with a
    classifier, the taxonomy and cost model default to the classifier's
    own. ``family`` picks which features may move ("I", "M", or "A").
    """

    def __init__(
        self,
        model=None,
        taxonomy: FeatureTaxonomy | None = None,
        cost_model: CostModel | None = None,
        family: str = "A",
    ):
        self.model = model
        self.taxonomy = taxonomy
        self.cost_model = cost_model
        self.family = family

    def _resolved(self) -> tuple[LinearModel, FeatureTaxonomy, CostModel]:
        model = self.model
        taxonomy = self.taxonomy
        cost_model = self.cost_model
        if isinstance(model, StrategicClassifier):
            check_is_fitted(model, "linear_model_")
            taxonomy = taxonomy if taxonomy is not None else model.taxonomy
            cost_model = cost_model if cost_model is not None else model.cost_model
            model = model.linear_model_
        if not isinstance(model, LinearModel):
            raise ValueError(
                "model must be a LinearModel or a fitted StrategicClassifier"
            )
        if taxonomy is None or cost_model is None:
            raise ValueError("taxonomy and cost_model are required")
        return model, taxonomy, cost_model

    def fit(self, X=None, y=None):
        self._resolved()
        return self

    def transform(self, X) -> np.ndarray:
        linear, taxonomy, cost_model = self._resolved()
        X = check_array(X)
        return adapted_matrix(X, linear, cost_model, taxonomy, self.family)
