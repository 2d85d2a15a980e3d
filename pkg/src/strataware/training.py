"""Trainers: one entry point over four methods.

- static: regularized logistic regression, blind to adaptation.
- drop_features: static, but manipulable columns are removed before the
  fit and their weights pinned to exactly zero afterwards.
- manipulation_proof: robust margins against the full actionable budget.
- ca: constructive adaptation; robust to manipulation while rewarding
  subjects who can reach acceptance through genuine improvement.

Every method minimizes its objective with multi-restart BFGS. Restart
initializations are drawn from one seeded generator, so a (data, config)
pair always reproduces the same weights bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .cost import CostModel
from .data import Dataset
from .exceptions import SingleClassData
from .model import LinearModel
from .objectives import (
    ca_objective_arrays,
    manipulation_proof_objective_arrays,
    static_objective_arrays,
)
from .optimize import MinimizeResult, minimize_bfgs

METHOD_STATIC = "static"
METHOD_DROP_FEATURES = "drop_features"
METHOD_MANIPULATION_PROOF = "manipulation_proof"
METHOD_CA = "ca"
METHODS = (METHOD_STATIC, METHOD_DROP_FEATURES, METHOD_MANIPULATION_PROOF, METHOD_CA)

_METHOD_ALIASES = {
    "static": METHOD_STATIC,
    "drop": METHOD_DROP_FEATURES,
    "drop_features": METHOD_DROP_FEATURES,
    "dropfeatures": METHOD_DROP_FEATURES,
    "manipulation_proof": METHOD_MANIPULATION_PROOF,
    "manipulationproof": METHOD_MANIPULATION_PROOF,
    "mp": METHOD_MANIPULATION_PROOF,
    "ca": METHOD_CA,
    "constructive_adaptation": METHOD_CA,
}


def normalize_method(name: str) -> str:
    try:
        return _METHOD_ALIASES[str(name).strip().lower()]
    except KeyError:
        raise ValueError(
            f"unknown training method {name!r}; expected one of {', '.join(METHODS)}"
        ) from None


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by all trainers.

    lambda_ weights the improvement reward and eta the directional
    penalty; both only affect the ca method. JSON uses the key "lambda"
    for lambda_ (the bare name is reserved in Python).
    """

    method: str = METHOD_CA
    lambda_: float = 1.0
    eta: float = 0.0
    l2_reg: float = 1e-3
    max_iters: int = 500
    grad_tol: float = 1e-6
    restarts: int = 3
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", normalize_method(self.method))
        for name in ("lambda_", "eta", "l2_reg"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be at least 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")

    def to_obj(self) -> dict:
        return {
            "method": self.method,
            "lambda": self.lambda_,
            "eta": self.eta,
            "l2_reg": self.l2_reg,
            "max_iters": self.max_iters,
            "grad_tol": self.grad_tol,
            "restarts": self.restarts,
            "seed": self.seed,
        }

    @classmethod
    def from_obj(cls, obj: Mapping) -> "TrainConfig":
        kwargs = dict(obj)
        if "lambda" in kwargs:
            kwargs["lambda_"] = kwargs.pop("lambda")
        known = {
            "method",
            "lambda_",
            "eta",
            "l2_reg",
            "max_iters",
            "grad_tol",
            "restarts",
            "seed",
        }
        unknown = set(kwargs) - known
        if unknown:
            raise ValueError(f"unknown training config key(s): {sorted(unknown)}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "TrainConfig":
        return cls.from_obj(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_obj(), indent=2) + "\n")


@dataclass(frozen=True)
class FitResult:
    """A trained model plus optimizer diagnostics.

    converged=False is a warning, not an error: the weights are still the
    best point any restart reached.
    """

    model: LinearModel
    method: str
    converged: bool
    loss: float
    grad_inf_norm: float
    n_iter: int
    restart_losses: tuple[float, ...]


def train(data: Dataset, cost_model: CostModel, config: TrainConfig) -> FitResult:
    """Fit one model per the config on the dataset's taxonomy."""
    cost_model.check_taxonomy(data.taxonomy)
    classes = np.unique(data.y)
    if classes.size < 2:
        raise SingleClassData(
            f"training data contains only label {int(classes[0])}; need both classes"
        )

    tax = data.taxonomy
    if config.method == METHOD_DROP_FEATURES:
        keep = np.flatnonzero(
            ~np.isin(np.arange(tax.d), tax.manipulable_indices)
        )
        X = data.X[:, keep]
    else:
        keep = None
        X = data.X
    y = data.y

    def fun_grad(wvec):
        if config.method == METHOD_CA:
            val = ca_objective_arrays(
                wvec, X, y, cost_model, tax, config.lambda_, config.eta, config.l2_reg
            )
        elif config.method == METHOD_MANIPULATION_PROOF:
            val = manipulation_proof_objective_arrays(
                wvec, X, y, cost_model, tax, config.l2_reg
            )
        else:
            val = static_objective_arrays(wvec, X, y, config.l2_reg)
        return val.loss, val.gradient

    dim = X.shape[1] + 1
    rng = np.random.default_rng(config.seed)
    best: MinimizeResult | None = None
    restart_losses = []
    for _ in range(config.restarts):
        x0 = rng.normal(0.0, 0.01, size=dim)
        res = minimize_bfgs(
            fun_grad,
            x0,
            grad_tol=config.grad_tol,
            max_iters=config.max_iters,
        )
        restart_losses.append(res.fun)
        if best is None or res.fun < best.fun:
            best = res

    weights = best.x[1:]
    if keep is not None:
        full = np.zeros(tax.d)
        full[keep] = weights
        weights = full
    return FitResult(
        model=LinearModel(intercept=float(best.x[0]), weights=weights),
        method=config.method,
        converged=best.converged,
        loss=best.fun,
        grad_inf_norm=float(np.max(np.abs(best.grad))),
        n_iter=best.n_iter,
        restart_losses=tuple(restart_losses),
    )
