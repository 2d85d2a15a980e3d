"""strataware: linear classification under strategic feature adaptation.

Decision subjects game classifiers: given a published linear model they
move their features at Mahalanobis cost to flip a rejection. This package
distinguishes feature changes that carry real signal (improvable) from
pure gaming (manipulable), computes the subjects' closed-form best
responses, and trains models that are robust to gaming while leaving the
door open to genuine improvement.
"""

__version__ = "0.1.0"

from .cost import (
    CostModel,
    build_cost_model,
    cost,
    cost_model_from_obj,
    cost_model_to_obj,
    effective_variance,
    identity_cost_model,
    load_cost_model,
    save_cost_model,
)
from .data import (
    Dataset,
    FoldPlan,
    ToyParams,
    generate_toy,
    load_csv,
    make_folds,
    misspecify,
    save_csv,
    toy_taxonomy,
)
from .estimator import BestResponseTransformer, StrategicClassifier
from .evaluation import (
    CVSummary,
    EvalReport,
    SweepResult,
    cross_validate,
    evaluate,
    evaluate_folds,
    lambda_sweep,
    metrics_csv,
    save_metrics_csv,
    true_improvement,
)
from .exceptions import (
    DimensionMismatch,
    ImmutableViolation,
    MissingColumn,
    NonFiniteLoss,
    NonNumericCell,
    NoOracle,
    NotPositiveDefinite,
    NotSymmetric,
    NoValidPerturbation,
    OrderingViolation,
    SingleClassData,
    StratawareError,
    TooFewRows,
    UnknownFeature,
    UnknownLabelValue,
)
from .model import LinearModel, load_model, model_from_obj, model_to_obj, predict_sign, save_model
from .objectives import (
    ObjectiveValue,
    ca_objective,
    direction_penalty,
    logistic_loss,
    manipulation_proof_objective,
    static_objective,
)
from .optimize import MinimizeResult, minimize_bfgs
from .response import (
    BestResponseResult,
    DominanceReport,
    Flipset,
    FlipsetRow,
    GroupCostGap,
    PerturbationResult,
    adapted_matrix,
    best_response,
    check_dominance,
    find_cost_reducing_perturbation,
    flipset,
    oracle_best_response,
    response_scores,
    subgroup_cost_gap,
)
from .taxonomy import (
    FAMILIES,
    Feature,
    FeatureKind,
    FeatureTaxonomy,
    make_taxonomy,
    normalize_family,
)
from .training import (
    METHODS,
    FitResult,
    TrainConfig,
    normalize_method,
    train,
)

__all__ = [
    "__version__",
    # taxonomy
    "Feature",
    "FeatureKind",
    "FeatureTaxonomy",
    "FAMILIES",
    "make_taxonomy",
    "normalize_family",
    # cost
    "CostModel",
    "build_cost_model",
    "identity_cost_model",
    "cost",
    "effective_variance",
    "cost_model_from_obj",
    "cost_model_to_obj",
    "load_cost_model",
    "save_cost_model",
    # model
    "LinearModel",
    "predict_sign",
    "model_from_obj",
    "model_to_obj",
    "load_model",
    "save_model",
    # response
    "BestResponseResult",
    "best_response",
    "oracle_best_response",
    "response_scores",
    "adapted_matrix",
    "Flipset",
    "FlipsetRow",
    "flipset",
    "DominanceReport",
    "check_dominance",
    "GroupCostGap",
    "subgroup_cost_gap",
    "PerturbationResult",
    "find_cost_reducing_perturbation",
    # objectives
    "ObjectiveValue",
    "logistic_loss",
    "static_objective",
    "manipulation_proof_objective",
    "ca_objective",
    "direction_penalty",
    # optimize
    "MinimizeResult",
    "minimize_bfgs",
    # training
    "METHODS",
    "TrainConfig",
    "FitResult",
    "train",
    "normalize_method",
    # data
    "Dataset",
    "ToyParams",
    "generate_toy",
    "toy_taxonomy",
    "misspecify",
    "load_csv",
    "save_csv",
    "FoldPlan",
    "make_folds",
    # evaluation
    "EvalReport",
    "evaluate",
    "true_improvement",
    "CVSummary",
    "cross_validate",
    "evaluate_folds",
    "SweepResult",
    "lambda_sweep",
    "metrics_csv",
    "save_metrics_csv",
    # estimator
    "StrategicClassifier",
    "BestResponseTransformer",
    # exceptions
    "StratawareError",
    "DimensionMismatch",
    "NotSymmetric",
    "NotPositiveDefinite",
    "ImmutableViolation",
    "UnknownFeature",
    "OrderingViolation",
    "NoValidPerturbation",
    "SingleClassData",
    "NonFiniteLoss",
    "MissingColumn",
    "NonNumericCell",
    "UnknownLabelValue",
    "TooFewRows",
    "NoOracle",
]
