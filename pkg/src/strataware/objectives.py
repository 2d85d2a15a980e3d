"""Training objectives and their gradients.

All objectives share the logistic surrogate l(z) = log(1 + exp(-z)),
evaluated as logaddexp(0, -z) so large margins cannot overflow, and an L2
penalty on the non-intercept weights.

- static: plain regularized logistic loss; ignores adaptation entirely.
- manipulation_proof: scores every subject as if they had already spent
  the full budget in their own favor, i.e. margins y (s + 2 sqrt(C_A)).
  A subject is then misclassified only if even the best unconstrained
  response cannot flip them, which makes the trained model robust to
  gaming at deployment.
- constructive adaptation (ca): robustness margin uses only the
  manipulable budget 2 sqrt(C_M), plus an improvement term that rewards
  acceptance within the improvable budget, l(s + 2 sqrt(C_I)), applied to
  every subject and weighted by lambda, plus an optional directional
  penalty weighted by eta.

The threshold identities come from the closed-form best response: a
subject at score s reaches the boundary with family F exactly when
s >= -2 sqrt(C_F).

Weight vectors here are packed as (intercept, w_1, ..., w_d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .cost import CostModel
from .data import Dataset
from .exceptions import NonFiniteLoss
from .model import LinearModel
from .taxonomy import FAMILY_ACTIONABLE, FAMILY_IMPROVABLE, FAMILY_MANIPULABLE, FeatureTaxonomy

VARIANCE_EPS = 1e-18
COST_BUDGET = 2.0


@dataclass(frozen=True)
class ObjectiveValue:
    loss: float
    gradient: np.ndarray


def logistic_loss(z):
    return np.logaddexp(0.0, -z)


def logistic_loss_derivative(z):
    return -expit(-z)


def _check_finite(loss: float, grad: np.ndarray, label: str) -> None:
    if not (np.isfinite(loss) and np.all(np.isfinite(grad))):
        raise NonFiniteLoss(f"{label} produced a non-finite loss or gradient")


def _family_geometry(
    w: np.ndarray, cost_model: CostModel, taxonomy: FeatureTaxonomy, family: str
) -> tuple[float, np.ndarray, np.ndarray]:
    """C_F, the scattered step vector g = S_F w_F, and d(2 sqrt(C_F))/dw.

    The chain vector is zeroed below VARIANCE_EPS, where the square root's
    slope blows up but the term itself is numerically zero.
    """
    d = taxonomy.d
    g = np.zeros(d)
    c_f = 0.0
    for block, idx in taxonomy.family_blocks(family):
        if not idx.size:
            continue
        g_b = cost_model.cov(block) @ w[idx]
        g[idx] = g_b
        c_f += float(w[idx] @ g_b)
    if c_f < VARIANCE_EPS:
        return c_f, g, np.zeros(d)
    return c_f, g, 2.0 * g / np.sqrt(c_f)


def _margin_term(
    wvec: np.ndarray,
    X: np.ndarray,
    signs: np.ndarray,
    shift: float,
    chain: np.ndarray,
    weight: float,
) -> tuple[float, np.ndarray]:
    """weight * mean l(signs * (s + shift)) and its gradient.

    ``signs`` is y for label-weighted terms or all ones for the
    improvement term; ``chain`` is d(shift)/dw.
    """
    n = X.shape[0]
    s = wvec[0] + X @ wvec[1:]
    z = signs * (s + shift)
    loss = weight * float(np.mean(logistic_loss(z)))
    coef = (weight / n) * logistic_loss_derivative(z) * signs
    grad = np.empty(wvec.shape[0])
    grad[0] = coef.sum()
    grad[1:] = X.T @ coef + coef.sum() * chain
    return loss, grad


def static_objective_arrays(wvec, X, y, l2_reg: float) -> ObjectiveValue:
    # overflow is not an error here: it surfaces as NonFiniteLoss below
    with np.errstate(over="ignore", invalid="ignore"):
        wvec = np.asarray(wvec, dtype=float)
        w = wvec[1:]
        loss, grad = _margin_term(wvec, X, y.astype(float), 0.0, np.zeros(w.shape[0]), 1.0)
        loss += l2_reg * float(w @ w)
        grad[1:] += 2.0 * l2_reg * w
    _check_finite(loss, grad, "static objective")
    return ObjectiveValue(loss, grad)


def manipulation_proof_objective_arrays(
    wvec, X, y, cost_model: CostModel, taxonomy: FeatureTaxonomy, l2_reg: float
) -> ObjectiveValue:
    with np.errstate(over="ignore", invalid="ignore"):
        wvec = np.asarray(wvec, dtype=float)
        w = wvec[1:]
        c_a, _, chain_a = _family_geometry(w, cost_model, taxonomy, FAMILY_ACTIONABLE)
        shift = COST_BUDGET * np.sqrt(max(c_a, 0.0))
        loss, grad = _margin_term(wvec, X, y.astype(float), shift, chain_a, 1.0)
        loss += l2_reg * float(w @ w)
        grad[1:] += 2.0 * l2_reg * w
    _check_finite(loss, grad, "manipulation-proof objective")
    return ObjectiveValue(loss, grad)


def ca_objective_arrays(
    wvec,
    X,
    y,
    cost_model: CostModel,
    taxonomy: FeatureTaxonomy,
    lambda_: float,
    eta: float,
    l2_reg: float,
) -> ObjectiveValue:
    with np.errstate(over="ignore", invalid="ignore"):
        wvec = np.asarray(wvec, dtype=float)
        w = wvec[1:]
        yf = y.astype(float)
        ones = np.ones_like(yf)

        c_m, _, chain_m = _family_geometry(w, cost_model, taxonomy, FAMILY_MANIPULABLE)
        shift_m = COST_BUDGET * np.sqrt(max(c_m, 0.0))
        loss, grad = _margin_term(wvec, X, yf, shift_m, chain_m, 1.0)

        if lambda_ != 0.0:
            c_i, _, chain_i = _family_geometry(w, cost_model, taxonomy, FAMILY_IMPROVABLE)
            shift_i = COST_BUDGET * np.sqrt(max(c_i, 0.0))
            l_imp, g_imp = _margin_term(wvec, X, ones, shift_i, chain_i, lambda_)
            loss += l_imp
            grad += g_imp

        if eta != 0.0:
            value, sub = direction_penalty_arrays(wvec, X, cost_model, taxonomy)
            loss += eta * value
            grad += eta * sub

        loss += l2_reg * float(w @ w)
        grad[1:] += 2.0 * l2_reg * w
    _check_finite(loss, grad, "constructive-adaptation objective")
    return ObjectiveValue(loss, grad)


def direction_penalty_arrays(
    wvec, X, cost_model: CostModel, taxonomy: FeatureTaxonomy
) -> tuple[float, np.ndarray]:
    """Mean prohibited movement under the unconstrained best response.

    For each subject the response moves x by delta = -(s / C_A) g with
    g = S_A w_A; each feature k with direction flag r_k contributes
    max(r_k * delta_k, 0). The value is averaged over all subjects
    (non-movers contribute zero). The returned subgradient treats the
    move/no-move switch and the hinge kinks as locally constant, taking 0
    exactly at a kink.
    """
    wvec = np.asarray(wvec, dtype=float)
    dim = wvec.shape[0]
    w = wvec[1:]
    r = taxonomy.directions
    constrained = np.flatnonzero(r)
    n = X.shape[0]
    zero = 0.0, np.zeros(dim)
    if constrained.size == 0 or n == 0:
        return zero
    c_a, g, _ = _family_geometry(w, cost_model, taxonomy, FAMILY_ACTIONABLE)
    if c_a < VARIANCE_EPS:
        return zero
    s = wvec[0] + X @ w
    moved = (s < 0) & (-s <= COST_BUDGET * np.sqrt(c_a))
    if not np.any(moved):
        return zero
    q = g / c_a
    s_moved = s[moved]
    X_moved = X[moved]

    value = 0.0
    grad = np.zeros(dim)
    imp = taxonomy.improvable_indices
    man = taxonomy.manipulable_indices
    for k in constrained:
        r_k = float(r[k])
        delta_k = -s_moved * q[k]
        t = r_k * delta_k
        active = t > 0.0
        if not np.any(active):
            continue
        value += float(t[active].sum())
        n_active = int(active.sum())
        sum_s = float(s_moved[active].sum())
        sum_x = X_moved[active].sum(axis=0)
        # row k of S_A lives entirely inside k's own block
        row_k = np.zeros(taxonomy.d)
        if k in imp:
            k_loc = int(np.flatnonzero(imp == k)[0])
            row_k[imp] = cost_model.cov_improvable[k_loc]
        else:
            k_loc = int(np.flatnonzero(man == k)[0])
            row_k[man] = cost_model.cov_manipulable[k_loc]
        dqk_dw = row_k / c_a - (2.0 * q[k] / c_a) * g
        grad[0] += r_k * (-q[k]) * n_active
        grad[1:] += r_k * (-q[k] * sum_x - sum_s * dqk_dw)
    return value / n, grad / n


# -- wrappers over the library types ----------------------------------------


def _as_wvec(model: LinearModel) -> np.ndarray:
    return np.concatenate([[model.intercept], model.weights])


def static_objective(w: LinearModel, data: Dataset, l2_reg: float) -> ObjectiveValue:
    return static_objective_arrays(_as_wvec(w), data.X, data.y, l2_reg)


def manipulation_proof_objective(
    w: LinearModel, data: Dataset, cost_model: CostModel, l2_reg: float
) -> ObjectiveValue:
    return manipulation_proof_objective_arrays(
        _as_wvec(w), data.X, data.y, cost_model, data.taxonomy, l2_reg
    )


def ca_objective(
    w: LinearModel,
    data: Dataset,
    cost_model: CostModel,
    lambda_: float,
    eta: float,
    l2_reg: float,
) -> ObjectiveValue:
    return ca_objective_arrays(
        _as_wvec(w), data.X, data.y, cost_model, data.taxonomy, lambda_, eta, l2_reg
    )


def direction_penalty(
    w: LinearModel, data: Dataset, cost_model: CostModel
) -> tuple[float, np.ndarray]:
    return direction_penalty_arrays(_as_wvec(w), data.X, cost_model, data.taxonomy)
