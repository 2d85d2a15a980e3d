"""Decision-subject best responses to a published linear model.

A subject at x facing classifier sign(w0 + w.x) and a Mahalanobis budget
of 2 solves

    minimize  c(x, x')   subject to  sign(w0 + w.x') = +1,
    move only if the optimal cost is at most 2.

Restricted to a family F of movable features (improvable, manipulable, or
both), the solution is closed form: with C_F = w_F^T S_F w_F,

    no move needed        if s >= 0,
    no move possible      if C_F = 0 or |s| > 2 sqrt(C_F),
    x_F' = x_F - (s / C_F) S_F w_F   otherwise, at cost |s| / sqrt(C_F),

where s is the original score. The move lands exactly on the decision
boundary, and a subject indifferent at cost exactly 2 moves.

The feasibility test is written as |s| <= 2 sqrt(C_F) rather than a
division so that a vanishing C_F can never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag

from .cost import CostModel, effective_variance
from .exceptions import NoValidPerturbation, NotPositiveDefinite, OrderingViolation
from .model import LinearModel
from .taxonomy import (
    FAMILY_ACTIONABLE,
    FeatureTaxonomy,
    check_matrix,
    check_vector,
    normalize_family,
)

COST_BUDGET = 2.0


@dataclass(frozen=True)
class BestResponseResult:
    adapted: np.ndarray
    cost_incurred: float
    moved: bool
    family: str
    original_score: float
    adapted_score: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.adapted, dtype=np.float64).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "adapted", arr)


def _unmoved(x: np.ndarray, family: str, score: float) -> BestResponseResult:
    return BestResponseResult(
        adapted=x,
        cost_incurred=0.0,
        moved=False,
        family=family,
        original_score=score,
        adapted_score=score,
    )


def best_response(
    x,
    linear: LinearModel,
    cost_model: CostModel,
    taxonomy: FeatureTaxonomy,
    family: str = FAMILY_ACTIONABLE,
) -> BestResponseResult:
    """Closed-form minimum-cost response of one subject."""
    fam = normalize_family(family)
    linear.check_taxonomy(taxonomy)
    cost_model.check_taxonomy(taxonomy)
    xv = check_vector(x, taxonomy)
    s = linear.score(xv)
    if s >= 0:
        return _unmoved(xv, fam, s)
    blocks = taxonomy.family_blocks(fam)
    steps = []  # (indices, S_b w_b) per block
    c_f = 0.0
    for block, idx in blocks:
        if not idx.size:
            continue
        w_b = linear.weights[idx]
        g_b = cost_model.cov(block) @ w_b
        c_f += float(w_b @ g_b)
        steps.append((idx, g_b))
    if c_f <= 0.0:
        return _unmoved(xv, fam, s)
    root = math.sqrt(c_f)
    if -s > COST_BUDGET * root:
        return _unmoved(xv, fam, s)
    adapted = xv.copy()
    for idx, g_b in steps:
        adapted[idx] -= (s / c_f) * g_b
    return BestResponseResult(
        adapted=adapted,
        cost_incurred=-s / root,
        moved=True,
        family=fam,
        original_score=s,
        # the move targets the boundary exactly; reporting the recomputed
        # score would leak rounding dust whose sign flips the decision
        adapted_score=0.0,
    )


def oracle_best_response(
    x,
    linear: LinearModel,
    cost_model: CostModel,
    taxonomy: FeatureTaxonomy,
    family: str = FAMILY_ACTIONABLE,
) -> BestResponseResult:
    """Reference implementation used to cross-check best_response.

    Solves the equality-constrained quadratic program

        minimize (x_F' - x_F)^T S_F^{-1} (x_F' - x_F)
        s.t.     w_F . x_F' = -(s - w_F . x_F)

    through its dense KKT system with a generic linear solver, sharing no
    code with the closed form. A singular KKT system (w_F = 0) means no
    move can change the score, i.e. no move is possible.
    """
    fam = normalize_family(family)
    linear.check_taxonomy(taxonomy)
    cost_model.check_taxonomy(taxonomy)
    xv = check_vector(x, taxonomy)
    s = linear.score(xv)
    if s >= 0:
        return _unmoved(xv, fam, s)
    blocks = [(b, idx) for b, idx in taxonomy.family_blocks(fam) if idx.size]
    if not blocks:
        return _unmoved(xv, fam, s)
    idx_all = np.concatenate([idx for _, idx in blocks])
    inv = block_diag(*[cost_model.inv_cov(b) for b, _ in blocks])
    w_f = linear.weights[idx_all]
    x_f = xv[idx_all]
    k = idx_all.size
    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, :k] = 2.0 * inv
    kkt[:k, k] = w_f
    kkt[k, :k] = w_f
    rhs = np.concatenate([2.0 * inv @ x_f, [-(s - w_f @ x_f)]])
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError:
        return _unmoved(xv, fam, s)
    x_f_new = sol[:k]
    delta = x_f_new - x_f
    move_cost = math.sqrt(max(float(delta @ inv @ delta), 0.0))
    if move_cost > COST_BUDGET:
        return _unmoved(xv, fam, s)
    adapted = xv.copy()
    adapted[idx_all] = x_f_new
    return BestResponseResult(
        adapted=adapted,
        cost_incurred=move_cost,
        moved=True,
        family=fam,
        original_score=s,
        adapted_score=linear.score(adapted),
    )


# -- vectorized forms used by training and evaluation ----------------------


def response_scores(
    X,
    linear: LinearModel,
    cost_model: CostModel,
    taxonomy: FeatureTaxonomy,
    family: str = FAMILY_ACTIONABLE,
) -> np.ndarray:
    """Post-response score of every row.

    Movers land exactly on the boundary, so their adapted score is 0; the
    decision rule sign(0) = +1 then accepts them.
    """
    fam = normalize_family(family)
    linear.check_taxonomy(taxonomy)
    cost_model.check_taxonomy(taxonomy)
    Xm = check_matrix(X, taxonomy)
    s = linear.score(Xm)
    c_f = effective_variance(linear.weights, cost_model, taxonomy, fam)
    if c_f <= 0.0:
        return np.asarray(s, dtype=np.float64)
    out = np.asarray(s, dtype=np.float64).copy()
    moved = (s < 0) & (-s <= COST_BUDGET * math.sqrt(c_f))
    out[moved] = 0.0
    return out


def adapted_matrix(
    X,
    linear: LinearModel,
    cost_model: CostModel,
    taxonomy: FeatureTaxonomy,
    family: str = FAMILY_ACTIONABLE,
) -> np.ndarray:
    """Row-wise best-response features (the matrix version of best_response)."""
    fam = normalize_family(family)
    linear.check_taxonomy(taxonomy)
    cost_model.check_taxonomy(taxonomy)
    Xm = check_matrix(X, taxonomy)
    out = Xm.copy()
    s = linear.score(Xm)
    c_f = 0.0
    steps = []
    for block, idx in taxonomy.family_blocks(fam):
        if not idx.size:
            continue
        w_b = linear.weights[idx]
        g_b = cost_model.cov(block) @ w_b
        c_f += float(w_b @ g_b)
        steps.append((idx, g_b))
    if c_f <= 0.0:
        return out
    moved = (s < 0) & (-s <= COST_BUDGET * math.sqrt(c_f))
    if not np.any(moved):
        return out
    scale = s[moved] / c_f
    for idx, g_b in steps:
        out[np.ix_(np.flatnonzero(moved), idx)] -= np.outer(scale, g_b)
    return out


# -- flipsets ---------------------------------------------------------------


@dataclass(frozen=True)
class FlipsetRow:
    feature: str
    kind: str
    original: float
    adapted: float

    @property
    def change(self) -> str:
        if self.adapted > self.original + 1e-12:
            return "up"
        if self.adapted < self.original - 1e-12:
            return "down"
        return "unchanged"


@dataclass(frozen=True)
class Flipset:
    """Per-feature account of one subject's best response."""

    rows: tuple[FlipsetRow, ...]
    predicted_before: int
    predicted_after: int
    cost_incurred: float
    family: str

    def to_obj(self) -> dict:
        return {
            "family": self.family,
            "predicted_before": self.predicted_before,
            "predicted_after": self.predicted_after,
            "cost": self.cost_incurred,
            "rows": [
                {
                    "feature": r.feature,
                    "kind": r.kind,
                    "original": r.original,
                    "adapted": r.adapted,
                    "change": r.change,
                }
                for r in self.rows
            ],
        }

    def to_markdown(self, round_values: bool = False) -> str:
        def fmt(v: float) -> str:
            return f"{v:.0f}" if round_values else f"{v:.6g}"

        lines = [
            f"Decision before response: {self.predicted_before:+d}",
            f"Decision after response:  {self.predicted_after:+d}",
            f"Adaptation cost: {fmt(self.cost_incurred) if round_values else f'{self.cost_incurred:.6g}'}",
            "",
            "| Feature | Type | Original | Adapted |",
            "|---|---|---:|---:|",
        ]
        for r in self.rows:
            lines.append(
                f"| {r.feature} | {r.kind} | {fmt(r.original)} | {fmt(r.adapted)} |"
            )
        return "\n".join(lines) + "\n"


def flipset(
    x,
    linear: LinearModel,
    cost_model: CostModel,
    taxonomy: FeatureTaxonomy,
    family: str = FAMILY_ACTIONABLE,
) -> Flipset:
    """Best response of one subject, rendered feature by feature.

    An already-accepted subject yields a zero-cost flipset with every
    feature unchanged.
    """
    res = best_response(x, linear, cost_model, taxonomy, family)
    xv = check_vector(x, taxonomy)
    rows = tuple(
        FlipsetRow(
            feature=f.name,
            kind=f.kind.value,
            original=float(xv[i]),
            adapted=float(res.adapted[i]),
        )
        for i, f in enumerate(taxonomy.features)
    )
    return Flipset(
        rows=rows,
        predicted_before=1 if res.original_score >= 0 else -1,
        predicted_after=1 if res.adapted_score >= 0 else -1,
        cost_incurred=res.cost_incurred,
        family=res.family,
    )


# -- cost comparisons across families and groups ----------------------------


@dataclass(frozen=True)
class DominanceReport:
    """Costs of reaching acceptance with and without manipulable features.

    A cost is +inf when the family cannot change the score at all
    (C_F = 0). Whenever C_M > 0 and the score is nonzero, the
    unconstrained cost is strictly below the improvable-only cost:
    access to manipulation makes gaming cheaper, never dearer.
    """

    cost_improvable_only: float
    cost_unconstrained: float
    feasible_improvable_only: bool
    feasible_unconstrained: bool


def check_dominance(
    x, linear: LinearModel, cost_model: CostModel, taxonomy: FeatureTaxonomy
) -> DominanceReport:
    linear.check_taxonomy(taxonomy)
    cost_model.check_taxonomy(taxonomy)
    xv = check_vector(x, taxonomy)
    s = linear.score(xv)
    need = abs(s) if s < 0 else 0.0
    c_i = effective_variance(linear.weights, cost_model, taxonomy, "I")
    c_m = effective_variance(linear.weights, cost_model, taxonomy, "M")
    c_a = c_i + c_m

    def family_cost(c_f: float) -> float:
        if need == 0.0:
            return 0.0
        if c_f <= 0.0:
            return math.inf
        return need / math.sqrt(c_f)

    cost_i = family_cost(c_i)
    cost_a = family_cost(c_a)
    return DominanceReport(
        cost_improvable_only=cost_i,
        cost_unconstrained=cost_a,
        feasible_improvable_only=cost_i <= COST_BUDGET,
        feasible_unconstrained=cost_a <= COST_BUDGET,
    )


@dataclass(frozen=True)
class GroupCostGap:
    """Boundary-reaching costs for two groups that differ only in how
    expensive manipulation is for them."""

    cost_a: float
    cost_b: float


def subgroup_cost_gap(
    x,
    linear: LinearModel,
    model_a: CostModel,
    model_b: CostModel,
    taxonomy: FeatureTaxonomy,
) -> GroupCostGap:
    """Unconstrained response costs under two cost models.

    Contract: the groups share the improvable block, and group a's
    manipulable inverse block dominates group b's in the positive definite
    order (manipulation is dearer for group a). Both are verified, the
    order via a Cholesky factorization of the difference; exactly equal
    blocks are allowed and give equal costs. Under a strict order, any
    subject with a negative score and some manipulable weight pays
    strictly more in group a.
    """
    linear.check_taxonomy(taxonomy)
    model_a.check_taxonomy(taxonomy)
    model_b.check_taxonomy(taxonomy)
    if not np.allclose(
        model_a.inv_cov_improvable, model_b.inv_cov_improvable, rtol=0.0, atol=1e-12
    ):
        raise OrderingViolation("groups must share the improvable cost block")
    diff = model_a.inv_cov_manipulable - model_b.inv_cov_manipulable
    if diff.size and float(np.max(np.abs(diff))) > 0.0:
        try:
            np.linalg.cholesky(diff)
        except np.linalg.LinAlgError:
            raise OrderingViolation(
                "group a's manipulable inverse block must dominate group b's "
                "in the positive definite order"
            ) from None

    def unconstrained_cost(m: CostModel) -> float:
        rep = check_dominance(x, linear, m, taxonomy)
        return rep.cost_unconstrained

    return GroupCostGap(cost_a=unconstrained_cost(model_a), cost_b=unconstrained_cost(model_b))


# -- cost-lowering covariance perturbations ----------------------------------


@dataclass(frozen=True)
class PerturbationResult:
    """One off-diagonal coupling that makes reaching the boundary cheaper.

    feature_i and feature_j index the taxonomy; tau is the symmetric
    increment added to S^{-1} at (i, j) and (j, i) inside one block.
    """

    feature_i: int
    feature_j: int
    block: str
    tau: float
    new_model: CostModel
    variance_before: float
    variance_after: float


def _perturbed_inv(inv: np.ndarray, i: int, j: int, tau: float) -> np.ndarray:
    out = inv.copy()
    out[i, j] += tau
    out[j, i] += tau
    return out


def find_cost_reducing_perturbation(
    cost_model: CostModel,
    linear: LinearModel,
    taxonomy: FeatureTaxonomy,
    sample,
) -> PerturbationResult:
    """Search for a same-block off-diagonal cost coupling that strictly
    lowers every rejected sample member's cost of reaching the boundary.

    Lowering the cost is equivalent to raising C_A = w_A^T S_A w_A, so
    candidate pairs are scanned deterministically (blocks I then M,
    heaviest |w_i| first, j ascending) and each candidate increment is
    accepted only if the perturbed inverse block stays positive definite,
    C_A strictly rises, and every rejected member's closed-form cost
    strictly falls. Raises NoValidPerturbation when the scan is exhausted,
    e.g. when no block has two features.
    """
    linear.check_taxonomy(taxonomy)
    cost_model.check_taxonomy(taxonomy)
    X = check_matrix(np.atleast_2d(np.asarray(sample, dtype=float)), taxonomy)
    scores = linear.score(X)
    rejected = scores[scores < 0]
    if rejected.size == 0:
        raise ValueError("sample has no rejected members; nothing to relieve")
    c_before = effective_variance(linear.weights, cost_model, taxonomy, FAMILY_ACTIONABLE)
    if c_before <= 0.0:
        raise ValueError("model has no actionable weight; responses are already impossible")

    for block, idx in taxonomy.family_blocks(FAMILY_ACTIONABLE):
        if idx.size < 2:
            continue
        w_b = linear.weights[idx]
        s_cov = cost_model.cov(block)
        s_inv = cost_model.inv_cov(block)
        a = s_cov @ w_b
        order = sorted(range(idx.size), key=lambda i: (-abs(w_b[i]), i))
        for i_loc in order:
            for j_loc in range(idx.size):
                if j_loc == i_loc:
                    continue
                a_i, a_j = a[i_loc], a[j_loc]
                if a_i == 0.0 and a_j == 0.0:
                    continue
                # C_A shifts by -(E' + E''/tau)/det(T) with E' <= 0 always;
                # tau opposing the sign of E'' = 2 a_i a_j keeps both terms
                # non-positive, so C_A can only rise. |tau| strictly below
                # 1/(sqrt(S_ii S_jj) + |S_ij|), entries of the covariance
                # block, keeps det(T) > 0 and the inverse block positive
                # definite.
                c_ii = s_cov[i_loc, i_loc]
                c_jj = s_cov[j_loc, j_loc]
                c_ij = s_cov[i_loc, j_loc]
                curvature = 2.0 * a_i * a_j
                preferred = -1.0 if curvature > 0 else 1.0
                tau_max = 1.0 / (math.sqrt(c_ii * c_jj) + abs(c_ij))
                for sign in (preferred, -preferred):
                    tau = sign * 0.5 * tau_max
                    candidate = _perturbed_inv(s_inv, i_loc, j_loc, tau)
                    try:
                        new_model = cost_model.with_inv_cov(block, candidate)
                    except NotPositiveDefinite:
                        continue
                    c_after = effective_variance(
                        linear.weights, new_model, taxonomy, FAMILY_ACTIONABLE
                    )
                    if not c_after > c_before:
                        continue
                    # closed-form cost |s|/sqrt(C_A) must fall strictly for
                    # every rejected member; s < 0 makes it strict
                    if np.all(
                        -rejected / math.sqrt(c_after) < -rejected / math.sqrt(c_before)
                    ):
                        return PerturbationResult(
                            feature_i=int(idx[i_loc]),
                            feature_j=int(idx[j_loc]),
                            block=block,
                            tau=tau,
                            new_model=new_model,
                            variance_before=c_before,
                            variance_after=c_after,
                        )
    raise NoValidPerturbation(
        "no same-block off-diagonal perturbation lowers the sample's adaptation costs"
    )
