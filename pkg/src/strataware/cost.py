"""Mahalanobis adaptation cost over the actionable features.

The cost of moving from x to x' is

    c(x, x') = sqrt(delta_A^T S^{-1} delta_A),   delta_A = (x' - x) on A,

where S^{-1} is block diagonal: one symmetric positive definite block for
the improvable features and one for the manipulable features. Immutable
features must not change at all. The model stores both each inverse block
(the quadratic form actually used by the cost) and its inverse S (which
closed-form best responses need), computed once via Cholesky solves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy.linalg import cho_solve

from .exceptions import (
    DimensionMismatch,
    ImmutableViolation,
    NotPositiveDefinite,
    NotSymmetric,
)
from .taxonomy import (
    FAMILY_ACTIONABLE,
    FAMILY_IMPROVABLE,
    FAMILY_MANIPULABLE,
    FeatureTaxonomy,
    check_vector,
    normalize_family,
)

SYMMETRY_TOL = 1e-12
IMMUTABLE_TOL = 1e-12


def _validated_spd(matrix, label: str) -> tuple[np.ndarray, np.ndarray]:
    """Return (symmetrized matrix, lower Cholesky factor) or raise."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{label} must be square, got shape {arr.shape}")
    if arr.size == 0:
        empty = arr.reshape(0, 0).copy()
        return empty, empty.copy()
    if not np.all(np.isfinite(arr)):
        raise NotPositiveDefinite(f"{label} contains non-finite entries")
    asym = float(np.max(np.abs(arr - arr.T)))
    if asym > SYMMETRY_TOL:
        raise NotSymmetric(f"{label} is asymmetric by {asym:.3e} (tolerance {SYMMETRY_TOL:.0e})")
    sym = (arr + arr.T) / 2.0
    try:
        chol = np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(f"{label} is not positive definite") from None
    return sym, chol


def _chol_inverse(sym: np.ndarray, chol: np.ndarray) -> np.ndarray:
    if sym.shape[0] == 0:
        return sym.copy()
    inv = cho_solve((chol, True), np.eye(sym.shape[0]))
    # the solve leaves tiny asymmetry; the quadratic-form algebra wants none
    return (inv + inv.T) / 2.0


@dataclass(frozen=True)
class CostModel:
    """Validated block-diagonal cost geometry.

    Build through build_cost_model, which performs the SPD validation and
    computes the cached inverses; the raw constructor trusts its inputs.
    """

    inv_cov_improvable: np.ndarray
    inv_cov_manipulable: np.ndarray
    cov_improvable: np.ndarray
    cov_manipulable: np.ndarray

    def __post_init__(self) -> None:
        for name in (
            "inv_cov_improvable",
            "inv_cov_manipulable",
            "cov_improvable",
            "cov_manipulable",
        ):
            arr = np.asarray(getattr(self, name), dtype=np.float64).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def d_improvable(self) -> int:
        return self.inv_cov_improvable.shape[0]

    @property
    def d_manipulable(self) -> int:
        return self.inv_cov_manipulable.shape[0]

    def inv_cov(self, block: str) -> np.ndarray:
        """Inverse block by family code "I" or "M"."""
        fam = normalize_family(block)
        if fam == FAMILY_IMPROVABLE:
            return self.inv_cov_improvable
        if fam == FAMILY_MANIPULABLE:
            return self.inv_cov_manipulable
        raise ValueError("cost blocks are per kind; use 'I' or 'M', not 'A'")

    def cov(self, block: str) -> np.ndarray:
        fam = normalize_family(block)
        if fam == FAMILY_IMPROVABLE:
            return self.cov_improvable
        if fam == FAMILY_MANIPULABLE:
            return self.cov_manipulable
        raise ValueError("cost blocks are per kind; use 'I' or 'M', not 'A'")

    def check_taxonomy(self, taxonomy: FeatureTaxonomy) -> None:
        n_i = len(taxonomy.improvable_indices)
        n_m = len(taxonomy.manipulable_indices)
        if self.d_improvable != n_i or self.d_manipulable != n_m:
            raise DimensionMismatch(
                f"cost model blocks are {self.d_improvable}x{self.d_improvable} (improvable) "
                f"and {self.d_manipulable}x{self.d_manipulable} (manipulable); taxonomy has "
                f"{n_i} improvable and {n_m} manipulable features"
            )

    def with_inv_cov(self, block: str, matrix) -> "CostModel":
        """New model with one inverse block replaced (revalidated)."""
        fam = normalize_family(block)
        if fam == FAMILY_IMPROVABLE:
            return build_cost_model(matrix, self.inv_cov_manipulable)
        if fam == FAMILY_MANIPULABLE:
            return build_cost_model(self.inv_cov_improvable, matrix)
        raise ValueError("cost blocks are per kind; use 'I' or 'M', not 'A'")


def build_cost_model(inv_cov_improvable, inv_cov_manipulable) -> CostModel:
    """Validate both inverse blocks and precompute their inverses.

    Raises NotSymmetric, NotPositiveDefinite, or DimensionMismatch. Either
    block may be 0x0 when the taxonomy has no features of that kind.
    """
    inv_i, chol_i = _validated_spd(inv_cov_improvable, "improvable inverse block")
    inv_m, chol_m = _validated_spd(inv_cov_manipulable, "manipulable inverse block")
    return CostModel(
        inv_cov_improvable=inv_i,
        inv_cov_manipulable=inv_m,
        cov_improvable=_chol_inverse(inv_i, chol_i),
        cov_manipulable=_chol_inverse(inv_m, chol_m),
    )


def identity_cost_model(
    taxonomy: FeatureTaxonomy,
    improvable_scale: float = 1.0,
    manipulable_scale: float = 1.0,
) -> CostModel:
    """Scaled-identity inverse blocks sized to the taxonomy.

    The scale multiplies the inverse block, so a smaller manipulable_scale
    makes manipulation cheaper.
    """
    if improvable_scale <= 0 or manipulable_scale <= 0:
        raise NotPositiveDefinite("scales must be positive")
    n_i = len(taxonomy.improvable_indices)
    n_m = len(taxonomy.manipulable_indices)
    return build_cost_model(
        improvable_scale * np.eye(n_i), manipulable_scale * np.eye(n_m)
    )


def cost(x, x_prime, model: CostModel, taxonomy: FeatureTaxonomy) -> float:
    """Adaptation cost c(x, x'), raising ImmutableViolation if x' touches
    an immutable feature by more than IMMUTABLE_TOL."""
    model.check_taxonomy(taxonomy)
    xv = check_vector(x, taxonomy)
    xp = check_vector(x_prime, taxonomy)
    delta = xp - xv
    imm = taxonomy.immutable_indices
    if imm.size:
        worst = float(np.max(np.abs(delta[imm])))
        if worst > IMMUTABLE_TOL:
            which = taxonomy.names[imm[int(np.argmax(np.abs(delta[imm])))]]
            raise ImmutableViolation(
                f"immutable feature {which!r} changed by {worst:.3e}"
            )
    total = 0.0
    for block, idx in taxonomy.family_blocks(FAMILY_ACTIONABLE):
        if idx.size:
            d_b = delta[idx]
            total += float(d_b @ model.inv_cov(block) @ d_b)
    # quadratic form of an SPD matrix; clip fp dust so sqrt stays real
    return float(np.sqrt(max(total, 0.0)))


def effective_variance(weights, model: CostModel, taxonomy: FeatureTaxonomy, family: str) -> float:
    """C_F = w_F^T S_F w_F for the family's blocks of a weight vector.

    ``weights`` is the d-vector of non-intercept weights. This is the
    squared score change per unit cost available to the family; family "A"
    is computed as the exact sum of the I and M values.
    """
    model.check_taxonomy(taxonomy)
    w = check_vector(weights, taxonomy)
    fam = normalize_family(family)
    if fam == FAMILY_ACTIONABLE:
        return effective_variance(w, model, taxonomy, FAMILY_IMPROVABLE) + effective_variance(
            w, model, taxonomy, FAMILY_MANIPULABLE
        )
    ((block, idx),) = taxonomy.family_blocks(fam)
    if not idx.size:
        return 0.0
    w_b = w[idx]
    return float(w_b @ model.cov(block) @ w_b)


# -- serialization ---------------------------------------------------------


def cost_model_to_obj(model: CostModel) -> dict:
    return {
        "inv_cov_improvable": model.inv_cov_improvable.tolist(),
        "inv_cov_manipulable": model.inv_cov_manipulable.tolist(),
    }


def cost_model_from_obj(obj: Mapping, taxonomy: FeatureTaxonomy) -> CostModel:
    """Build from a JSON object.

    Accepts either explicit blocks {"inv_cov_improvable": [[...]],
    "inv_cov_manipulable": [[...]]} or the scaled-identity shorthand
    {"improvable_scale": a, "manipulable_scale": b} sized to the taxonomy.
    """
    if "inv_cov_improvable" in obj or "inv_cov_manipulable" in obj:
        try:
            inv_i = obj["inv_cov_improvable"]
            inv_m = obj["inv_cov_manipulable"]
        except KeyError as missing:
            raise ValueError(f"cost JSON needs both inverse blocks; missing {missing}") from None
        model = build_cost_model(inv_i, inv_m)
    elif "improvable_scale" in obj or "manipulable_scale" in obj:
        model = identity_cost_model(
            taxonomy,
            improvable_scale=float(obj.get("improvable_scale", 1.0)),
            manipulable_scale=float(obj.get("manipulable_scale", 1.0)),
        )
    else:
        raise ValueError(
            "cost JSON must carry inv_cov_improvable/inv_cov_manipulable "
            "or improvable_scale/manipulable_scale"
        )
    model.check_taxonomy(taxonomy)
    return model


def save_cost_model(model: CostModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cost_model_to_obj(model), indent=2) + "\n")


def load_cost_model(path: str | Path, taxonomy: FeatureTaxonomy) -> CostModel:
    return cost_model_from_obj(json.loads(Path(path).read_text()), taxonomy)
