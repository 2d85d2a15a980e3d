"""Shared builders for the test suite."""

import numpy as np

from strataware import LinearModel, build_cost_model, make_taxonomy


def rand_spd(rng, k, lo=0.3, hi=3.0):
    """Random symmetric positive definite matrix with spectrum in [lo, hi]."""
    if k == 0:
        return np.zeros((0, 0))
    q, _ = np.linalg.qr(rng.normal(size=(k, k)))
    m = q @ np.diag(rng.uniform(lo, hi, size=k)) @ q.T
    return (m + m.T) / 2.0


def rand_instance(rng, d_improvable, d_manipulable, d_immutable=0):
    """Random taxonomy, SPD cost model, and linear model for one problem."""
    kinds = (
        ["improvable"] * d_improvable
        + ["manipulable"] * d_manipulable
        + ["immutable"] * d_immutable
    )
    taxonomy = make_taxonomy([f"f{k}" for k in range(len(kinds))], kinds)
    cost_model = build_cost_model(
        rand_spd(rng, d_improvable), rand_spd(rng, d_manipulable)
    )
    linear = LinearModel(
        intercept=float(rng.normal()), weights=rng.normal(size=len(kinds))
    )
    return taxonomy, cost_model, linear


def movable_negative(rng, linear, c_family, d):
    """Draw x with score < 0 whose best response is feasible for the family.

    Start anywhere, push the point to the rejected side along the weight
    vector, then rescale the score into (0, 2 sqrt(C_F)] so the budget of 2
    is enough to reach the boundary.
    """
    assert c_family > 0.0
    w = linear.weights
    x = rng.normal(size=d)
    s = linear.intercept + float(w @ x)
    target = -rng.uniform(0.05, 1.9) * np.sqrt(c_family)
    # shift along w so the score lands exactly on target
    x = x + w * (target - s) / float(w @ w)
    return x
