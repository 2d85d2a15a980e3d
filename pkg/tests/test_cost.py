"""Block cost models: validation, inversion, the quadratic-form cost, C_F."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strataware import (
    build_cost_model,
    cost,
    cost_model_from_obj,
    cost_model_to_obj,
    effective_variance,
    identity_cost_model,
    load_cost_model,
    make_taxonomy,
    save_cost_model,
)
from strataware.exceptions import (
    DimensionMismatch,
    ImmutableViolation,
    NotPositiveDefinite,
    NotSymmetric,
)
from helpers import rand_spd

TAX_2I2M = make_taxonomy(
    ["i1", "i2", "m1", "m2"],
    ["improvable", "improvable", "manipulable", "manipulable"],
)


def test_identity_blocks():
    cm = identity_cost_model(TAX_2I2M)
    np.testing.assert_array_equal(cm.inv_cov("I"), np.eye(2))
    np.testing.assert_array_equal(cm.cov("M"), np.eye(2))
    assert cm.d_improvable == 2 and cm.d_manipulable == 2


def test_identity_scales_apply_to_inverse():
    # manipulable_scale multiplies the inverse block, so the covariance
    # block is its reciprocal: inv 0.2 I -> cov 5 I
    cm = identity_cost_model(TAX_2I2M, improvable_scale=1.0, manipulable_scale=0.2)
    np.testing.assert_allclose(cm.inv_cov("M"), 0.2 * np.eye(2))
    np.testing.assert_allclose(cm.cov("M"), 5.0 * np.eye(2))


def test_block_inverse_frozen_value():
    inv = np.array([[2.0, 1.0], [1.0, 2.0]])
    cm = build_cost_model(inv, np.zeros((0, 0)))
    expected = np.array([[2 / 3, -1 / 3], [-1 / 3, 2 / 3]])
    np.testing.assert_allclose(cm.cov("I"), expected, atol=1e-12)
    # independent check against a generic solver
    np.testing.assert_allclose(cm.cov("I"), np.linalg.solve(inv, np.eye(2)), atol=1e-12)


def test_inverse_consistency_random():
    rng = np.random.default_rng(11)
    for _ in range(20):
        d_i, d_m = rng.integers(1, 6), rng.integers(1, 6)
        cm = build_cost_model(rand_spd(rng, d_i), rand_spd(rng, d_m))
        for block in ("I", "M"):
            prod = cm.cov(block) @ cm.inv_cov(block)
            np.testing.assert_allclose(prod, np.eye(prod.shape[0]), atol=1e-10)


def test_cost_identity_345():
    tax = make_taxonomy(["a", "b"], ["improvable", "improvable"])
    cm = identity_cost_model(tax)
    x = np.zeros(2)
    assert cost(x, x, cm, tax) == 0.0
    got = cost(x, np.array([3.0, 4.0]), cm, tax)
    assert math.isclose(got, 5.0, rel_tol=1e-12)


def test_cost_diagonal_frozen():
    tax = make_taxonomy(["a", "b"], ["improvable", "improvable"])
    inv = np.diag([4.0, 1.0])
    cm = build_cost_model(inv, np.zeros((0, 0)))
    delta = np.array([1.0, 1.0])
    got = cost(np.zeros(2), delta, cm, tax)
    assert math.isclose(got, math.sqrt(5.0), rel_tol=1e-12)
    # oracle: sqrt of the explicit quadratic form
    assert math.isclose(got, math.sqrt(delta @ inv @ delta), rel_tol=1e-12)


def test_cost_spans_both_blocks():
    cm = identity_cost_model(TAX_2I2M, 1.0, 0.25)
    x = np.zeros(4)
    x2 = np.array([1.0, 0.0, 2.0, 0.0])
    # quadratic form adds blockwise: 1*1 + 0.25*4 = 2
    assert math.isclose(cost(x, x2, cm, TAX_2I2M), math.sqrt(2.0), rel_tol=1e-12)


def test_cost_rejects_immutable_move():
    tax = make_taxonomy(["a", "z"], ["improvable", "immutable"])
    cm = identity_cost_model(tax)
    with pytest.raises(ImmutableViolation):
        cost(np.zeros(2), np.array([0.0, 1e-6]), cm, tax)
    # drift below tolerance is treated as unchanged
    assert cost(np.zeros(2), np.array([0.0, 1e-14]), cm, tax) == 0.0


def test_effective_variance_frozen():
    cm = identity_cost_model(TAX_2I2M, 1.0, 0.2)
    w = np.array([0.0, 0.0, 0.3, -0.4])
    # C_M = w_M . (5 I) w_M = 5 * 0.25
    assert math.isclose(effective_variance(w, cm, TAX_2I2M, "M"), 1.25, rel_tol=1e-12)
    assert effective_variance(w, cm, TAX_2I2M, "I") == 0.0


def test_effective_variance_splits_exactly():
    rng = np.random.default_rng(5)
    for _ in range(25):
        cm = build_cost_model(rand_spd(rng, 3), rand_spd(rng, 2))
        tax = make_taxonomy(
            ["a", "b", "c", "d", "e"],
            ["improvable"] * 3 + ["manipulable"] * 2,
        )
        w = rng.normal(size=5)
        c_i = effective_variance(w, cm, tax, "I")
        c_m = effective_variance(w, cm, tax, "M")
        c_a = effective_variance(w, cm, tax, "A")
        assert c_a == c_i + c_m  # summed per block, so exact
        # oracle: quadratic forms in the covariance blocks
        assert math.isclose(c_i, w[:3] @ cm.cov("I") @ w[:3], rel_tol=1e-12)
        assert math.isclose(c_m, w[3:] @ cm.cov("M") @ w[3:], rel_tol=1e-12)


def test_asymmetric_block_rejected():
    with pytest.raises(NotSymmetric):
        build_cost_model(np.array([[1.0, 0.1], [0.0, 1.0]]), np.zeros((0, 0)))


def test_indefinite_block_rejected():
    with pytest.raises(NotPositiveDefinite):
        build_cost_model(np.array([[1.0, 2.0], [2.0, 1.0]]), np.zeros((0, 0)))
    with pytest.raises(NotPositiveDefinite):
        build_cost_model(np.array([[0.0]]), np.zeros((0, 0)))


def test_nonfinite_block_rejected():
    with pytest.raises(NotPositiveDefinite):
        build_cost_model(np.array([[np.nan]]), np.zeros((0, 0)))


def test_nonsquare_block_rejected():
    with pytest.raises(DimensionMismatch):
        build_cost_model(np.zeros((3, 2)), np.zeros((0, 0)))


def test_block_size_must_match_taxonomy():
    cm = build_cost_model(np.eye(3), np.zeros((0, 0)))
    with pytest.raises(DimensionMismatch):
        cm.check_taxonomy(TAX_2I2M)


def test_empty_manipulable_block():
    tax = make_taxonomy(["a", "b"], ["improvable", "improvable"])
    cm = identity_cost_model(tax)
    cm.check_taxonomy(tax)
    assert effective_variance(np.ones(2), cm, tax, "M") == 0.0


@settings(max_examples=60, deadline=None)
@given(t=st.floats(-100.0, 100.0), seed=st.integers(0, 10_000))
def test_cost_symmetry_and_homogeneity(t, seed):
    rng = np.random.default_rng(seed)
    cm = build_cost_model(rand_spd(rng, 2), rand_spd(rng, 2))
    x = rng.normal(size=4)
    delta = rng.normal(size=4)
    base = cost(x, x + delta, cm, TAX_2I2M)
    assert cost(x + delta, x, cm, TAX_2I2M) == pytest.approx(base, rel=1e-12)
    scaled = cost(x, x + t * delta, cm, TAX_2I2M)
    assert scaled == pytest.approx(abs(t) * base, rel=1e-9, abs=1e-12)


def test_cost_positive_iff_moved():
    rng = np.random.default_rng(17)
    cm = build_cost_model(rand_spd(rng, 2), rand_spd(rng, 2))
    for _ in range(50):
        x = rng.normal(size=4)
        delta = rng.normal(size=4) * rng.choice([0.0, 1.0])
        c = cost(x, x + delta, cm, TAX_2I2M)
        if np.any(delta != 0.0):
            assert c > 0.0
        else:
            assert c == 0.0


def test_obj_round_trip():
    rng = np.random.default_rng(23)
    cm = build_cost_model(rand_spd(rng, 2), rand_spd(rng, 2))
    obj = cost_model_to_obj(cm)
    back = cost_model_from_obj(obj, TAX_2I2M)
    np.testing.assert_allclose(back.inv_cov("I"), cm.inv_cov("I"), atol=1e-15)
    np.testing.assert_allclose(back.inv_cov("M"), cm.inv_cov("M"), atol=1e-15)


def test_obj_scale_shorthand():
    obj = {"improvable_scale": 1.0, "manipulable_scale": 0.2}
    cm = cost_model_from_obj(obj, TAX_2I2M)
    np.testing.assert_allclose(cm.inv_cov("M"), 0.2 * np.eye(2))


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(29)
    cm = build_cost_model(rand_spd(rng, 2), rand_spd(rng, 2))
    p = tmp_path / "cost.json"
    save_cost_model(cm, p)
    back = load_cost_model(p, TAX_2I2M)
    np.testing.assert_allclose(back.inv_cov("I"), cm.inv_cov("I"), atol=1e-15)
