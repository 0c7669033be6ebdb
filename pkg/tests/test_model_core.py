"""Loss, gradient, and fairness-weight unit tests.

The gradient implementation is checked against an independent central
finite-difference oracle before anything else relies on it.
"""

import itertools

import numpy as np
import pytest

from afafed.model_core import (
    LossKind,
    LossModel,
    TrainingExample,
    check_weights,
    gradient_arrays,
    global_gradient_arrays,
    global_risk,
    global_risk_arrays,
    jain_fairness_index,
    local_gradient,
    local_risk,
    minibatch_gradient,
    normalized_weights,
    quadratic_global_minimum,
    risk_arrays,
    shard_smoothness,
    smoothness_constant,
    stack_examples,
    uniform_weights,
)


def fd_gradient(model, w, X, y):
    """Central-difference gradient oracle; step scales with coordinate size."""
    g = np.zeros_like(w)
    for j in range(w.size):
        h = 1e-6 * (1.0 + abs(w[j]))
        wp, wm = w.copy(), w.copy()
        wp[j] += h
        wm[j] -= h
        g[j] = (risk_arrays(model, wp, X, y) - risk_arrays(model, wm, X, y)) / (2.0 * h)
    return g


def rel_err(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


def make_shard(rng, n, d, kind):
    X = rng.standard_normal((n, d))
    if kind is LossKind.QUADRATIC:
        y = X @ rng.standard_normal(d) + 0.1 * rng.standard_normal(n)
    else:
        y = rng.integers(0, 2, size=n).astype(np.float64)
    return X, y


@pytest.mark.parametrize("kind", [LossKind.QUADRATIC, LossKind.LOGISTIC])
@pytest.mark.parametrize("d", [1, 3, 7])
def test_gradient_matches_finite_differences(kind, d):
    rng = np.random.default_rng(1234 + d)
    model = LossModel(kind, d)
    for trial in range(10):
        X, y = make_shard(rng, 12, d, kind)
        w = rng.standard_normal(d) * (3.0 if trial % 2 else 0.3)
        g = gradient_arrays(model, w, X, y)
        assert rel_err(g, fd_gradient(model, w, X, y)) <= 1e-5


def test_quadratic_hand_values():
    model = LossModel(LossKind.QUADRATIC, 1)
    data = [TrainingExample(np.array([1.0]), 1.0)]
    w = np.array([0.0])
    assert local_risk(model, w, data) == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(local_gradient(model, w, data), [-1.0], atol=1e-15)


def test_logistic_value_at_origin():
    # at w = 0 every example predicts probability 1/2, costing ln 2
    model = LossModel(LossKind.LOGISTIC, 3)
    rng = np.random.default_rng(7)
    X, y = make_shard(rng, 20, 3, LossKind.LOGISTIC)
    assert risk_arrays(model, np.zeros(3), X, y) == pytest.approx(np.log(2.0), rel=1e-12)


def test_logistic_matches_naive_formula_in_safe_range():
    model = LossModel(LossKind.LOGISTIC, 2)
    rng = np.random.default_rng(8)
    X = rng.uniform(-1, 1, size=(15, 2))
    y = rng.integers(0, 2, size=15).astype(np.float64)
    w = rng.uniform(-1, 1, size=2)
    p = 1.0 / (1.0 + np.exp(-(X @ w)))
    naive = float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))
    assert risk_arrays(model, w, X, y) == pytest.approx(naive, rel=1e-12)


def test_logistic_stable_at_extreme_scores():
    model = LossModel(LossKind.LOGISTIC, 1)
    X = np.array([[1.0], [-1.0]])
    y = np.array([1.0, 0.0])
    w = np.array([500.0])
    v = risk_arrays(model, w, X, y)
    g = gradient_arrays(model, w, X, y)
    assert np.isfinite(v) and v == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite(g))


def test_global_risk_weighted_combination():
    model = LossModel(LossKind.QUADRATIC, 1)
    # shard risks at w=0: 0.5*y^2
    shard_a = [TrainingExample(np.array([1.0]), np.sqrt(2.0))]   # risk 1
    shard_b = [TrainingExample(np.array([1.0]), 2.0)]            # risk 2
    w = np.zeros(1)
    got = global_risk(model, w, [shard_a, shard_b], np.array([0.3, 0.7]))
    assert got == pytest.approx(0.3 * 1.0 + 0.7 * 2.0, rel=1e-12)


def test_global_arrays_agree_with_example_lists():
    rng = np.random.default_rng(11)
    model = LossModel(LossKind.QUADRATIC, 4)
    shards = []
    arrays = []
    for _ in range(3):
        X, y = make_shard(rng, 9, 4, LossKind.QUADRATIC)
        arrays.append((X, y))
        shards.append([TrainingExample(X[i], float(y[i])) for i in range(9)])
    lam = normalized_weights(rng.uniform(0.1, 1.0, size=3))
    w = rng.standard_normal(4)
    assert global_risk_arrays(model, w, arrays, lam) == pytest.approx(
        global_risk(model, w, shards, lam), rel=1e-12)
    direct = sum(l * gradient_arrays(model, w, X, y) for l, (X, y) in zip(lam, arrays))
    np.testing.assert_allclose(global_gradient_arrays(model, w, arrays, lam), direct, rtol=1e-12)


def test_convexity_midpoint():
    rng = np.random.default_rng(21)
    for kind in (LossKind.QUADRATIC, LossKind.LOGISTIC):
        model = LossModel(kind, 5)
        X, y = make_shard(rng, 30, 5, kind)
        for _ in range(20):
            a = rng.standard_normal(5)
            b = rng.standard_normal(5)
            mid = risk_arrays(model, 0.5 * (a + b), X, y)
            chord = 0.5 * (risk_arrays(model, a, X, y) + risk_arrays(model, b, X, y))
            assert mid <= chord + 1e-12


def test_smoothness_constant_bounds_gradient_variation():
    rng = np.random.default_rng(31)
    for kind in (LossKind.QUADRATIC, LossKind.LOGISTIC):
        model = LossModel(kind, 4)
        arrays = [make_shard(rng, 25, 4, kind) for _ in range(3)]
        L = smoothness_constant(model, arrays)
        for X, y in arrays:
            for _ in range(25):
                a = rng.standard_normal(4) * 2
                b = rng.standard_normal(4) * 2
                lhs = np.linalg.norm(
                    gradient_arrays(model, a, X, y) - gradient_arrays(model, b, X, y))
                assert lhs <= L * np.linalg.norm(a - b) * (1 + 1e-9)


def test_quadratic_smoothness_is_tight():
    # for the quadratic loss the gradient map is exactly linear with the Gram matrix
    rng = np.random.default_rng(32)
    model = LossModel(LossKind.QUADRATIC, 3)
    X, y = make_shard(rng, 40, 3, LossKind.QUADRATIC)
    L = shard_smoothness(model, X)
    gram = (X.T @ X) / X.shape[0]
    top_vec = np.linalg.eigh(gram)[1][:, -1]
    a = np.zeros(3)
    b = top_vec
    lhs = np.linalg.norm(gradient_arrays(model, a, X, y) - gradient_arrays(model, b, X, y))
    assert lhs == pytest.approx(L * np.linalg.norm(a - b), rel=1e-9)


def test_minibatch_average_over_all_subsets_is_exact_gradient():
    # enumerating every size-m batch and averaging must reproduce the full
    # gradient: each example appears in the same number of subsets
    rng = np.random.default_rng(41)
    model = LossModel(LossKind.QUADRATIC, 2)
    shard = [TrainingExample(rng.standard_normal(2), float(rng.standard_normal()))
             for _ in range(5)]
    w = rng.standard_normal(2)
    full = local_gradient(model, w, shard)
    for m in (1, 2, 3):
        batches = list(itertools.combinations(shard, m))
        mean_g = np.mean([minibatch_gradient(model, w, list(b)) for b in batches], axis=0)
        np.testing.assert_allclose(mean_g, full, rtol=1e-12, atol=1e-14)


def test_minibatch_full_batch_equals_exact():
    rng = np.random.default_rng(42)
    model = LossModel(LossKind.LOGISTIC, 3)
    shard = [TrainingExample(rng.standard_normal(3), float(rng.integers(0, 2)))
             for _ in range(8)]
    w = rng.standard_normal(3)
    np.testing.assert_array_equal(
        minibatch_gradient(model, w, shard), local_gradient(model, w, shard))


def test_quadratic_global_minimum_is_stationary_and_minimal():
    rng = np.random.default_rng(51)
    model = LossModel(LossKind.QUADRATIC, 4)
    arrays = [make_shard(rng, 20, 4, LossKind.QUADRATIC) for _ in range(3)]
    lam = normalized_weights(rng.uniform(0.2, 1.0, size=3))
    w_star, f_star = quadratic_global_minimum(arrays, lam)
    g = global_gradient_arrays(model, w_star, arrays, lam)
    assert np.linalg.norm(g) <= 1e-10
    for _ in range(20):
        w = w_star + rng.standard_normal(4)
        assert global_risk_arrays(model, w, arrays, lam) >= f_star - 1e-12


# ---------------- fairness weights ---------------- #


def test_jain_hand_values():
    assert jain_fairness_index(np.array([0.5, 0.5, 0.0, 0.0])) == pytest.approx(0.5)
    assert jain_fairness_index(np.array([1.0, 0.0, 0.0, 0.0])) == pytest.approx(0.25)
    assert jain_fairness_index(uniform_weights(7)) == pytest.approx(1.0)


def test_jain_scale_invariant_and_bounded():
    rng = np.random.default_rng(61)
    for _ in range(50):
        k = int(rng.integers(1, 12))
        w = rng.uniform(0.0, 1.0, size=k)
        if w.sum() == 0.0:
            continue
        fi = jain_fairness_index(w)
        assert 1.0 / k - 1e-12 <= fi <= 1.0 + 1e-12
        assert jain_fairness_index(3.7 * w) == pytest.approx(fi, rel=1e-12)


def test_jain_rejects_all_zero():
    with pytest.raises(ValueError):
        jain_fairness_index(np.zeros(3))


def test_weight_helpers():
    u = uniform_weights(4)
    check_weights(u)
    np.testing.assert_allclose(u, 0.25)
    n = normalized_weights(np.array([2.0, 6.0]))
    np.testing.assert_allclose(n, [0.25, 0.75])
    with pytest.raises(ValueError):
        normalized_weights(np.array([1.0, -0.1]))
    with pytest.raises(ValueError):
        normalized_weights(np.zeros(2))
    with pytest.raises(ValueError):
        check_weights(np.array([0.6, 0.6]))
    with pytest.raises(ValueError):
        check_weights(np.array([1.5, -0.5]))
    with pytest.raises(ValueError):
        uniform_weights(0)


def test_stack_and_dimension_checks():
    X, y = stack_examples([TrainingExample(np.array([1.0, 2.0]), 3.0)])
    assert X.shape == (1, 2) and y.shape == (1,)
    with pytest.raises(ValueError):
        stack_examples([])
    model = LossModel(LossKind.QUADRATIC, 2)
    with pytest.raises(ValueError):
        risk_arrays(model, np.zeros(3), X, y)
    with pytest.raises(ValueError):
        risk_arrays(model, np.zeros(2), np.zeros((4, 3)), np.zeros(4))
