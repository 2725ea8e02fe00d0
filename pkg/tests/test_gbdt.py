import json
import math

import numpy as np
import pytest

from rankforge.errors import DataError, SchemaMismatchError
from rankforge.gbdt import GbdtParams, TreeEnsemble, fit

SMALL = GbdtParams(num_trees=10, learning_rate=1.0, max_leaves=4,
                   min_samples_leaf=1, seed=0)


def brute_force_first_split(X, y, min_samples_leaf=1):
    """Exhaustive search over all (feature, midpoint threshold) pairs for the
    split minimizing total SSE; ties to lower feature then lower threshold.
    Coded independently of the production search."""
    n, d = X.shape
    best = None  # (sse, feature, threshold)
    for f in range(d):
        values = sorted(set(X[:, f]))
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2
            left = y[X[:, f] <= threshold]
            right = y[X[:, f] > threshold]
            if len(left) < min_samples_leaf or len(right) < min_samples_leaf:
                continue
            sse = (sum((v - sum(left) / len(left)) ** 2 for v in left)
                   + sum((v - sum(right) / len(right)) ** 2 for v in right))
            key = (round(sse, 9), f, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    return best[1], best[2]


def first_split_of(model):
    tree = model.trees[0]
    return int(tree.feature[0]), float(tree.threshold[0])


def test_constant_target_yields_zero_trees_and_exact_predictions():
    X = np.arange(12, dtype=float).reshape(-1, 1)
    y = np.full(12, 3.25)
    model = fit(X, y, SMALL)
    assert len(model.trees) == 0
    assert np.all(model.predict_many(X) == 3.25)


def test_one_dim_step_function_exact():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    params = GbdtParams(num_trees=1, learning_rate=1.0, max_leaves=2,
                        min_samples_leaf=1, seed=0)
    model = fit(X, y, params)
    feature, threshold = first_split_of(model)
    assert feature == 0
    assert 1.0 < threshold < 2.0
    assert brute_force_first_split(X, y) == (0, threshold)
    assert np.allclose(model.predict_many(X), y, atol=1e-12)


def test_first_split_matches_brute_force_on_random_fixtures():
    rng = np.random.default_rng(17)
    for case in range(12):
        n = int(rng.integers(5, 101))
        d = int(rng.integers(1, 4))
        X = np.round(rng.normal(size=(n, d)), 3)
        y = rng.normal(size=n)
        msl = int(rng.integers(1, 4))
        params = GbdtParams(num_trees=1, learning_rate=1.0, max_leaves=2,
                            min_samples_leaf=msl, seed=0)
        model = fit(X, y, params)
        expected = brute_force_first_split(X, y, msl)
        if expected is None:
            assert len(model.trees) == 0
            continue
        got = first_split_of(model)
        assert got[0] == expected[0], f"case {case}"
        assert got[1] == pytest.approx(expected[1], abs=1e-12), f"case {case}"


def test_training_mse_monotone_nonincreasing():
    rng = np.random.default_rng(7)
    for case in range(3):
        X = rng.normal(size=(200, 5))
        y = X[:, 0] * 2 + np.sin(X[:, 1]) + rng.normal(scale=0.3, size=200)
        model = fit(X, y, GbdtParams(num_trees=100, min_samples_leaf=5, seed=case))
        last = math.inf
        for t in range(0, len(model.trees) + 1):
            mse = float(np.mean((y - model.predict_many(X, num_trees=t)) ** 2))
            assert mse <= last + 1e-9
            last = mse
        mse10 = float(np.mean((y - model.predict_many(X, num_trees=10)) ** 2))
        mse50 = float(np.mean((y - model.predict_many(X, num_trees=50)) ** 2))
        assert mse50 < mse10


def test_empty_ensemble_predicts_base_score():
    X = np.array([[1.0], [2.0]])
    y = np.array([5.0, 5.0])
    model = fit(X, y, SMALL)
    assert model.predict([123.0]) == 5.0


def test_serialization_round_trip_bit_exact():
    rng = np.random.default_rng(23)
    X = rng.normal(size=(150, 4))
    y = rng.normal(size=150)
    model = fit(X, y, GbdtParams(num_trees=30, min_samples_leaf=3, seed=1),
                schema_id="abc123")
    blob = model.to_json()
    restored = TreeEnsemble.from_dict(json.loads(blob))
    assert restored.to_json() == blob
    probe = rng.normal(size=(1000, 4))
    assert np.array_equal(model.predict_many(probe), restored.predict_many(probe))


def test_fit_deterministic_byte_for_byte():
    rng = np.random.default_rng(29)
    X = rng.normal(size=(120, 3))
    y = rng.normal(size=120)
    params = GbdtParams(num_trees=20, min_samples_leaf=4, feature_fraction=0.67, seed=9)
    assert fit(X, y, params).to_json() == fit(X, y, params).to_json()


def test_prediction_bounded_by_base_plus_leaf_mass():
    rng = np.random.default_rng(31)
    X = rng.normal(size=(80, 3))
    y = rng.normal(size=80) * 10
    model = fit(X, y, GbdtParams(num_trees=40, min_samples_leaf=2, seed=0))
    bound = abs(model.base_score) + sum(
        model.params.learning_rate * float(np.abs(t.value[t.feature < 0]).max())
        for t in model.trees
    )
    probe = rng.normal(size=(500, 3)) * 50  # far outside the training range
    assert np.all(np.abs(model.predict_many(probe)) <= bound + 1e-9)


def test_min_samples_leaf_respected():
    rng = np.random.default_rng(37)
    X = rng.normal(size=(60, 2))
    y = rng.normal(size=60)
    model = fit(X, y, GbdtParams(num_trees=5, min_samples_leaf=20, seed=0))
    for tree in model.trees:
        counts = _leaf_counts(tree, X)
        assert all(c >= 20 for c in counts.values())


def _leaf_counts(tree, X):
    values = tree.leaf_values(X)
    counts = {}
    idx = np.zeros(len(X), dtype=int)
    active = tree.feature[idx] >= 0
    while active.any():
        cur = idx[active]
        go_left = X[active, tree.feature[cur]] <= tree.threshold[cur]
        idx[active] = np.where(go_left, tree.left[cur], tree.right[cur])
        active = tree.feature[idx] >= 0
    for leaf in idx:
        counts[int(leaf)] = counts.get(int(leaf), 0) + 1
    return counts


def test_max_leaves_respected():
    rng = np.random.default_rng(41)
    X = rng.normal(size=(300, 3))
    y = rng.normal(size=300)
    model = fit(X, y, GbdtParams(num_trees=3, max_leaves=7, min_samples_leaf=1, seed=0))
    for tree in model.trees:
        assert tree.n_leaves <= 7


def test_schema_mismatch_on_predict():
    X = np.ones((4, 2))
    y = np.array([1.0, 2.0, 1.0, 2.0])
    model = fit(X, y, SMALL)
    with pytest.raises(SchemaMismatchError):
        model.predict([1.0, 2.0, 3.0])


def test_nan_rejected():
    with pytest.raises(DataError):
        fit(np.array([[np.nan], [1.0]]), np.array([1.0, 2.0]), SMALL)


def test_model_file_round_trip(tmp_path):
    rng = np.random.default_rng(43)
    X = rng.normal(size=(50, 2))
    y = rng.normal(size=50)
    model = fit(X, y, GbdtParams(num_trees=5, min_samples_leaf=2, seed=0),
                schema_id="deadbeef", meta={"trained_n": 5, "r_groups": 8})
    path = tmp_path / "model.json"
    model.save(path)
    loaded = TreeEnsemble.load(path)
    assert loaded.to_json() == model.to_json()
    assert loaded.meta["trained_n"] == 5
    data = json.loads(path.read_text())
    assert data["format"] == "rankforge-gbdt/1"
