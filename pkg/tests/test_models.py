import math

import numpy as np
import pytest

from fengshui.models import (
    DecisionTreeClassifier,
    EmptyNode,
    EmptyTrainingSet,
    FeatureNameMismatch,
    KnnClassifier,
    ModelError,
    ModelSpec,
    RandomForestClassifier,
    build_estimator,
    fit,
    gini,
    model_from_json,
    model_to_json,
    spec_from_dict,
    spec_to_dict,
)

from conftest import make_vector


def knn_scan_oracle(train_X, train_y, query, k, standardize):
    """Plain-python exhaustive neighbor scan used as an independent oracle."""
    train_X = [[float(v) for v in row] for row in train_X]
    query = [float(v) for v in query]
    n = len(train_y)
    d = len(train_X[0])
    if standardize:
        mean = [sum(row[j] for row in train_X) / n for j in range(d)]
        std = [
            math.sqrt(sum((row[j] - mean[j]) ** 2 for row in train_X) / n)
            for j in range(d)
        ]
    else:
        mean = [0.0] * d
        std = [1.0] * d

    def z(row):
        # zero-variance features carry no distance
        return [
            0.0 if std[j] == 0.0 else (row[j] - mean[j]) / std[j]
            for j in range(d)
        ]

    zq = z(query)
    scored = sorted(
        (math.sqrt(sum((a - b) ** 2 for a, b in zip(z(row), zq))), label)
        for row, label in zip(train_X, train_y)
    )
    k_eff = min(k, n)
    ones = sum(label for _, label in scored[:k_eff])
    if 2 * ones > k_eff:
        return 1
    if 2 * ones < k_eff:
        return 0
    return scored[0][1]


def test_gini_hand_values():
    assert gini((1, 1)) == 0.5
    assert gini((4, 0)) == 0.0
    assert gini((0, 7)) == 0.0
    assert gini((3, 1)) == 0.375
    with pytest.raises(EmptyNode):
        gini((0, 0))


# --- KNN ---


def test_knn_majority_vote_hand_case():
    clf = KnnClassifier(k=3, standardize=False)
    clf.fit([[0.0], [1.0], [2.0]], [1, 1, 0])
    assert clf.predict([[0.9]])[0] == 1


def test_knn_vote_tie_takes_nearest_label():
    clf = KnnClassifier(k=2, standardize=False)
    clf.fit([[0.0], [10.0]], [0, 1])
    assert clf.predict([[6.0]])[0] == 1
    assert clf.predict([[4.0]])[0] == 0


def test_knn_distance_tie_prefers_label_zero():
    clf = KnnClassifier(k=1, standardize=False)
    clf.fit([[1.0], [3.0]], [1, 0])
    assert clf.predict([[2.0]])[0] == 0


def test_knn_k_capped_at_training_size():
    X, y = [[0.0], [1.0], [2.0]], [0, 1, 1]
    big = KnnClassifier(k=7, standardize=False).fit(X, y)
    exact = KnnClassifier(k=3, standardize=False).fit(X, y)
    queries = [[v] for v in np.linspace(-1, 3, 17)]
    np.testing.assert_array_equal(big.predict(queries), exact.predict(queries))


def test_knn_matches_scan_oracle_raw_integer_grids(rng):
    # integer-valued points keep distances exactly representable, so ties
    # are exact and the oracle comparison is bit-robust
    for _ in range(60):
        n = int(rng.integers(3, 31))
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 8))
        X = rng.integers(0, 4, size=(n, d)).astype(float)
        y = rng.integers(0, 2, size=n).tolist()
        clf = KnnClassifier(k=k, standardize=False).fit(X, y)
        queries = rng.integers(0, 4, size=(8, d)).astype(float)
        got = clf.predict(queries)
        for q, g in zip(queries, got):
            assert g == knn_scan_oracle(X, y, q, k, standardize=False)


def test_knn_matches_scan_oracle_standardized(rng):
    for _ in range(40):
        n = int(rng.integers(4, 26))
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, 6))
        X = rng.normal(0, 3, size=(n, d))
        X[n // 2] = X[0]  # exact duplicate row forces a distance tie
        y = rng.integers(0, 2, size=n).tolist()
        clf = KnnClassifier(k=k, standardize=True).fit(X, y)
        queries = np.vstack([rng.normal(0, 3, size=(4, d)), X[0]])
        got = clf.predict(queries)
        for q, g in zip(queries, got):
            assert g == knn_scan_oracle(X, y, q, k, standardize=True)


def test_knn_standardized_is_affine_invariant(rng):
    X = rng.normal(0, 1, size=(20, 3))
    y = rng.integers(0, 2, size=20)
    queries = rng.normal(0, 1, size=(10, 3))
    base = KnnClassifier(k=3).fit(X, y).predict(queries)
    scaled_X = X.copy()
    scaled_q = queries.copy()
    scaled_X[:, 1] = -2.5 * scaled_X[:, 1] + 7.0
    scaled_q[:, 1] = -2.5 * scaled_q[:, 1] + 7.0
    again = KnnClassifier(k=3).fit(scaled_X, y).predict(scaled_q)
    np.testing.assert_array_equal(base, again)


def test_knn_zero_variance_column_is_ignored(rng):
    X = rng.normal(0, 1, size=(15, 2))
    y = rng.integers(0, 2, size=15)
    queries = rng.normal(0, 1, size=(6, 2))
    base = KnnClassifier(k=3).fit(X, y).predict(queries)
    padded_X = np.column_stack([X, np.full(15, 9.9)])
    padded_q = np.column_stack([queries, np.full(6, -123.0)])
    padded = KnnClassifier(k=3).fit(padded_X, y).predict(padded_q)
    np.testing.assert_array_equal(base, padded)


def test_knn_rejects_bad_k():
    with pytest.raises(ModelError):
        KnnClassifier(k=0).fit([[1.0]], [0])


# --- decision tree ---


def test_tree_threshold_is_midpoint():
    clf = DecisionTreeClassifier().fit([[1.0], [2.0]], [0, 1])
    assert clf.root_.feature == 0
    assert clf.root_.threshold == 1.5
    assert clf.predict([[1.49], [1.51]]).tolist() == [0, 1]


def test_tree_fits_separable_data(rng):
    X = np.vstack([rng.normal(-4, 0.5, size=(20, 2)), rng.normal(4, 0.5, size=(20, 2))])
    y = np.array([0] * 20 + [1] * 20)
    clf = DecisionTreeClassifier().fit(X, y)
    np.testing.assert_array_equal(clf.predict(X), y)


def test_tree_solves_xor_despite_zero_gain_root():
    # no single split improves Gini here; splitting must continue anyway
    X = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
    y = [0, 1, 1, 0]
    clf = DecisionTreeClassifier().fit(X, y)
    assert clf.predict(X).tolist() == y


def test_tree_training_accuracy_monotone_in_depth(rng):
    X = rng.normal(0, 1, size=(40, 3))
    y = rng.integers(0, 2, size=40)
    accs = []
    for depth in (0, 1, 2, 4, 8, None):
        clf = DecisionTreeClassifier(max_depth=depth).fit(X, y)
        accs.append(float((clf.predict(X) == y).mean()))
    assert accs == sorted(accs)
    assert accs[-1] == 1.0  # continuous features rarely collide


def test_tree_split_tie_takes_lowest_feature_index():
    X = [[0.0, 0.0], [1.0, 1.0]]  # identical columns
    clf = DecisionTreeClassifier().fit(X, [0, 1])
    assert clf.root_.feature == 0


def test_tree_depth_zero_is_majority_stump():
    clf = DecisionTreeClassifier(max_depth=0).fit([[1.0], [2.0], [3.0]], [0, 1, 1])
    assert clf.predict([[0.0], [9.0]]).tolist() == [1, 1]
    tie = DecisionTreeClassifier(max_depth=0).fit([[1.0], [2.0]], [0, 1])
    assert tie.predict([[5.0]])[0] == 0


def test_tree_min_leaf_blocks_tiny_splits():
    clf = DecisionTreeClassifier(min_leaf=2).fit([[1.0], [2.0], [3.0]], [0, 0, 1])
    assert clf.root_.is_leaf()
    assert clf.predict([[3.0]])[0] == 0


def test_tree_single_class_predicts_that_class():
    for estimator in (
        KnnClassifier(),
        DecisionTreeClassifier(),
        RandomForestClassifier(n_trees=5, seed=1),
    ):
        estimator.fit([[0.0], [1.0], [2.0]], [1, 1, 1])
        assert estimator.predict([[-5.0], [5.0]]).tolist() == [1, 1]


# --- random forest ---


def test_forest_single_plain_tree_equals_decision_tree(rng):
    X = rng.normal(0, 1, size=(30, 4))
    y = rng.integers(0, 2, size=30)
    queries = rng.normal(0, 1, size=(20, 4))
    tree = DecisionTreeClassifier().fit(X, y)
    forest_all = RandomForestClassifier(
        n_trees=1, features_per_split=4, bootstrap=False, seed=123
    ).fit(X, y)
    np.testing.assert_array_equal(tree.predict(X), forest_all.predict(X))
    np.testing.assert_array_equal(tree.predict(queries), forest_all.predict(queries))


def test_forest_is_deterministic_per_seed(rng):
    X = rng.normal(0, 1, size=(25, 3))
    y = rng.integers(0, 2, size=25)
    a = RandomForestClassifier(n_trees=10, seed=7).fit(X, y)
    b = RandomForestClassifier(n_trees=10, seed=7).fit(X, y)
    queries = rng.normal(0, 1, size=(30, 3))
    np.testing.assert_array_equal(a.predict(queries), b.predict(queries))


def test_forest_seed_changes_fitted_trees(rng):
    X = rng.normal(0, 1, size=(25, 3))
    y = rng.integers(0, 2, size=25)
    names = ("a", "b", "c")
    rows = [({n: v for n, v in zip(names, row)}, int(label)) for row, label in zip(X, y)]
    spec = ModelSpec(kind="random_forest", forest_n_trees=10, seed=1)
    a = model_to_json(fit(spec, rows))
    b = model_to_json(fit(spec.with_seed(2), rows))
    assert a != b


def test_forest_rejects_bad_feature_count(rng):
    X = rng.normal(0, 1, size=(10, 3))
    y = rng.integers(0, 2, size=10)
    with pytest.raises(ModelError):
        RandomForestClassifier(features_per_split=0).fit(X, y)
    with pytest.raises(ModelError):
        RandomForestClassifier(features_per_split=4).fit(X, y)


# --- spec / trained model / serialization ---


def test_model_spec_validation():
    with pytest.raises(ModelError):
        ModelSpec(kind="svm")
    with pytest.raises(ModelError):
        ModelSpec(kind="knn", knn_k=0)
    with pytest.raises(ModelError):
        ModelSpec(kind="random_forest", forest_n_trees=0)
    with pytest.raises(ModelError):
        ModelSpec(kind="decision_tree", tree_min_leaf=0)


def test_model_spec_dict_round_trip():
    spec = ModelSpec(kind="random_forest", forest_features_per_split=3,
                     forest_bootstrap=False, seed=42)
    assert spec_from_dict(spec_to_dict(spec)) == spec


def test_fit_requires_consistent_feature_names():
    rows = [({"a": 1.0, "b": 2.0}, 0), ({"a": 1.0, "c": 2.0}, 1)]
    with pytest.raises(FeatureNameMismatch):
        fit(ModelSpec(kind="knn"), rows)
    with pytest.raises(EmptyTrainingSet):
        fit(ModelSpec(kind="knn"), [])


def test_fit_rejects_non_binary_labels():
    with pytest.raises(ModelError):
        fit(ModelSpec(kind="knn"), [({"a": 1.0}, 2)])


def test_trained_model_accepts_dicts_and_feature_vectors():
    rows = [(make_vector(width=1.0), 0), (make_vector(width=9.0), 1)]
    model = fit(ModelSpec(kind="knn", knn_k=1), rows)
    assert model.predict(make_vector(width=1.2)) == 0
    assert model.predict(make_vector(width=8.0).values) == 1
    with pytest.raises(FeatureNameMismatch):
        model.predict({"width": 1.0})
    with pytest.raises(FeatureNameMismatch):
        model.predict(3.5)


@pytest.mark.parametrize("kind", ["knn", "decision_tree", "random_forest"])
def test_model_json_round_trip_preserves_predictions(kind, rng):
    names = tuple("fghij")
    X = rng.normal(0, 2, size=(24, 5))
    y = rng.integers(0, 2, size=24)
    rows = [(dict(zip(names, row)), int(label)) for row, label in zip(X, y)]
    spec = ModelSpec(kind=kind, forest_n_trees=7, seed=11)
    model = fit(spec, rows)
    clone = model_from_json(model_to_json(model))
    assert clone.spec == spec
    assert clone.feature_names == names
    for _ in range(25):
        q = dict(zip(names, rng.normal(0, 2, size=5)))
        assert clone.predict(q) == model.predict(q)


def test_model_json_rejects_foreign_documents():
    with pytest.raises(ModelError):
        model_from_json('{"format": "something-else", "version": 1}')
    spec = ModelSpec(kind="knn")
    text = model_to_json(fit(spec, [({"a": 0.0}, 0), ({"a": 1.0}, 1)]))
    with pytest.raises(ModelError):
        model_from_json(text.replace('"version": 1', '"version": 99'))


def test_build_estimator_maps_spec_fields():
    est = build_estimator(ModelSpec(kind="knn", knn_k=5, standardize_features=False))
    assert est.k == 5 and est.standardize is False
    est = build_estimator(ModelSpec(kind="decision_tree", tree_max_depth=3))
    assert est.max_depth == 3
    est = build_estimator(ModelSpec(kind="random_forest", forest_n_trees=9, seed=4))
    assert est.n_trees == 9 and est.seed == 4
