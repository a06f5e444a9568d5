import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from humanal.errors import ConfigError, DegenerateTrainingSet, MaskMismatch
from humanal.features import FeatureMask, FeatureMatrix, FeatureVector, SLOTS
from humanal.zoo import (DEFAULT_POOL, KNN, AdaBoostStumps, Constant, DecisionTree, GaussianNB,
                         LogisticSGD, MajorityClass, RandomForest, constant_model, dumps_model,
                         fit, fit_or_constant, loads_model, predict, predict_proba, select_model,
                         spec_from_dict, spec_to_dict, stratified_folds)

from oracles import nearest_centroid_accuracy, separable_blobs


def noisy_blobs(seed, n=300, shift=1.2):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = rng.normal(size=(n, 3)) + shift * y[:, None]
    return X, y


def test_gaussian_nb_two_points_symmetric():
    X, y = np.array([[0.0], [10.0]]), np.array([0, 1])
    m = fit(GaussianNB(), X, y)
    assert predict_proba(m, np.array([[5.0]]))[0] == 0.5
    assert predict(m, np.array([[4.9], [5.1]])).tolist() == [0, 1]


def test_depth_one_tree_cannot_fit_xor():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 10, dtype=float)
    y = np.array([0, 1, 1, 0] * 10)
    m = fit(DecisionTree(max_depth=1, min_leaf=1), X, y)
    assert (predict(m, X) == y).mean() <= 0.75


def test_logistic_on_separable_blob_beats_floor():
    X, y = separable_blobs(3, n=200)
    Xt, yt = separable_blobs(4, n=400)
    assert nearest_centroid_accuracy(X, y, Xt, yt) >= 0.95
    assert (predict(fit(LogisticSGD(), X, y), Xt) == yt).mean() >= 0.95


def test_constant_model_outputs_label():
    m = constant_model(0, None, 3)
    assert set(predict_proba(m, np.zeros((5, 3))).tolist()) == {0.0}


def test_knn_unanimous_vote():
    X = np.array([[0.0], [0.1], [0.2], [5.0], [5.1]])
    y = np.array([1, 1, 1, 0, 0])
    m = fit(KNN(k=3), X, y)
    assert predict_proba(m, np.array([[0.05]]))[0] == 1.0


def test_knn_vote_includes_distance_ties():
    X = np.array([[-1.0], [1.0], [-2.0], [2.0]])
    y = np.array([1, 0, 1, 1])
    m = fit(KNN(k=1), X, y)
    assert predict_proba(m, np.array([[0.0]]))[0] == 0.5


def test_probabilities_in_unit_interval_and_threshold_monotone():
    X, y = noisy_blobs(0)
    for spec in DEFAULT_POOL:
        m = fit(spec, X, y)
        p = predict_proba(m, X)
        assert np.all((p >= 0) & (p <= 1)), spec.kind
        counts = [predict(m, X, t).sum() for t in (0.2, 0.5, 0.8)]
        assert counts == sorted(counts, reverse=True)


def test_mask_mismatch_rejected():
    mask = FeatureMask.of("Confidence")
    values = np.full((4, len(SLOTS)), np.nan)
    values[:, 1] = [0.1, 0.9, 0.2, 0.8]
    values[:, 2] = [0.8, 0.8, 0.6, 0.6]
    m = fit(GaussianNB(), FeatureMatrix(values, mask), [0, 1, 0, 1])
    assert predict(m, FeatureVector(values[1], mask)) == 1
    with pytest.raises(MaskMismatch):
        predict(m, FeatureVector(values[1], FeatureMask.of("Time")))
    with pytest.raises(MaskMismatch):
        predict(m, np.zeros((1, 5)))


def test_single_class_raises_then_falls_back():
    X, y = np.ones((6, 2)), np.ones(6, dtype=int)
    with pytest.raises(DegenerateTrainingSet):
        fit(DecisionTree(), X, y)
    m = fit_or_constant(DecisionTree(), X, y)
    assert m.kind == "constant" and m.fallback
    assert predict(m, X).tolist() == [1] * 6


def test_nan_imputed_with_training_means():
    X = np.array([[0.0, np.nan], [1.0, 2.0], [0.0, 4.0], [1.0, np.nan]])
    m = fit(GaussianNB(), X, np.array([0, 1, 0, 1]))
    assert m.impute_means.tolist() == [0.5, 3.0]


@pytest.mark.parametrize("spec", DEFAULT_POOL, ids=lambda s: s.kind)
def test_deterministic_given_seed(spec):
    X, y = noisy_blobs(1)
    a = predict_proba(fit(spec, X, y), X)
    b = predict_proba(fit(spec, X, y), X)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("spec", DEFAULT_POOL + (Constant(label=0), MajorityClass()),
                         ids=lambda s: s.kind)
def test_serialization_round_trip(spec):
    X, y = noisy_blobs(2)
    m = fit(spec, X, y)
    again = loads_model(dumps_model(m))
    assert again.spec == m.spec
    assert np.array_equal(predict_proba(again, X), predict_proba(m, X))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 8))
def test_single_tree_forest_is_a_decision_tree(seed, depth, min_leaf):
    X, y = noisy_blobs(seed, n=150)
    X = np.round(X, 1)  # create duplicate values and threshold ties
    tree = fit(DecisionTree(max_depth=depth, min_leaf=min_leaf, seed=seed), X, y)
    forest = fit(RandomForest(n_trees=1, max_depth=depth, min_leaf=min_leaf, feature_subsample=1.0,
                              seed=seed), X, y)
    assert np.array_equal(predict_proba(tree, X), predict_proba(forest, X))


# ---- selection


def test_constant_pool_picks_base_rate():
    y = np.array([1] * 70 + [0] * 30)
    X = np.zeros((100, 1))
    rep = select_model([Constant(label=0), Constant(label=1)], X, y)
    assert rep.chosen == Constant(label=1)
    assert rep.scores[1] == pytest.approx(0.7)


def test_single_spec_is_chosen():
    X, y = noisy_blobs(5)
    rep = select_model([GaussianNB()], X, y)
    assert rep.chosen_index == 0 and rep.model.kind == "gaussian_nb"


def test_winner_recomputed_from_folds():
    X, y = noisy_blobs(6, shift=0.8)
    specs = [KNN(k=1), GaussianNB()]
    rep = select_model(specs, X, y, folds=5, seed=11)
    fold = stratified_folds(y, 5, 11)
    expected = []
    for spec in specs:
        accs = [(predict(fit(spec, X[fold != f], y[fold != f]), X[fold == f]) == y[fold == f]).mean()
                for f in range(5)]
        expected.append(np.mean(accs))
    assert rep.scores == pytest.approx(tuple(expected))
    assert rep.scores[rep.chosen_index] == max(rep.scores)


def test_tie_goes_to_first_spec():
    X, y = np.zeros((20, 1)), np.array([1] * 12 + [0] * 8)
    rep = select_model([MajorityClass(), Constant(label=1)], X, y)
    assert rep.chosen_index == 0


def test_rare_class_fallbacks():
    X = np.arange(12, dtype=float)[:, None]
    y = np.array([0] * 9 + [1] * 3)
    rep = select_model([GaussianNB()], X, y, folds=5)
    assert rep.folds == 2 and "2" in rep.fallback
    y = np.array([0] * 11 + [1])
    rep = select_model([GaussianNB()], X, y, folds=5)
    assert rep.folds == 0 and "training accuracy" in rep.fallback


def test_stratified_folds_balance():
    y = np.array([0] * 50 + [1] * 25)
    fold = stratified_folds(y, 5, 0)
    for f in range(5):
        assert (y[fold == f] == 1).sum() == 5 and (y[fold == f] == 0).sum() == 10


# ---- specs


def test_spec_validation():
    with pytest.raises(ConfigError):
        fit(KNN(k=0), np.zeros((2, 1)), [0, 1])
    with pytest.raises(ConfigError):
        RandomForest(feature_subsample=1.5).validate()
    with pytest.raises(ConfigError):
        spec_from_dict({"kind": "svm"})
    with pytest.raises(ConfigError):
        spec_from_dict({"kind": "knn", "neighbours": 3})


def test_spec_dict_round_trip():
    for spec in DEFAULT_POOL + (AdaBoostStumps(n_rounds=5, seed=3),):
        assert spec_from_dict(spec_to_dict(spec)) == spec
