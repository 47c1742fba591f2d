import numpy as np
import pytest

from ensembleinfo import PredictionTable, SynthConfig, synth_system
from ensembleinfo.combiners import (
    ONE_HOT,
    RAW_BINARY,
    MetaEstimator,
    accuracy_weights,
    best_model,
    best_model_index,
    combine,
    encode_features,
    group_weight,
    majority_vote,
    make_fold_plan,
    predict_logreg,
    predict_many,
    stacking_combine,
    train_logreg,
    weighted_vote,
)
from ensembleinfo.infoconfig import StackingConfig
from ensembleinfo.synth import toy_table

SMALL_GRID = [0.1, 1.0]


@pytest.fixture(scope="module")
def one_strong_model():
    return synth_system(
        SynthConfig(
            n_models=5,
            n_instances=2000,
            per_model_error=[0.05, 0.35, 0.35, 0.35, 0.35],
            seed=10,
        )
    )


@pytest.fixture(scope="module")
def three_models():
    return synth_system(
        SynthConfig(
            n_models=3, n_instances=200, per_model_error=[0.05, 0.2, 0.4], seed=4
        )
    )


def test_vote_ties_go_to_smallest_label():
    table = PredictionTable([[0, 1, 2], [1, 2, 0]], [0, 0, 0], 3)
    assert majority_vote(table).tolist() == [0, 1, 0]


def test_vote_reproduces_toy_b():
    combined = majority_vote(toy_table("B").table)
    assert combined[:6].tolist() == [1, 1, 1, 1, 0, 0]


def test_uniform_weights_equal_vote(three_models):
    assert np.array_equal(weighted_vote(three_models, [2.0, 2.0, 2.0]), majority_vote(three_models))


def test_weighted_vote_follows_heavy_model(three_models):
    combined = weighted_vote(three_models, [5.0, 1.0, 1.0])
    assert np.array_equal(combined, three_models.model_labels[0])


@pytest.mark.parametrize(
    "weights, error",
    [([1.0, 1.0], IndexError), ([1.0, -1.0, 1.0], ValueError), ([0.0, 0.0, 0.0], ValueError)],
)
def test_weighted_vote_rejects(three_models, weights, error):
    with pytest.raises(error):
        weighted_vote(three_models, weights)


def test_accuracy_weights_order(three_models):
    weights = accuracy_weights(three_models)
    assert weights[0] > weights[1] > weights[2] > 0.0


def test_accuracy_weights_fall_back_to_uniform(caplog):
    table = PredictionTable([[1, 0, 1, 0], [0, 1, 0, 1]], [1, 1, 0, 0], 2)
    assert accuracy_weights(table) == [1.0, 1.0]
    assert "uniform" in caplog.text


def test_best_model_first_on_ties():
    table = PredictionTable([[1, 1, 0, 0], [1, 0, 0, 0], [1, 1, 0, 0]], [1, 1, 0, 0], 2)
    assert best_model_index(table) == 0
    assert best_model(table).tolist() == [1, 1, 0, 0]


def test_fold_plan_is_balanced_and_seeded():
    plan = make_fold_plan(10, 4, seed=3)
    assert sorted(plan.sizes()) == [2, 2, 3, 3]
    assert len(plan) == 10
    again = make_fold_plan(10, 4, seed=3)
    assert np.array_equal(plan.assignments, again.assignments)
    other = make_fold_plan(10, 4, seed=3, stream=(1,))
    assert not np.array_equal(plan.assignments, other.assignments)
    for fold in range(4):
        held_out = set(plan.held_out(fold).tolist())
        assert held_out.isdisjoint(plan.training(fold).tolist())
        assert len(held_out) + len(plan.training(fold)) == 10


@pytest.mark.parametrize("m, folds", [(3, 4), (10, 1)])
def test_fold_plan_rejects(m, folds):
    with pytest.raises(ValueError):
        make_fold_plan(m, folds, seed=0)


def test_encode_features():
    assert encode_features([[0, 1]], 2, RAW_BINARY).tolist() == [[0.0, 1.0]]
    assert encode_features([[2, 0]], 3, ONE_HOT).tolist() == [[0, 0, 1, 1, 0, 0]]
    with pytest.raises(ValueError):
        encode_features([[2, 0]], 3, RAW_BINARY)


def test_logreg_learns_copied_label():
    features = np.array([[0, 1], [1, 0], [0, 0], [1, 1]] * 10)
    labels = features[:, 0]
    est = train_logreg(features, labels, 2, 1.0)
    assert not est.degenerate
    assert est.feature_encoding == RAW_BINARY
    assert predict_many(est, features).tolist() == labels.tolist()
    assert np.allclose(est.weights[0], -est.weights[1])
    assert predict_logreg(est, [1, 0]) == 1


def test_logreg_multiclass_one_hot():
    features = np.array([[0, 1], [1, 2], [2, 0]] * 8)
    labels = features[:, 0]
    est = train_logreg(features, labels, 3, 1.0)
    assert est.feature_encoding == ONE_HOT
    assert est.weights.shape == (3, 6)
    assert predict_many(est, features).tolist() == labels.tolist()


def test_logreg_single_class_is_degenerate(caplog):
    est = train_logreg([[0, 1], [1, 1]], [1, 1], 2, 1.0)
    assert est.degenerate
    assert predict_many(est, [[0, 0], [1, 1]]).tolist() == [1, 1]
    assert "single-class" in caplog.text


@pytest.mark.parametrize("ones", [1, 3])
def test_logreg_uninformative_features_learn_prior(ones):
    cells = [[0, 0], [0, 1], [1, 0], [1, 1]] * 4
    features = np.repeat(cells, ones + 1, axis=0)
    labels = np.tile([0] + [1] * ones, len(cells))
    est = train_logreg(features, labels, 2, 1.0)
    assert np.allclose(est.weights, 0.0, atol=1e-3)
    assert est.intercepts[1] == pytest.approx(np.log(ones), abs=1e-3)


def penalized_loss(x, labels, w, b, c_reg):
    z = w @ x.T + np.asarray(b)[..., None]
    loss = np.logaddexp(0.0, np.where(labels == 1, -z, z)).mean(axis=-1)
    return loss + (w * w).sum(axis=-1) / (2.0 * c_reg * len(labels))


def test_logreg_not_beaten_by_grid_search():
    rng = np.random.default_rng(21)
    features = rng.integers(0, 2, size=(60, 2))
    labels = np.where(rng.random(60) < 0.8, features[:, 0], 1 - features[:, 0])
    est = train_logreg(features, labels, 2, 1.0)
    x = features.astype(float)

    axis = np.linspace(-4.0, 4.0, 41)
    w1, w2, b = (g.ravel() for g in np.meshgrid(axis, axis, axis))
    grid_w = np.stack([w1, w2], axis=1)
    grid = penalized_loss(x, labels, grid_w, b, 1.0)
    assert penalized_loss(x, labels, est.weights[1], est.intercepts[1], 1.0) <= grid.min() + 1e-4


@pytest.mark.parametrize(
    "features, labels, c_reg, error",
    [
        ([[0], [1]], [0], 1.0, IndexError),
        ([[0], [1]], [0, 2], 1.0, ValueError),
        ([[0], [1]], [0, 1], 0.0, ValueError),
    ],
)
def test_logreg_rejects(features, labels, c_reg, error):
    with pytest.raises(error):
        train_logreg(features, labels, 2, c_reg)


def test_predict_wrong_width():
    est = train_logreg([[0, 1], [1, 0]], [0, 1], 2, 1.0)
    with pytest.raises(IndexError):
        predict_many(est, [[0, 1, 1]])


def test_stacking_on_separable_table():
    truth = [0, 1] * 20
    table = PredictionTable([truth, truth], truth, 2)
    combined = stacking_combine(table, meta_folds=4, c_grid=SMALL_GRID, inner_folds=3)
    assert combined.tolist() == truth


def test_stacking_is_deterministic(three_models):
    first = stacking_combine(three_models, c_grid=SMALL_GRID, seed=7)
    second = stacking_combine(three_models, c_grid=SMALL_GRID, seed=7)
    assert np.array_equal(first, second)


def test_stacking_does_not_leak_labels(three_models):
    """Held-out predictions must not change when held-out labels change."""
    meta_folds, seed = 4, 1
    plan = make_fold_plan(three_models.n_instances, meta_folds, seed)
    held_out = plan.held_out(0)
    truth = three_models.truth.copy()
    truth[held_out] = 1 - truth[held_out]
    relabelled = PredictionTable(three_models.model_labels, truth, 2)
    original = stacking_combine(three_models, meta_folds, SMALL_GRID, 3, seed)
    changed = stacking_combine(relabelled, meta_folds, SMALL_GRID, 3, seed)
    assert np.array_equal(original[held_out], changed[held_out])


def test_stacking_beats_vote_with_one_strong_model(one_strong_model):
    stacked = combine(
        one_strong_model, "stacking", stacking=StackingConfig(c_grid=SMALL_GRID)
    )
    voted = combine(one_strong_model, "vote")
    assert stacked.error_rate() <= voted.error_rate()


def test_stacking_needs_enough_instances():
    table = PredictionTable([[0, 1, 0, 1, 0]], [0, 1, 0, 1, 0], 2)
    with pytest.raises(ValueError):
        stacking_combine(table, meta_folds=4)


def test_group_weight():
    est = MetaEstimator(
        np.zeros(2), np.array([[-1.0, 2.0, -3.0], [1.0, -2.0, 3.0]]), RAW_BINARY, 1.0, 2, 3
    )
    weights = group_weight(est, ["b", "a", "b"])
    assert list(weights) == ["b", "a"]
    assert weights == {"b": 4.0, "a": 2.0}
    with pytest.raises(IndexError):
        group_weight(est, ["a"])


def test_group_weight_needs_binary():
    est = MetaEstimator(np.zeros(3), np.zeros((3, 6)), ONE_HOT, 1.0, 3, 2)
    with pytest.raises(ValueError):
        group_weight(est, ["a", "b"])


def test_meta_estimator_shape_check():
    with pytest.raises(IndexError):
        MetaEstimator(np.zeros(2), np.zeros((2, 4)), RAW_BINARY, 1.0, 2, 3)


@pytest.mark.parametrize("method", ["vote", "weighted-vote", "stacking", "best-model"])
def test_combine_adds_column(three_models, method):
    table = combine(three_models, method, stacking=StackingConfig(c_grid=SMALL_GRID))
    assert table.has_combined()
    assert not three_models.has_combined()
    assert 0.0 <= table.error_rate() <= 1.0


def test_combine_unknown_method(three_models):
    with pytest.raises(ValueError):
        combine(three_models, "median")
