#  This file is part of ensembleinfo.
#
#  ensembleinfo is free software: you can redistribute it and/or modify it
#  under the terms of the GNU General Public License as published by the Free
#  Software Foundation, either version 3 of the License, or (at your option)
#  any later version.
#
#  ensembleinfo is distributed in the hope that it will be useful, but WITHOUT
#  ANY WARRANTY; without even the implied warranty of MERCHANTABILITY or
#  FITNESS FOR A PARTICULAR PURPOSE.
#
#  See the GNU General Public License at <http://www.gnu.org/licenses/gpl.html>
#  for more details.

"""Combination functions mapping the model columns of a table to one label.

Ties between labels are always broken towards the smallest label.
"""
import logging
from dataclasses import dataclass
from math import log2
from typing import Optional

import numpy as np
from scipy.special import expit
from typing_extensions import Literal

from ensembleinfo.infoconfig import DEFAULT_C_GRID, StackingConfig

RAW_BINARY = "RawBinary"
ONE_HOT = "OneHot"

GRADIENT_TOLERANCE = 1e-6
MAX_ITERATIONS = 1000


def majority_vote(table):
    counts = np.stack(
        [(table.model_labels == label).sum(axis=0) for label in range(table.ymax)]
    )
    return np.argmax(counts, axis=0)


def weighted_vote(table, weights):
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (table.n_models,):
        raise IndexError(
            "Need one weight per model, expected %d, got %d"
            % (table.n_models, weights.size)
        )
    if weights.min() < 0:
        raise ValueError(f"Vote weights must be non-negative: {weights.tolist()}")
    if not weights.any():
        raise ValueError("At least one vote weight must be positive")
    if np.all(weights == weights[0]):
        return majority_vote(table)
    scores = np.stack(
        [weights @ (table.model_labels == label) for label in range(table.ymax)]
    )
    return np.argmax(scores, axis=0)


def accuracy_weights(table):
    """log2((1 - e_i) / e_i) per model, clipped at 0.

    e_i is the observed error rate clamped to [1/(2M), 1 - 1/(2M)].  When no
    model beats chance every model gets weight 1.
    """
    m = table.n_instances
    errors = np.mean(table.model_labels != table.truth, axis=1)
    errors = np.clip(errors, 1.0 / (2 * m), 1.0 - 1.0 / (2 * m))
    weights = [max(0.0, log2((1.0 - e) / e)) for e in errors]
    if not any(weights):
        logging.warning("No model beats chance, falling back to uniform vote weights")
        return [1.0] * table.n_models
    return weights


def best_model_index(table):
    errors = np.mean(table.model_labels != table.truth, axis=1)
    return int(np.argmin(errors))


def best_model(table):
    """The predictions of the single most accurate model, first on ties."""
    return np.array(table.model_labels[best_model_index(table)])


@dataclass(frozen=True)
class FoldPlan:
    assignments: np.ndarray
    n_folds: int
    seed: int

    def held_out(self, fold):
        return np.flatnonzero(self.assignments == fold)

    def training(self, fold):
        return np.flatnonzero(self.assignments != fold)

    def sizes(self):
        return np.bincount(self.assignments, minlength=self.n_folds).tolist()

    def __len__(self):
        return len(self.assignments)


def make_fold_plan(m, folds, seed, stream=()):
    """Balanced, shuffled fold assignment, fully determined by (seed, stream)."""
    if folds < 2:
        raise ValueError(f"Need at least 2 folds, not {folds}")
    if m < folds:
        raise ValueError(f"Cannot split {m} instances into {folds} folds")
    bitgen = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(7,) + tuple(stream)))
    order = np.random.Generator(bitgen).permutation(m)
    assignments = np.empty(m, dtype=np.int64)
    assignments[order] = np.arange(m) % folds
    return FoldPlan(assignments, folds, seed)


@dataclass(frozen=True)
class MetaEstimator:
    """Per-class sigmoid scores l_c = intercepts[c] + weights[c] . x."""

    intercepts: np.ndarray
    weights: np.ndarray
    feature_encoding: Literal["RawBinary", "OneHot"]
    c_reg: float
    ymax: int
    n_models: int
    degenerate: bool = False

    def __post_init__(self):
        if self.c_reg <= 0:
            raise ValueError(f"c_reg must be positive, not {self.c_reg}")
        features = self.n_models * (self.ymax if self.feature_encoding == ONE_HOT else 1)
        if self.weights.shape != (self.ymax, features) or self.intercepts.shape != (
            self.ymax,
        ):
            raise IndexError(
                f"Estimator shapes {self.intercepts.shape}/{self.weights.shape} "
                f"do not match {self.ymax} classes and {features} features"
            )


def encode_features(features, ymax, encoding):
    features = np.atleast_2d(np.asarray(features, dtype=np.int64))
    if encoding == RAW_BINARY:
        if features.size and features.max() > 1:
            raise ValueError("RawBinary encoding needs 0/1 model labels")
        return features.astype(float)
    if encoding == ONE_HOT:
        m, n = features.shape
        encoded = np.zeros((m, n * ymax))
        encoded[np.arange(m)[:, None], np.arange(n) * ymax + features] = 1.0
        return encoded
    raise ValueError(f"Unknown feature encoding {encoding!r}")


def _objective(x, target, counts, w, b, penalty):
    z = x @ w + b
    loss = counts @ np.logaddexp(0.0, np.where(target, -z, z)) / counts.sum()
    return loss + 0.5 * penalty * (w @ w)


def _gradient(x, target, counts, w, b, penalty):
    residual = counts * (expit(x @ w + b) - target) / counts.sum()
    return x.T @ residual + penalty * w, residual.sum()


def _fit_binary(x, target, counts, c_reg):
    """L2-regularized logistic regression by gradient descent with
    backtracking, starting from zero.  The intercept is not penalized.
    """
    penalty = 1.0 / (c_reg * counts.sum())
    w = np.zeros(x.shape[1])
    b = 0.0
    step = 1.0
    loss = _objective(x, target, counts, w, b, penalty)
    for _ in range(MAX_ITERATIONS):
        grad_w, grad_b = _gradient(x, target, counts, w, b, penalty)
        norm2 = grad_w @ grad_w + grad_b * grad_b
        if np.sqrt(norm2) <= GRADIENT_TOLERANCE:
            break
        step = min(step * 2.0, 1e3)
        while True:
            new_w, new_b = w - step * grad_w, b - step * grad_b
            new_loss = _objective(x, target, counts, new_w, new_b, penalty)
            if new_loss <= loss - 0.5 * step * norm2 or step < 1e-12:
                break
            step *= 0.5
        w, b, loss = new_w, new_b, new_loss
    return w, b


def train_logreg(features, labels, ymax, c_reg, encoding=None):
    """Fits per-class logistic scores on model-label features.

    Binary tasks fit one class-1 score and give class 0 its negation;
    otherwise one-vs-rest per class.  Single-class labels give a constant
    predictor flagged as degenerate.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.int64))
    labels = np.asarray(labels, dtype=np.int64)
    ymax = max(int(ymax), 2)
    if len(features) != len(labels):
        raise IndexError(
            "features have %d rows but %d labels were given" % (len(features), len(labels))
        )
    if labels.size == 0:
        raise ValueError("Cannot train on zero instances")
    if labels.min() < 0 or labels.max() >= ymax:
        raise ValueError(f"labels must lie in [0, {ymax})")
    if c_reg <= 0:
        raise ValueError(f"c_reg must be positive, not {c_reg}")
    if encoding is None:
        encoding = RAW_BINARY if ymax == 2 else ONE_HOT
    n_models = features.shape[1]
    n_features = n_models * (ymax if encoding == ONE_HOT else 1)

    present = np.unique(labels)
    if len(present) == 1:
        logging.warning(
            "Meta-estimator trained on single-class labels (%d), predicting it constantly",
            present[0],
        )
        intercepts = np.full(ymax, -1.0)
        intercepts[present[0]] = 1.0
        return MetaEstimator(
            intercepts, np.zeros((ymax, n_features)), encoding, c_reg, ymax, n_models, True
        )

    rows, counts = np.unique(
        np.column_stack([features, labels]), axis=0, return_counts=True
    )
    x = encode_features(rows[:, :-1], ymax, encoding)
    y = rows[:, -1]
    counts = counts.astype(float)

    intercepts = np.zeros(ymax)
    weights = np.zeros((ymax, n_features))
    if ymax == 2:
        w, b = _fit_binary(x, (y == 1).astype(float), counts, c_reg)
        weights[1], intercepts[1] = w, b
        weights[0], intercepts[0] = -w, -b
    else:
        for label in range(ymax):
            w, b = _fit_binary(x, (y == label).astype(float), counts, c_reg)
            weights[label], intercepts[label] = w, b
    return MetaEstimator(intercepts, weights, encoding, c_reg, ymax, n_models)


def predict_many(est, features):
    features = np.atleast_2d(np.asarray(features, dtype=np.int64))
    if features.shape[1] != est.n_models:
        raise IndexError(
            "estimator expects %d model columns, got %d" % (est.n_models, features.shape[1])
        )
    x = encode_features(features, est.ymax, est.feature_encoding)
    return np.argmax(expit(x @ est.weights.T + est.intercepts), axis=1)


def predict_logreg(est, row):
    return int(predict_many(est, [row])[0])


def select_c(features, labels, ymax, c_grid, inner_folds, seed, fold=0):
    """The C with the most correct inner-CV predictions, first on ties."""
    folds = min(inner_folds, len(labels))
    plan = make_fold_plan(len(labels), folds, seed, stream=(fold,))
    best_c, best_correct = None, -1
    for c_reg in c_grid:
        correct = 0
        for inner in range(folds):
            train, test = plan.training(inner), plan.held_out(inner)
            est = train_logreg(features[train], labels[train], ymax, c_reg)
            correct += int(np.sum(predict_many(est, features[test]) == labels[test]))
        if correct > best_correct:
            best_c, best_correct = c_reg, correct
    return best_c


def stacking_combine(table, meta_folds=4, c_grid=None, inner_folds=5, seed=0):
    """Out-of-fold logistic-regression stacking.

    Each outer fold is predicted by an estimator trained on the other folds
    only, with C picked by inner cross validation on those same folds.
    """
    c_grid = list(DEFAULT_C_GRID if c_grid is None else c_grid)
    m = table.n_instances
    if m < 2 * meta_folds:
        raise ValueError(
            f"Stacking with {meta_folds} folds needs at least {2 * meta_folds} instances, got {m}"
        )
    features = table.model_labels.T
    labels = table.truth
    ymax = max(table.ymax, 2)
    plan = make_fold_plan(m, meta_folds, seed)
    combined = np.empty(m, dtype=np.int64)
    for fold in range(meta_folds):
        train, test = plan.training(fold), plan.held_out(fold)
        c_reg = select_c(features[train], labels[train], ymax, c_grid, inner_folds, seed, fold)
        est = train_logreg(features[train], labels[train], ymax, c_reg)
        combined[test] = predict_many(est, features[test])
        logging.info(
            "Stacking fold %d/%d: C=%g, %d held out", fold + 1, meta_folds, c_reg, len(test)
        )
    return combined


def group_weight(est, groups):
    """Sum of |class-1 weight| per group of models, in first-seen order."""
    if est.ymax != 2 or est.feature_encoding != RAW_BINARY:
        raise ValueError("Group weights need a binary RawBinary meta-estimator")
    groups = list(groups)
    if len(groups) != est.n_models:
        raise IndexError(
            "Need one group id per model, expected %d, got %d" % (est.n_models, len(groups))
        )
    totals = {}
    for group, weight in zip(groups, np.abs(est.weights[1])):
        totals[group] = totals.get(group, 0.0) + float(weight)
    return totals


def combine(table, method, weights=None, stacking: Optional[StackingConfig] = None):
    """Applies a named combiner and returns the table with its combined column."""
    if method == "vote":
        combined = majority_vote(table)
    elif method == "weighted-vote":
        combined = weighted_vote(
            table, accuracy_weights(table) if weights is None else weights
        )
    elif method == "stacking":
        stacking = stacking or StackingConfig()
        combined = stacking_combine(
            table,
            meta_folds=stacking.meta_folds,
            c_grid=stacking.c_grid,
            inner_folds=stacking.inner_folds,
            seed=stacking.seed,
        )
    elif method == "best-model":
        combined = best_model(table)
    else:
        raise ValueError(f"Unknown combination method {method!r}")
    return table.with_combined(combined)
