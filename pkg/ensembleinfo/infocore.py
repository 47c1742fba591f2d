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

"""Plug-in estimates of discrete information quantities, all in bits.

Distributions are the observed label frequencies of selected columns of a
PredictionTable, kept sparse: only tuples that occur are stored.
"""
from dataclasses import dataclass

import numpy as np

from typing_extensions import Literal


@dataclass(frozen=True, order=True)
class Selector:
    """Names one column of a PredictionTable."""

    kind: Literal["combined", "model", "truth"]
    index: int = 0

    def __str__(self):
        if self.kind == "model":
            return f"O{self.index + 1}"
        return "Y" if self.kind == "truth" else "Yhat"


TRUTH = Selector("truth")
COMBINED = Selector("combined")


def model(index):
    return Selector("model", index)


def models(indices):
    return [model(i) for i in indices]


def column(table, selector):
    if selector.kind == "truth":
        return table.truth
    if selector.kind == "combined":
        if not table.has_combined():
            raise KeyError("Combined column requested but the table has none")
        return table.combined
    if selector.kind == "model":
        if not 0 <= selector.index < table.n_models:
            raise IndexError(
                "model index out of range, 0 <= idx < %d, got %d"
                % (table.n_models, selector.index)
            )
        return table.model_labels[selector.index]
    raise ValueError(f"Unknown selector kind {selector.kind!r}")


def _unique_rows(rows, base, weights=None):
    """Distinct rows of a 2-d label array with their (weighted) counts."""
    n_rows, arity = rows.shape
    if base ** arity < 2 ** 62:
        codes = np.zeros(n_rows, dtype=np.int64)
        for j in range(arity):
            codes = codes * base + rows[:, j]
        uniq, inverse = np.unique(codes, return_inverse=True)
        # decoded by hand, np.unravel_index caps arity at 32 on numpy 1.x
        powers = np.int64(base) ** np.arange(arity - 1, -1, -1, dtype=np.int64)
        keys = (uniq[:, None] // powers) % base
    else:
        keys, inverse = np.unique(rows, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    if weights is None:
        counts = np.bincount(inverse, minlength=len(keys))
    else:
        counts = np.bincount(inverse, weights=weights, minlength=len(keys))
        counts = np.rint(counts).astype(np.int64)
    return keys.astype(np.int64), counts.astype(np.int64)


class EmpiricalDistribution:
    """Normalised frequency counts over tuples of discrete variables.

    keys holds one observed tuple per row, counts the number of samples
    showing it.  Zero-count tuples are never stored.
    """

    def __init__(self, keys, counts, sample_count=None):
        keys = np.array(keys, dtype=np.int64)
        counts = np.array(counts, dtype=np.int64)
        if keys.ndim != 2 or keys.shape[1] < 1:
            raise ValueError("A distribution needs arity >= 1")
        if len(keys) != len(counts) or len(keys) == 0:
            raise ValueError("Need one positive count per support tuple")
        if counts.min() <= 0:
            raise ValueError("Zero-count tuples must be absent from the support")
        total = int(counts.sum())
        if sample_count is None:
            sample_count = total
        if total != sample_count:
            raise ValueError(
                "Counts sum to %d, expected sample_count %d" % (total, sample_count)
            )
        keys.setflags(write=False)
        counts.setflags(write=False)
        self._keys = keys
        self._counts = counts
        self._sample_count = int(sample_count)

    @classmethod
    def from_counts(cls, counts):
        """From a mapping of label tuple to count."""
        items = sorted((tuple(k), int(c)) for k, c in counts.items() if c > 0)
        return cls([k for k, _ in items], [c for _, c in items])

    @classmethod
    def from_samples(cls, samples):
        """From an M x L array of observed tuples."""
        samples = np.atleast_2d(np.asarray(samples, dtype=np.int64))
        base = int(samples.max()) + 1
        keys, counts = _unique_rows(samples, max(base, 2))
        return cls(keys, counts, samples.shape[0])

    @property
    def arity(self):
        return self._keys.shape[1]

    @property
    def sample_count(self):
        return self._sample_count

    @property
    def keys(self):
        return self._keys

    @property
    def counts(self):
        return self._counts

    @property
    def probabilities(self):
        return self._counts / self._sample_count

    @property
    def support(self):
        return {
            tuple(k): c / self._sample_count
            for k, c in zip(self._keys.tolist(), self._counts.tolist())
        }

    def marginal(self, positions):
        """The distribution of the variables at the given positions, in order."""
        positions = _check_positions(self, positions)
        if not positions:
            raise ValueError("A marginal needs at least one position")
        sub = self._keys[:, positions]
        base = max(int(sub.max()) + 1, 2)
        keys, counts = _unique_rows(sub, base, weights=self._counts)
        return EmpiricalDistribution(keys, counts, self._sample_count)

    def __len__(self):
        return len(self._counts)

    def __repr__(self):
        return "EmpiricalDistribution(arity=%d, support=%d, M=%d)" % (
            self.arity,
            len(self),
            self._sample_count,
        )


def _check_positions(dist, positions):
    positions = [int(p) for p in positions]
    for p in positions:
        if not 0 <= p < dist.arity:
            raise IndexError(
                "position out of range, 0 <= pos < %d, got %d" % (dist.arity, p)
            )
    if len(set(positions)) != len(positions):
        raise ValueError(f"Repeated position in {positions}")
    return positions


def _disjoint(dist, first, second):
    first = _check_positions(dist, first)
    second = _check_positions(dist, second)
    overlap = set(first) & set(second)
    if overlap:
        raise ValueError(f"Position sets overlap in {sorted(overlap)}")
    return first, second


def estimate_joint(table, selectors):
    """Joint observed-frequency distribution of the selected columns."""
    selectors = list(selectors)
    if not selectors:
        raise ValueError("Need at least one variable selector")
    rows = np.stack([column(table, s) for s in selectors], axis=1)
    keys, counts = _unique_rows(rows, max(table.ymax, 2))
    return EmpiricalDistribution(keys, counts, table.n_instances)


def entropy(dist):
    """-sum p log2 p.  Probabilities are summed in sorted order, so equal
    multisets of counts give bit-identical entropies.
    """
    p = np.sort(dist.probabilities)
    h = float(-np.sum(p * np.log2(p)))
    return h if h > 0.0 else 0.0


def _entropy_at(dist, positions):
    if not positions:
        return 0.0
    if sorted(positions) == list(range(dist.arity)):
        return entropy(dist)
    return entropy(dist.marginal(sorted(positions)))


def conditional_entropy(joint, target_positions, given_positions):
    """H(T|S) = H(S,T) - H(S)."""
    target, given = _disjoint(joint, target_positions, given_positions)
    if not target:
        return 0.0
    return _entropy_at(joint, target + given) - _entropy_at(joint, given)


def mutual_information(joint, set_a_positions, set_b_positions):
    """I(A;B) = H(A) + H(B) - H(A,B), symmetric in A and B."""
    a, b = _disjoint(joint, set_a_positions, set_b_positions)
    if not a or not b:
        return 0.0
    return (_entropy_at(joint, a) + _entropy_at(joint, b)) - _entropy_at(joint, a + b)


def multi_information(joint):
    """Total correlation sum_i H(S_i) - H(S); 0 for a single variable."""
    if joint.arity == 1:
        return 0.0
    marginals = sum(_entropy_at(joint, [i]) for i in range(joint.arity))
    return marginals - entropy(joint)


def conditional_multi_information(joint, target_positions, given_positions):
    """Multi-information of T under p(.|s), averaged over S.

    Computed as sum_i H(T_i,S) - (L-1) H(S) - H(T,S).
    """
    target, given = _disjoint(joint, target_positions, given_positions)
    if not target:
        raise ValueError("Need at least one target position")
    if len(target) == 1:
        return 0.0
    if not given:
        return multi_information(joint.marginal(target))
    h_given = _entropy_at(joint, given)
    marginals = sum(_entropy_at(joint, [t] + given) for t in target)
    return marginals - (len(target) - 1) * h_given - _entropy_at(joint, target + given)


class TableEntropies:
    """Memoised joint entropies of column sets of one table.

    Keys are sets of selectors, so the column order of a query never
    changes its value.
    """

    def __init__(self, table):
        self._table = table
        self._cache = {}

    @classmethod
    def for_table(cls, table, entropies=None):
        """entropies if it caches table, a fresh cache when it is None."""
        if entropies is None:
            return cls(table)
        if entropies.table is not table:
            raise ValueError("Entropy cache belongs to a different table")
        return entropies

    @property
    def table(self):
        return self._table

    def entropy(self, selectors):
        key = frozenset(selectors)
        if not key:
            return 0.0
        if key not in self._cache:
            self._cache[key] = entropy(estimate_joint(self._table, sorted(key)))
        return self._cache[key]

    def mutual_information(self, first, second, given=()):
        """I(A;B|C) for disjoint selector sets."""
        a, b, c = frozenset(first), frozenset(second), frozenset(given)
        if a & b or a & c or b & c:
            raise ValueError("Selector sets must be disjoint")
        if not a or not b:
            return 0.0
        return (self.entropy(a | c) + self.entropy(b | c)) - (
            self.entropy(a | b | c) + self.entropy(c)
        )

    def conditional_entropy(self, target, given=()):
        t, g = frozenset(target), frozenset(given)
        if t & g:
            raise ValueError("Selector sets must be disjoint")
        return self.entropy(t | g) - self.entropy(g)

    def __len__(self):
        return len(self._cache)
