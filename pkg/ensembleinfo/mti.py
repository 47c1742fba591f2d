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

"""Subset approximations of information quantities over all model columns.

Terms that need the joint of every model column are replaced by searches
over size-k model subsets, taken in the table's column order.  The maximum
for model i runs over subsets of the models before it, of size
min(k, i - 1).
"""
import logging
from itertools import combinations
from math import comb

from ensembleinfo.infocore import TRUTH, TableEntropies, model


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError(f"MTI subset size k must be a positive integer, not {k}")
    return int(k)


def _prefix_sum(entropies, k, given):
    n = entropies.table.n_models
    total = 0.0
    for i in range(1, n):
        size = min(k, i)
        logging.debug("MTI term O%d: %d subsets of size %d", i + 1, comb(i, size), size)
        total += max(
            entropies.mutual_information([model(i)], [model(j) for j in subset], given)
            for subset in combinations(range(i), size)
        )
    return total


def mti_multi_information(table, k, entropies=None):
    """Sum over i >= 2 of the largest I(O_i; Omega), Omega a prefix subset.

    Lower-bounds the multi-information of all model columns; equal to it
    when k >= N - 1.
    """
    k = _check_k(k)
    if table.n_models == 1:
        return 0.0
    entropies = TableEntropies.for_table(table, entropies)
    return _prefix_sum(entropies, k, ())


def mti_conditional_multi_information(table, k, entropies=None):
    """As mti_multi_information with every term conditioned on the truth."""
    k = _check_k(k)
    if table.n_models == 1:
        return 0.0
    entropies = TableEntropies.for_table(table, entropies)
    return _prefix_sum(entropies, k, (TRUTH,))


def mti_conditional_entropy_truth(table, k, entropies=None):
    """Smallest H(Y|Omega) over model subsets of size k.

    Upper-bounds H(Y|O).  A k above N is clamped to N.
    """
    k = min(_check_k(k), table.n_models)
    entropies = TableEntropies.for_table(table, entropies)
    logging.info(
        "MTI conditional entropy: %d subsets of %d models",
        comb(table.n_models, k),
        k,
    )
    return min(
        entropies.conditional_entropy([TRUTH], [model(j) for j in subset])
        for subset in combinations(range(table.n_models), k)
    )
