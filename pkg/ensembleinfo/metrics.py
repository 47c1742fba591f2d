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

"""Relevance, redundancy and combination loss of a classifier ensemble.

relevance - redundancy is the information the model outputs carry about
the truth, and subtracting the combination loss gives the part that
survives the combiner.  Exact mode evaluates the full joint of all model
columns; MTI mode replaces those terms by size-k subset searches.
"""
import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional

import numpy as np

from ensembleinfo import bounds
from ensembleinfo.infoconfig import MtiConfig
from ensembleinfo.infocore import COMBINED, TRUTH, TableEntropies, model, models
from ensembleinfo.mti import (
    mti_conditional_entropy_truth,
    mti_conditional_multi_information,
    mti_multi_information,
)


class ConcentrationUndefined(ValueError):
    """Raised when the models carry no information about the truth."""


@dataclass
class MetricReport:
    h_y: float
    i_relev: float
    i_redun: float
    i_combloss: Optional[float]
    ensemble_information: float
    ensemble_strength: Optional[float]
    per_model: Dict[str, Optional[float]]
    n_models: int
    mode: str
    model_order: List[str]
    error_rate: Optional[float] = None
    bound_loose_info: Optional[float] = None
    bound_tight_info: Optional[bounds.BoundResult] = None
    bound_tight_strength: Optional[bounds.BoundResult] = None
    fano_strength: Optional[float] = None
    tightness: Optional[bounds.TightnessDiagnostics] = None
    normalized: Optional[Dict[str, Optional[float]]] = None
    concentration: Dict[int, Optional[float]] = field(default_factory=dict)

    @property
    def novelty(self):
        """Per-model relevance minus per-model redundancy."""
        return self.per_model["relev"] - self.per_model["redun"]


def _all_models(table):
    return models(range(table.n_models))


def relevance(table, entropies=None):
    """Sum over models of I(O_i; Y)."""
    ent = TableEntropies.for_table(table, entropies)
    return sum(ent.mutual_information([model(i)], [TRUTH]) for i in range(table.n_models))


def exact_conditional_entropy_truth(table, entropies=None):
    """H(Y|O) over the full joint of all model columns."""
    ent = TableEntropies.for_table(table, entropies)
    return ent.conditional_entropy([TRUTH], _all_models(table))


def exact_information(table, entropies=None):
    """I(O;Y) over the full joint."""
    ent = TableEntropies.for_table(table, entropies)
    return ent.mutual_information(_all_models(table), [TRUTH])


def redundancy(table, cfg=None, entropies=None):
    """I_multi(O) - I_multi(O|Y), exact or MTI-approximated."""
    cfg = cfg or MtiConfig()
    ent = TableEntropies.for_table(table, entropies)
    if table.n_models == 1:
        return 0.0
    if cfg.mode == "mti":
        return mti_multi_information(table, cfg.k, ent) - mti_conditional_multi_information(
            table, cfg.k, ent
        )
    n = table.n_models
    cols = _all_models(table)
    multi = sum(ent.entropy([c]) for c in cols) - ent.entropy(cols)
    cond = (
        sum(ent.entropy([c, TRUTH]) for c in cols)
        - (n - 1) * ent.entropy([TRUTH])
        - ent.entropy(cols + [TRUTH])
    )
    return multi - cond


def combination_loss(table, cfg=None, entropies=None):
    """H(Y|Yhat) - H(Y|O)."""
    if not table.has_combined():
        raise KeyError("Combination loss needs the combined column")
    cfg = cfg or MtiConfig()
    ent = TableEntropies.for_table(table, entropies)
    h_y_given_combined = ent.conditional_entropy([TRUTH], [COMBINED])
    if cfg.mode == "mti":
        h_y_given_models = mti_conditional_entropy_truth(table, cfg.k, ent)
    else:
        h_y_given_models = exact_conditional_entropy_truth(table, ent)
    return h_y_given_combined - h_y_given_models


def per_model_error_rates(table):
    return [float(v) for v in np.mean(table.model_labels != table.truth, axis=1)]


def concentration(table, n, entropies=None):
    """Spread of I(Omega;Y) over size-n model subsets, relative to I(O;Y)."""
    if not 1 <= n <= table.n_models:
        raise ValueError(
            f"Concentration subset size must lie in [1, {table.n_models}], not {n}"
        )
    ent = TableEntropies.for_table(table, entropies)
    total = exact_information(table, ent)
    if total <= 1e-12:
        raise ConcentrationUndefined(
            "Concentration is undefined: the models carry no information about Y"
        )
    values = [
        ent.mutual_information(models(subset), [TRUTH])
        for subset in combinations(range(table.n_models), n)
    ]
    return (max(values) - min(values)) / total


def _normalize(values, baseline_strength):
    if baseline_strength == 0:
        raise ValueError("Cannot normalize by a zero baseline strength")
    return {
        key: None if value is None else value / baseline_strength
        for key, value in values.items()
    }


def analyze(table, cfg=None, bound_cfg=None, baseline_strength=None, concentration_sizes=()):
    """Every metric of the table, plus bounds when bound_cfg is given."""
    cfg = cfg or MtiConfig()
    ent = TableEntropies(table)
    h_y = ent.entropy([TRUTH])
    i_relev = relevance(table, ent)
    i_redun = redundancy(table, cfg, ent)
    info = i_relev - i_redun
    i_combloss = strength = error_rate = None
    if table.has_combined():
        i_combloss = combination_loss(table, cfg, ent)
        strength = info - i_combloss
        error_rate = table.error_rate()

    n = table.n_models
    report = MetricReport(
        h_y=h_y,
        i_relev=i_relev,
        i_redun=i_redun,
        i_combloss=i_combloss,
        ensemble_information=info,
        ensemble_strength=strength,
        per_model={
            "relev": i_relev / n,
            "redun": i_redun / n,
            "combloss": None if i_combloss is None else i_combloss / n,
        },
        n_models=n,
        mode=cfg.describe(),
        model_order=[str(c) for c in _all_models(table)],
        error_rate=error_rate,
    )

    if bound_cfg is not None:
        report.bound_loose_info = bounds.bound_loose(info, h_y, bound_cfg.ymax)
        report.bound_tight_info = bounds.bound_tight(info, h_y, bound_cfg)
        report.tightness = bounds.tightness_diagnostics(bound_cfg)
        if strength is not None:
            report.bound_tight_strength = bounds.bound_tight(strength, h_y, bound_cfg)
            report.fano_strength = bounds.fano_bound(h_y - strength, bound_cfg.ymax)

    if baseline_strength is not None:
        report.normalized = _normalize(
            {
                "i_relev": i_relev,
                "i_redun": i_redun,
                "i_combloss": i_combloss,
                "ensemble_information": info,
                "ensemble_strength": strength,
            },
            baseline_strength,
        )

    for size in concentration_sizes:
        try:
            report.concentration[size] = concentration(table, size, ent)
        except ConcentrationUndefined as err:
            logging.warning("%s", err)
            report.concentration[size] = None

    logging.info(
        "Analyzed %d models (%s): relev=%.4f redun=%.4f combloss=%s",
        n,
        report.mode,
        i_relev,
        i_redun,
        "n/a" if i_combloss is None else "%.4f" % i_combloss,
    )
    return report
