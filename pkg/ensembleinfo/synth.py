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

"""Toy fixtures and a seeded generator of synthetic classifier ensembles.

Randomness comes from numpy's PCG64 bit generator, one stream per purpose,
keyed by SeedSequence(seed, spawn_key=key):

    (0,)     truth labels
    (1,)     shared-event flags
    (2,)     shared corruption draws
    (3,)     shared wrong-label offsets
    (4, i)   corruption draws of model i
    (5, i)   wrong-label offsets of model i

Only raw 64-bit words are consumed and compared against integer thresholds,
so tables are bit-identical across platforms.  Model streams depend on
(seed, i) alone, so a system with more models extends one with fewer.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ensembleinfo import bounds, combiners
from ensembleinfo.infoconfig import BoundConfig, SynthConfig
from ensembleinfo.metrics import MetricReport, analyze
from ensembleinfo.table import PredictionTable

_TWO_64 = 2 ** 64

_TOY_ROWS = {
    "A": [("11111", 1), ("11111", 1), ("11111", 1), ("00000", 0), ("11111", 0), ("00000", 0)],
    "B": [("11100", 1), ("11111", 1), ("10011", 1), ("01101", 0), ("00000", 0), ("00011", 0)],
    "D": [("11100", 1), ("11111", 1), ("00011", 1), ("11100", 0), ("00000", 0), ("00011", 0)],
}
_TOY_ROWS["C"] = _TOY_ROWS["B"]
_TOY_FILLER = [("11111", 1), ("00000", 0)]


@dataclass(frozen=True)
class ToySystem:
    variant: str
    table: PredictionTable
    method: str
    weights: Optional[List[float]] = None
    alternatives: Dict[str, List[float]] = field(default_factory=dict)

    def combined(self):
        """The table with the variant's designated combiner applied."""
        return combiners.combine(self.table, self.method, weights=self.weights)


def toy_table(variant, repetitions=20):
    """The five-model binary toy systems.

    The explicit rows appear first, then the unanimous correct rows
    (11111 -> 1, 00000 -> 0) repeated `repetitions` times each.
    """
    variant = variant.upper()
    if variant not in _TOY_ROWS:
        raise ValueError(f"Unknown toy variant {variant!r}, choose from A, B, C, D")
    if repetitions < 1:
        raise ValueError(f"repetitions must be positive, not {repetitions}")
    rows = _TOY_ROWS[variant] + _TOY_FILLER * repetitions
    models = np.array([[int(ch) for ch in pattern] for pattern, _ in rows]).T
    truth = [y for _, y in rows]
    table = PredictionTable(models, truth, 2)
    if variant == "C":
        return ToySystem(variant, table, "weighted-vote", weights=[1.0, 0.0, 0.0, 0.0, 0.0])
    if variant == "D":
        return ToySystem(
            variant, table, "vote", alternatives={"o3-o5": [0.0, 0.0, 1.0, 1.0, 1.0]}
        )
    return ToySystem(variant, table, "vote")


def raw_stream(seed, key, size):
    bitgen = np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key)))
    return bitgen.random_raw(size)


def _threshold(p):
    return np.uint64(min(int(p * _TWO_64), _TWO_64 - 1))


def _below(raw, p):
    """raw < p * 2^64, exact at p = 0 and p = 1."""
    if p <= 0.0:
        return np.zeros(raw.shape, dtype=bool)
    if p >= 1.0:
        return np.ones(raw.shape, dtype=bool)
    return raw < _threshold(p)


def synth_system(cfg):
    """A table of cfg.n_models noisy copies of a random truth column.

    With probability shared_noise an instance is a shared event: one draw u
    decides corruption for every model (model i is wrong iff u < e_i) and
    all corrupted models give the same wrong label.  Otherwise each model
    is corrupted independently.  Wrong labels are uniform over the
    ymax - 1 wrong classes.
    """
    m, ymax, seed = cfg.n_instances, cfg.ymax, cfg.seed
    cumulative = np.cumsum(cfg.prior)[:-1]
    thresholds = np.array([_threshold(c) for c in cumulative], dtype=np.uint64)
    truth = np.searchsorted(thresholds, raw_stream(seed, (0,), m), side="right")

    shared = _below(raw_stream(seed, (1,), m), cfg.shared_noise)
    shared_u = raw_stream(seed, (2,), m)
    shared_offset = raw_stream(seed, (3,), m) % np.uint64(ymax - 1)

    models = np.empty((cfg.n_models, m), dtype=np.int64)
    for i, error in enumerate(cfg.per_model_error):
        own_u = raw_stream(seed, (4, i), m)
        own_offset = raw_stream(seed, (5, i), m) % np.uint64(ymax - 1)
        corrupted = np.where(shared, _below(shared_u, error), _below(own_u, error))
        offset = np.where(shared, shared_offset, own_offset).astype(np.int64)
        wrong = (truth + 1 + offset) % ymax
        models[i] = np.where(corrupted, wrong, truth)
    logging.info(
        "Generated %d models x %d instances (shared_noise=%.2f, seed=%d)",
        cfg.n_models,
        m,
        cfg.shared_noise,
        seed,
    )
    return PredictionTable(models, truth, ymax)


@dataclass(frozen=True)
class GenerationRegime:
    """Shared-noise level and error-rate spread of one way of producing models."""

    shared_noise: float
    lowest_error: float
    highest_error: float

    def errors(self, n_models):
        if n_models == 1:
            return [self.lowest_error]
        return np.linspace(self.lowest_error, self.highest_error, n_models).tolist()


REGIMES = {
    "random-seed": GenerationRegime(0.7, 0.2, 0.2),
    "bagging": GenerationRegime(0.6, 0.23, 0.23),
    "random-hyp": GenerationRegime(0.4, 0.15, 0.3),
    "hetero": GenerationRegime(0.15, 0.1, 0.4),
}


def regime_config(name, n_models, n_instances, ymax=2, seed=0):
    try:
        regime = REGIMES[name]
    except KeyError as err:
        raise ValueError(f"Unknown generation regime {name!r}") from err
    return SynthConfig(
        n_models=n_models,
        n_instances=n_instances,
        per_model_error=regime.errors(n_models),
        ymax=ymax,
        shared_noise=regime.shared_noise,
        seed=seed,
    )


@dataclass
class SweepPoint:
    n_models: int
    report: MetricReport
    error_rate: float


def scaling_sweep(cfg):
    """Analyzes the combined system for each model count in cfg.n_values.

    p0 defaults to the error rate of the first (smallest) system.
    """
    points = []
    p0 = cfg.p0
    for n in cfg.n_values:
        logging.info("Sweep: N=%d", n)
        system = cfg.system.resized(n)
        table = combiners.combine(synth_system(system), cfg.combiner, stacking=cfg.stacking)
        error_rate = table.error_rate()
        if p0 is None:
            p0 = bounds.anchor_p0(error_rate, table.n_instances)
        bound_cfg = BoundConfig(p0=p0, ymax=max(table.ymax, 2))
        points.append(SweepPoint(n, analyze(table, cfg.mti, bound_cfg), error_rate))
    return points
