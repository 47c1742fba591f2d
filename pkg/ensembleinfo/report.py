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

"""Serialized analysis reports and the comparisons built on them.

A report is a versioned JSON document.  Reductions compare a system
against a baseline report; correlate and suite reduce a set of systems to
Pearson coefficients per bound type.
"""
import csv
import json
import logging
import warnings
from dataclasses import asdict, field
from math import isfinite
from typing import Dict, List, Optional

try:
    from pydantic.v1.dataclasses import dataclass
except ImportError:
    from pydantic.dataclasses import dataclass

from ensembleinfo import bounds, combiners
from ensembleinfo.infoconfig import BoundConfig, EnsembleInfoConfig
from ensembleinfo.metrics import analyze
from ensembleinfo.synth import regime_config, synth_system

SCHEMA_VERSION = 1
BOUND_KEYS = ("loose_info", "tight_info", "tight_strength")


@dataclass(config=EnsembleInfoConfig)
class BoundEntry:
    value: Optional[float]
    defined: bool
    diagnostic: str


@dataclass(config=EnsembleInfoConfig)
class BoundSettings:
    p0: float
    ymax: int


@dataclass(config=EnsembleInfoConfig)
class Tightness:
    tau: float
    regime: str
    delta_roots: Optional[List[float]] = None


@dataclass(config=EnsembleInfoConfig)
class ReportDocument:
    schema_version: int
    input_digest: str
    n_models: int
    n_instances: int
    ymax: int
    mode: str
    model_order: List[str]
    h_y: float
    i_relev: float
    i_redun: float
    ensemble_information: float
    per_model: Dict[str, Optional[float]]
    novelty: float
    i_combloss: Optional[float] = None
    ensemble_strength: Optional[float] = None
    error_rate: Optional[float] = None
    bound_config: Optional[BoundSettings] = None
    bounds: Dict[str, BoundEntry] = field(default_factory=dict)
    fano_strength: Optional[float] = None
    tightness: Optional[Tightness] = None
    normalized: Optional[Dict[str, Optional[float]]] = None
    concentration: Dict[str, Optional[float]] = field(default_factory=dict)

    def __post_init_post_parse__(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(
                f"Report schema version {self.schema_version} is not supported, "
                f"expected {SCHEMA_VERSION}"
            )
        for key, entry in self.bounds.items():
            if entry.defined != (entry.value is not None):
                raise ValueError(f"Bound {key}: value presence must mirror its defined flag")


def _entry(result):
    return BoundEntry(
        value=result.value if result.defined else None,
        defined=result.defined,
        diagnostic=result.diagnostic.value,
    )


def build_document(table, metrics, bound_cfg=None):
    """Wraps a MetricReport of table into a ReportDocument."""
    entries = {}
    settings = tightness = None
    if bound_cfg is not None:
        settings = BoundSettings(p0=bound_cfg.p0, ymax=bound_cfg.ymax)
        entries["loose_info"] = BoundEntry(
            value=metrics.bound_loose_info, defined=True, diagnostic=bounds.Diagnostic.OK.value
        )
        entries["tight_info"] = _entry(metrics.bound_tight_info)
        if metrics.bound_tight_strength is not None:
            entries["tight_strength"] = _entry(metrics.bound_tight_strength)
        diag = metrics.tightness
        tightness = Tightness(
            tau=diag.tau,
            regime=diag.regime.value,
            delta_roots=None if diag.delta_roots is None else list(diag.delta_roots),
        )
    return ReportDocument(
        schema_version=SCHEMA_VERSION,
        input_digest=table.digest(),
        n_models=table.n_models,
        n_instances=table.n_instances,
        ymax=table.ymax,
        mode=metrics.mode,
        model_order=list(metrics.model_order),
        h_y=metrics.h_y,
        i_relev=metrics.i_relev,
        i_redun=metrics.i_redun,
        ensemble_information=metrics.ensemble_information,
        per_model=dict(metrics.per_model),
        novelty=metrics.novelty,
        i_combloss=metrics.i_combloss,
        ensemble_strength=metrics.ensemble_strength,
        error_rate=metrics.error_rate,
        bound_config=settings,
        bounds=entries,
        fano_strength=metrics.fano_strength,
        tightness=tightness,
        normalized=None if metrics.normalized is None else dict(metrics.normalized),
        concentration={str(n): v for n, v in sorted(metrics.concentration.items())},
    )


def to_json(doc):
    """Deterministic JSON text of a report, one trailing newline."""
    return json.dumps(asdict(doc), indent=2, allow_nan=False) + "\n"


def from_dict(data):
    if not isinstance(data, dict):
        raise ValueError(f"Expected a report object, got {type(data).__name__}")
    return ReportDocument(**data)


def read_report(fname):
    with open(fname) as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as err:
            raise ValueError(f"{fname} is not valid JSON: {err}") from err
    return from_dict(data)


def bound_value(doc, key):
    """The bound value, or 0 when it is undefined."""
    if key not in doc.bounds:
        raise KeyError(f"Report has no {key} bound")
    entry = doc.bounds[key]
    if not entry.defined:
        warnings.warn(
            f"Bound {key} is undefined ({entry.diagnostic}), treating it as 0 in reductions"
        )
        return 0.0
    return entry.value


def reductions(baseline, system):
    """Error-rate and lower-bound reductions (percent) of system vs baseline."""
    if baseline.error_rate is None or system.error_rate is None:
        raise ValueError("Reductions need reports with an observed error rate")
    row = {
        "error_rate": error_rate_percent(system),
        "error_rate_reduction": bounds.error_rate_reduction(
            error_rate_percent(baseline), error_rate_percent(system)
        ),
    }
    for key in BOUND_KEYS:
        if key not in baseline.bounds or key not in system.bounds:
            row[key] = None
            continue
        row[key] = bounds.lower_bound_reduction(
            100.0 * bound_value(baseline, key), 100.0 * bound_value(system, key)
        )
    return row


def error_rate_percent(doc):
    return 100.0 * doc.error_rate


def correlate(baseline, systems, names=None):
    """Reductions per system and one Pearson coefficient per bound type."""
    names = names or [f"system{i + 1}" for i in range(len(systems))]
    rows = []
    for name, doc in zip(names, systems):
        row = {"system": name}
        row.update(reductions(baseline, doc))
        rows.append(row)
    pearson_rows = []
    for key in BOUND_KEYS:
        xs = [r["error_rate_reduction"] for r in rows if r[key] is not None]
        ys = [r[key] for r in rows if r[key] is not None]
        try:
            r = bounds.pearson(xs, ys)
        except ValueError as err:
            logging.warning("No correlation for %s: %s", key, err)
            r = None
        pearson_rows.append({"bound": key, "pearson": r, "systems": len(xs)})
    return {"systems": rows, "pearson": pearson_rows}


def correlation_json(result):
    return json.dumps(result, indent=2, allow_nan=False) + "\n"


SWEEP_COLUMNS = [
    "n_models",
    "error_rate",
    "error_rate_reduction",
    "lb_reduction_loose_info",
    "lb_reduction_tight_info",
    "lb_reduction_tight_strength",
    "i_relev",
    "i_redun",
    "i_combloss",
    "ensemble_information",
    "ensemble_strength",
    "per_model_relev",
    "per_model_redun",
    "novelty",
]


def _safe(func, *args):
    try:
        value = func(*args)
    except ValueError as err:
        logging.warning("%s", err)
        return None
    return value if value is None or isfinite(value) else None


def sweep_rows(points):
    """One row per model count; reductions are relative to the first point."""
    base = points[0].report
    rows = []
    for point in points:
        rep = point.report
        row = {
            "n_models": point.n_models,
            "error_rate": point.error_rate,
            "error_rate_reduction": _safe(
                bounds.error_rate_reduction, 100.0 * points[0].error_rate, 100.0 * point.error_rate
            ),
            "i_relev": rep.i_relev,
            "i_redun": rep.i_redun,
            "i_combloss": rep.i_combloss,
            "ensemble_information": rep.ensemble_information,
            "ensemble_strength": rep.ensemble_strength,
            "per_model_relev": rep.per_model["relev"],
            "per_model_redun": rep.per_model["redun"],
            "novelty": rep.novelty,
        }
        row["lb_reduction_loose_info"] = _safe(
            bounds.lower_bound_reduction,
            100.0 * base.bound_loose_info,
            100.0 * rep.bound_loose_info,
        )
        for key in ("tight_info", "tight_strength"):
            base_result = getattr(base, f"bound_{key}")
            result = getattr(rep, f"bound_{key}")
            if base_result is None or result is None:
                row[f"lb_reduction_{key}"] = None
                continue
            row[f"lb_reduction_{key}"] = _safe(
                bounds.lower_bound_reduction,
                100.0 * _undefined_as_zero(key, base_result),
                100.0 * _undefined_as_zero(key, result),
            )
        rows.append(row)
    return rows


def _undefined_as_zero(key, result):
    if not result.defined:
        warnings.warn(
            f"Bound {key} is undefined ({result.diagnostic.value}), treating it as 0 in reductions"
        )
    return result.value_or(0.0)


def write_csv(rows, columns, out):
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: "" if row.get(c) is None else row[c] for c in columns})


def suite(cfg):
    """Regimes x combiners synthetic systems against a single-model baseline.

    The baseline is the best (only) model of a one-model system of the first
    regime; its error rate anchors p0 for every bound.
    """
    baseline_table = combiners.combine(
        synth_system(
            regime_config(cfg.regimes[0], 1, cfg.n_instances, ymax=cfg.ymax, seed=cfg.seed)
        ),
        "best-model",
    )
    p0 = baseline_table.error_rate()
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"Baseline error rate {p0} cannot anchor the tight bound")
    bound_cfg = BoundConfig(p0=p0, ymax=max(cfg.ymax, 2))
    baseline = build_document(baseline_table, analyze(baseline_table, cfg.mti, bound_cfg), bound_cfg)

    names, documents = [], []
    for regime in cfg.regimes:
        table = synth_system(
            regime_config(regime, cfg.n_models, cfg.n_instances, ymax=cfg.ymax, seed=cfg.seed)
        )
        for method in cfg.combiners:
            logging.info("Suite: %s / %s", regime, method)
            combined = combiners.combine(table, method, stacking=cfg.stacking)
            documents.append(
                build_document(combined, analyze(combined, cfg.mti, bound_cfg), bound_cfg)
            )
            names.append(f"{regime}/{method}")
    result = correlate(baseline, documents, names)
    result["baseline"] = {"error_rate": p0, "p0": p0}
    return result
