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

import argparse
import json
import logging
import sys
import warnings
from os import path
from pathlib import Path
from time import time

import yaml

from ensembleinfo import __version__ as VERSION
from ensembleinfo import bounds, combiners, report
from ensembleinfo.infoconfig import (
    COMBINER_NAMES,
    REGIME_NAMES,
    BoundConfig,
    MtiConfig,
    StackingConfig,
    SuiteConfig,
    SweepConfig,
    SynthConfig,
)
from ensembleinfo.metrics import analyze
from ensembleinfo.synth import REGIMES, scaling_sweep, synth_system, toy_table
from ensembleinfo.table import PredictionTable

USAGE_ERROR = 1
DATA_ERROR = 2

# Failures caused by the data handed to a command rather than by its flags.
DATA_ERRORS = (ValueError, KeyError, IndexError, TypeError, IOError)


def probability(value):
    try:
        value = float(value)
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"Value must be float {value}")
    if 0.0 < value < 1.0:
        return value
    raise argparse.ArgumentTypeError(f"Value must be in range (0, 1) {value}")


def positive_int(value):
    try:
        value = int(value)
    except (ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"Value must be an integer {value}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"Value must be positive {value}")
    return value


def _listed(convert, what):
    def parse(value):
        items = [item.strip() for item in value.split(",") if item.strip()]
        if not items:
            raise argparse.ArgumentTypeError(f"Expected a comma separated list of {what}")
        try:
            return [convert(item) for item in items]
        except (ValueError, argparse.ArgumentTypeError) as err:
            raise argparse.ArgumentTypeError(
                f"Could not parse {what} from {value!r}: {err}"
            ) from err

    return parse


float_list = _listed(float, "numbers")
int_list = _listed(positive_int, "positive integers")
name_list = _listed(str, "names")


class DuplicateFilter(logging.Filter):
    def filter(self, record):
        current_log = (record.module, record.levelno, record.msg)
        log_count = getattr(self, "log_count", 0)
        if current_log != getattr(self, "last_log", None):
            if log_count > 1:
                print(f"Suppressed {self.log_count} similar messages", file=sys.stderr)
            self.last_log = current_log
            self.log_count = 1
            return True
        self.log_count = log_count + 1
        return False

    def reset_count(self):
        self.last_log = None
        log_count = getattr(self, "log_count", 0)
        if log_count > 1:
            print(f"Suppressed {self.log_count} similar messages", file=sys.stderr)
        self.log_count = 0


def warn_without_traceback(message, category, filename, lineno, file=None, line=None):
    log = file if hasattr(file, "write") else sys.stderr
    log.write(f"Warning: {message}\n")


class ParserPrintHelp(argparse.ArgumentParser):
    def error(self, message, exit_code=USAGE_ERROR):
        sys.stderr.write("error: %s\n" % message)
        self.print_help(sys.stderr)
        sys.exit(exit_code)


def load_yaml_mapping(conf_file):
    """The root mapping of a YAML config file."""
    if not path.isfile(conf_file):
        raise IOError(f"No such config file: {conf_file}")
    logging.info("Parsing config file %s", conf_file)
    with open(conf_file) as config_stream:
        try:
            config_dict = yaml.safe_load(config_stream)
        except yaml.YAMLError as err:
            raise ValueError(f"Error while parsing config file {conf_file}: {err}") from err
    if config_dict is None:
        return {}
    if not isinstance(config_dict, dict):
        raise ValueError(
            f"Wrong format in config file, expected root dictionary, but got {type(config_dict)}"
        )
    return config_dict


def write_text(text, output, overwrite=False):
    """Writes text to the output file, or to stdout when no file is given."""
    if output is None:
        sys.stdout.write(text)
        return
    if not overwrite and path.exists(output):
        raise IOError(
            "Filename %s exists, cannot overwrite unless explicitly told to!" % output
        )
    with open(output, "w") as out:
        out.write(text)
    logging.info("Wrote %s", output)


def read_table(fname, classes=None):
    table = PredictionTable.parse(fname, ymax=classes)
    inferred = int(table.truth.max()) + 1
    if classes is not None and classes != inferred:
        warnings.warn(
            f"Using {classes} classes instead of the {inferred} seen in the truth column"
        )
    return table


def _synth_overrides(args, current):
    """SynthConfig fields set by flags, on top of the current mapping."""
    overrides = {}
    n_models = args.models or current.get("n_models")
    if args.regime:
        regime = REGIMES[args.regime]
        overrides["shared_noise"] = regime.shared_noise
        if n_models:
            overrides["per_model_error"] = regime.errors(n_models)
    for key, value in (
        ("n_models", args.models),
        ("n_instances", args.instances),
        ("ymax", args.classes),
        ("shared_noise", args.shared_noise),
        ("seed", args.seed),
    ):
        if value is not None:
            overrides[key] = value
    if args.errors:
        errors = args.errors
        if len(errors) == 1 and n_models:
            errors = errors * n_models
        overrides["per_model_error"] = errors
    return overrides


def _mti_overrides(args, current=None):
    mti = dict(current or {})
    if args.mode:
        mti["mode"] = args.mode
    if args.k:
        mti["k"] = args.k
    return mti


class EnsembleInfoRunner:
    """Executes one command and collects the data errors it runs into."""

    def __init__(self, app):
        self.app = app
        self.args = app.args
        self.errors = []

    def execute(self):
        command = getattr(self, self.args.command)
        try:
            command()
        except DATA_ERRORS as err:
            logging.error("%s: %s", self.args.command, err)
            self.errors.append(f"{self.args.command} failed: {err}")

    def analyze(self):
        args = self.args
        table = read_table(args.input, args.classes)
        baseline = report.read_report(args.baseline) if args.baseline else None
        p0 = args.p0
        if p0 is None and baseline is not None:
            if baseline.error_rate is None:
                raise ValueError(f"Baseline report {args.baseline} has no error rate")
            p0 = bounds.anchor_p0(baseline.error_rate, baseline.n_instances)
        if p0 is None and table.has_combined():
            p0 = bounds.anchor_p0(table.error_rate(), table.n_instances)
        if p0 is None:
            self.app.exit_with_usage(
                "--p0 is required when neither --baseline nor a yhat column is given"
            )
        mti = MtiConfig(**_mti_overrides(args))
        bound_cfg = BoundConfig(p0=p0, ymax=max(table.ymax, 2))
        metrics = analyze(
            table,
            mti,
            bound_cfg,
            baseline_strength=args.baseline_strength,
            concentration_sizes=args.concentration or (),
        )
        doc = report.build_document(table, metrics, bound_cfg)
        write_text(report.to_json(doc), args.output, args.overwrite)

    def _stacking_config(self):
        args = self.args
        try:
            return StackingConfig(
                meta_folds=args.meta_folds,
                inner_folds=args.inner_folds,
                c_grid=args.c_grid or list(StackingConfig().c_grid),
                seed=args.seed,
            )
        except ValueError as err:
            self.app.exit_with_usage(str(err))

    def combine(self):
        args = self.args
        if args.groups and not args.weights_out:
            self.app.exit_with_usage("--groups needs --weights-out")
        if args.weights and args.method != "weighted-vote":
            self.app.exit_with_usage("--weights only applies to --method weighted-vote")
        stacking = self._stacking_config()
        table = read_table(args.input, args.classes)
        combined = combiners.combine(
            table, args.method, weights=args.weights, stacking=stacking
        )
        logging.info("%s error rate: %.4f", args.method, combined.error_rate())
        if args.groups:
            self._write_group_weights(table, stacking)
        if args.output is None:
            combined.write_to_stream(sys.stdout)
        else:
            rows = combined.write(args.output, overwrite=args.overwrite)
            logging.info("Wrote %d rows to %s", rows, args.output)

    def _write_group_weights(self, table, stacking):
        args = self.args
        features, labels = table.model_labels.T, table.truth
        c_reg = combiners.select_c(
            features,
            labels,
            table.ymax,
            stacking.c_grid,
            stacking.inner_folds,
            stacking.seed,
            fold=stacking.meta_folds,
        )
        est = combiners.train_logreg(features, labels, table.ymax, c_reg)
        weights = combiners.group_weight(est, args.groups)
        text = json.dumps({"c_reg": c_reg, "group_weights": weights}, indent=2) + "\n"
        write_text(text, args.weights_out, args.overwrite)

    def toy(self):
        args = self.args
        system = toy_table(args.variant, args.repetitions)
        table = system.combined() if args.combined else system.table
        write_text(table.to_csv(), args.output, args.overwrite)

    def _config_dict(self):
        args = self.args
        if args.config is None:
            return {}, None
        return load_yaml_mapping(args.config), path.dirname(path.abspath(args.config))

    def synth(self):
        args = self.args
        config_dict, _ = self._config_dict()
        config_dict.update(_synth_overrides(args, config_dict))
        cfg = SynthConfig(**config_dict)
        table = synth_system(cfg)
        write_text(table.to_csv(), args.output, args.overwrite)

    def scale(self):
        args = self.args
        config_dict, base = self._config_dict()
        system = dict(config_dict.get("system") or {})
        system.update(_synth_overrides(args, system))
        config_dict["system"] = system
        config_dict["mti"] = _mti_overrides(args, config_dict.get("mti"))
        for key, value in (
            ("n_values", args.n_values),
            ("combiner", args.combiner),
            ("p0", args.p0),
        ):
            if value is not None:
                config_dict[key] = value
        cfg = SweepConfig(**config_dict)
        if base:
            cfg.set_base_path(base)
        rows = report.sweep_rows(scaling_sweep(cfg))
        self._write_rows(rows, cfg.output_dir)

    def _write_rows(self, rows, output_dir):
        args = self.args
        if args.output is None:
            report.write_csv(rows, report.SWEEP_COLUMNS, sys.stdout)
            return
        target = Path(output_dir).joinpath(args.output)
        if not args.overwrite and target.exists():
            raise IOError(
                "Filename %s exists, cannot overwrite unless explicitly told to!" % target
            )
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w") as out:
            report.write_csv(rows, report.SWEEP_COLUMNS, out)
        logging.info("Wrote %d sweep rows to %s", len(rows), target)

    def suite(self):
        args = self.args
        config_dict, base = self._config_dict()
        for key, value in (
            ("n_models", args.models),
            ("n_instances", args.instances),
            ("ymax", args.classes),
            ("seed", args.seed),
            ("regimes", args.regimes),
            ("combiners", args.combiners),
        ):
            if value is not None:
                config_dict[key] = value
        config_dict["mti"] = _mti_overrides(args, config_dict.get("mti"))
        cfg = SuiteConfig(**config_dict)
        if base:
            cfg.set_base_path(base)
        text = report.correlation_json(report.suite(cfg))
        output = None if args.output is None else str(cfg.output_dir.joinpath(args.output))
        write_text(text, output, args.overwrite)

    def correlate(self):
        args = self.args
        if args.names and len(args.names) != len(args.reports):
            self.app.exit_with_usage(
                "--names needs one name per report, expected %d, got %d"
                % (len(args.reports), len(args.names))
            )
        baseline = report.read_report(args.baseline)
        systems = []
        for fname in args.reports:
            try:
                systems.append(report.read_report(fname))
            except DATA_ERRORS as err:
                logging.error("in report %s: %s", fname, err)
                self.errors.append(f"Could not read report: {fname}")
        if self.errors:
            return
        names = args.names or [path.basename(fname) for fname in args.reports]
        result = report.correlate(baseline, systems, names)
        write_text(report.correlation_json(result), args.output, args.overwrite)


class EnsembleInfoApp:
    def __init__(self, argv):
        self.parser = self.make_parser(argv[0])
        self.args = self.parser.parse_args(argv[1:])
        if self.args.verbose:
            logging.getLogger().setLevel(logging.INFO)

    def exit_with_usage(self, msg=None, exit_code=USAGE_ERROR):
        self.parser.error(message=msg, exit_code=exit_code)

    @staticmethod
    def _add_output(sub, what):
        sub.add_argument("-o", "--output", type=str, help=f"{what}, stdout if omitted")
        sub.add_argument(
            "-w",
            "--overwrite",
            action="store_true",
            help="Overwrite output files will overwrite existing files",
        )

    @staticmethod
    def _add_mti(sub):
        sub.add_argument("--mode", choices=("exact", "mti"), help="Estimation mode")
        sub.add_argument("--k", type=positive_int, help="MTI subset size")

    @staticmethod
    def _add_synth(sub, regime=True):
        sub.add_argument(
            "config", nargs="?", help="Optional YAML config, flags override its values"
        )
        sub.add_argument("--models", type=positive_int, help="Number of models N")
        sub.add_argument("--instances", type=positive_int, help="Number of instances M")
        sub.add_argument("--classes", type=positive_int, help="Number of classes Ymax")
        sub.add_argument("--seed", type=int, help="Generator seed")
        if regime:
            sub.add_argument(
                "--errors",
                type=float_list,
                help="Per-model error rates, e.g. 0.1,0.3 (one value applies to all)",
            )
            sub.add_argument("--shared-noise", type=float, help="Shared-event probability")
            sub.add_argument(
                "--regime", choices=REGIME_NAMES, help="Take noise and error rates from a regime"
            )

    @classmethod
    def make_parser(cls, prog):
        parser = ParserPrintHelp(
            prog=prog,
            description="ensembleinfo --- information metrics and error bounds for classifier ensembles.",
        )
        parser.add_argument(
            "--version",
            action="version",
            version="%(prog)s {version}".format(version=VERSION),
        )
        parser.add_argument(
            "-v", "--verbose", action="store_true", help="Log progress information"
        )
        subparsers = parser.add_subparsers(dest="command", parser_class=ParserPrintHelp)
        subparsers.required = True

        sub = subparsers.add_parser("analyze", help="Metrics and bounds of a prediction table")
        sub.add_argument("input", help="Prediction table, header y[,yhat],o1,...,oN")
        sub.add_argument("--classes", type=positive_int, help="Override the class count")
        cls._add_mti(sub)
        sub.add_argument("--p0", type=probability, help="Anchor error rate of the tight bound")
        sub.add_argument("--baseline", help="Baseline report, its error rate is the default p0")
        sub.add_argument(
            "--baseline-strength",
            type=float,
            help="Divide the information terms by this baseline strength",
        )
        sub.add_argument(
            "--concentration",
            type=positive_int,
            action="append",
            help="Subset size of an n-model concentration, may be repeated",
        )
        cls._add_output(sub, "Report JSON file")

        sub = subparsers.add_parser("combine", help="Add a combined column to a table")
        sub.add_argument("input", help="Prediction table")
        sub.add_argument("--method", choices=COMBINER_NAMES, required=True)
        sub.add_argument("--classes", type=positive_int, help="Override the class count")
        sub.add_argument("--weights", type=float_list, help="Weighted-vote weights")
        sub.add_argument("--meta-folds", type=positive_int, default=4)
        sub.add_argument("--inner-folds", type=positive_int, default=5)
        sub.add_argument("--c-grid", type=float_list, help="Inverse regularization grid")
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--groups", type=name_list, help="Group id per model, e.g. a,a,b")
        sub.add_argument("--weights-out", help="JSON file for the group weight sums")
        cls._add_output(sub, "Combined table")

        sub = subparsers.add_parser("toy", help="Write a toy system table")
        sub.add_argument("variant", type=str.upper, choices=("A", "B", "C", "D"))
        sub.add_argument("--repetitions", type=positive_int, default=20)
        sub.add_argument(
            "--combined", action="store_true", help="Include the designated combiner column"
        )
        cls._add_output(sub, "Table file")

        sub = subparsers.add_parser("synth", help="Generate a synthetic ensemble table")
        cls._add_synth(sub)
        cls._add_output(sub, "Table file")

        sub = subparsers.add_parser("scale", help="Metrics over growing synthetic ensembles")
        cls._add_synth(sub)
        sub.add_argument("--n-values", type=int_list, help="Model counts, e.g. 1,2,5,10")
        sub.add_argument("--combiner", choices=COMBINER_NAMES)
        cls._add_mti(sub)
        sub.add_argument("--p0", type=probability, help="Anchor error rate of the tight bound")
        cls._add_output(sub, "Sweep CSV file")

        sub = subparsers.add_parser("correlate", help="Reductions and correlations of reports")
        sub.add_argument("baseline", help="Baseline report")
        sub.add_argument("reports", nargs="+", help="System reports")
        sub.add_argument("--names", type=name_list, help="System names, one per report")
        cls._add_output(sub, "Correlation JSON file")

        sub = subparsers.add_parser("suite", help="Correlations over a synthetic suite")
        cls._add_synth(sub, regime=False)
        sub.add_argument("--regimes", type=_listed(_regime, "regimes"))
        sub.add_argument("--combiners", type=_listed(_combiner, "combiners"))
        cls._add_mti(sub)
        cls._add_output(sub, "Correlation JSON file")
        return parser

    def runner(self):
        return EnsembleInfoRunner(self)


def _choice(name, allowed):
    if name not in allowed:
        raise argparse.ArgumentTypeError(
            f"{name!r} is not one of {', '.join(allowed)}"
        )
    return name


def _regime(name):
    return _choice(name, REGIME_NAMES)


def _combiner(name):
    return _choice(name, COMBINER_NAMES)


def run(app):
    start = time()
    runner = app.runner()
    runner.execute()
    sec = round(time() - start, 2)
    logging.info("%s completed in %s seconds", app.args.command, str(sec))
    if runner.errors:
        logging.error(
            "ensembleinfo completed, but errors occurred: \n%s", "\n".join(runner.errors)
        )
        return DATA_ERROR
    return 0


def main():
    logging.basicConfig(format="%(levelname)s: %(message)s")
    f = DuplicateFilter()
    logging.getLogger().addFilter(f)
    warnings.showwarning = warn_without_traceback
    exit_val = run(EnsembleInfoApp(sys.argv))
    f.reset_count()
    sys.exit(exit_val)
