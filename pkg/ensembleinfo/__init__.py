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

"""The ensembleinfo module, information metrics for classifier ensembles.

   A prediction table holds the labels N models gave on M instances together
   with the ground truth and, optionally, the label a combiner produced.  From
   its observed frequencies the module estimates the relevance, redundancy
   and combination loss of the ensemble, and turns the resulting strength
   into lower bounds on the error rate of the combined prediction.

   Tables are read and written as CSV with the header y[,yhat],o1,...,oN.
   The combiners module adds a combined column (voting, weighted voting,
   best model or cross-validated logistic-regression stacking) and the synth
   module provides toy systems and a seeded synthetic ensemble generator.

   See README.md for usage of the ensembleinfo command line tool.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version(__name__)
except PackageNotFoundError:
    __version__ = "0.0.0"

from .bounds import BoundResult, bound_loose, bound_tight, fano_bound, tightness_diagnostics
from .combiners import combine, majority_vote, stacking_combine, weighted_vote
from .infoconfig import BoundConfig, MtiConfig, SuiteConfig, SweepConfig, SynthConfig
from .metrics import MetricReport, analyze
from .synth import scaling_sweep, synth_system, toy_table
from .table import PredictionTable
