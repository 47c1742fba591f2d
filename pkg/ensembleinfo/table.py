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

import hashlib
import logging
from functools import wraps
from os.path import exists

import numpy as np


def takes_stream(i, mode):
    """Lets a function accept either an open stream or a path in position i."""

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            if len(args) > i and args[i] is not None and isinstance(args[i], str):
                with open(args[i], mode) as f:
                    return func(*args[:i], f, *args[i + 1 :], **kwargs)
            else:
                return func(*args, **kwargs)

        return wrapper

    return decorator


def _parse_label(token, lineno):
    try:
        value = int(token)
    except ValueError as err:
        raise ValueError(
            f"Line {lineno}: labels must be non-negative integers, got {token!r}"
        ) from err
    if value < 0:
        raise ValueError(f"Line {lineno}: negative label {value}")
    return value


class PredictionTable:
    """The outputs of N models on M instances together with the ground truth.

    model_labels is an N x M integer matrix, truth has length M and the
    optional combined column holds the ensemble prediction.  Labels are
    0-based and every stored label is below ymax.
    """

    def __init__(self, model_labels, truth, ymax, combined=None):
        model_labels = np.atleast_2d(np.array(model_labels, dtype=np.int64))
        truth = np.array(truth, dtype=np.int64)
        ymax = int(ymax)
        if model_labels.shape[0] < 1 or model_labels.shape[1] < 1:
            raise ValueError("A prediction table needs at least one model and one instance")
        if truth.ndim != 1 or len(truth) != model_labels.shape[1]:
            raise IndexError(
                "truth needs length M=%d, was given %d entries."
                % (model_labels.shape[1], truth.size)
            )
        if ymax < 1:
            raise ValueError(f"ymax must be positive, not {ymax}")
        if combined is not None:
            combined = np.array(combined, dtype=np.int64)
            if combined.ndim != 1 or len(combined) != len(truth):
                raise IndexError(
                    "combined needs length M=%d, was given %d entries."
                    % (len(truth), combined.size)
                )
        for name, column in (("model", model_labels), ("truth", truth), ("combined", combined)):
            if column is None:
                continue
            if column.min() < 0 or column.max() >= ymax:
                raise ValueError(
                    f"{name} labels must lie in [0, {ymax}), found range "
                    f"[{column.min()}, {column.max()}]"
                )
        model_labels.setflags(write=False)
        truth.setflags(write=False)
        if combined is not None:
            combined.setflags(write=False)
        self._models = model_labels
        self._truth = truth
        self._combined = combined
        self._ymax = ymax

    @property
    def model_labels(self):
        return self._models

    @property
    def truth(self):
        return self._truth

    @property
    def combined(self):
        return self._combined

    @property
    def ymax(self):
        return self._ymax

    @property
    def n_models(self):
        return self._models.shape[0]

    @property
    def n_instances(self):
        return self._models.shape[1]

    def has_combined(self):
        return self._combined is not None

    def with_combined(self, combined):
        """A copy of this table carrying the given combined column."""
        return PredictionTable(self._models, self._truth, self._ymax, combined=combined)

    def without_combined(self):
        return PredictionTable(self._models, self._truth, self._ymax)

    def error_rate(self):
        """Observed Pr[Yhat != Y]; requires the combined column."""
        if self._combined is None:
            raise KeyError("Table has no combined column")
        return float(np.mean(self._combined != self._truth))

    def digest(self):
        """sha256 over the canonical CSV bytes of this table."""
        return hashlib.sha256(self.to_csv().encode("utf8")).hexdigest()

    def __len__(self):
        """The number of instances."""
        return self.n_instances

    def __eq__(self, other):
        if not isinstance(other, PredictionTable):
            return NotImplemented
        if self._ymax != other._ymax or self.has_combined() != other.has_combined():
            return False
        if self._models.shape != other._models.shape:
            return False
        same = np.array_equal(self._models, other._models) and np.array_equal(
            self._truth, other._truth
        )
        if self.has_combined():
            same = same and np.array_equal(self._combined, other._combined)
        return bool(same)

    def __repr__(self):
        return "PredictionTable(N=%d, M=%d, ymax=%d, combined=%s)" % (
            self.n_models,
            self.n_instances,
            self._ymax,
            self.has_combined(),
        )

    @staticmethod
    @takes_stream(0, "r")
    def parse(f, ymax=None):
        """Parses a table in the y[,yhat],o1,...,oN format.

        Blank lines are ignored.  When ymax is None it is inferred as 1 + the
        largest truth label; a given ymax must exceed every stored label.
        """
        fname = getattr(f, "name", "stream")
        lines = [(no, line.strip()) for no, line in enumerate(f, start=1)]
        lines = [(no, line) for no, line in lines if line]
        if not lines:
            raise ValueError(f"Could not parse prediction table, {fname} is empty")

        header_no, header = lines[0]
        columns = [c.strip() for c in header.split(",")]
        if not columns or columns[0] != "y":
            raise ValueError(
                f"Line {header_no}: header must start with 'y', got {header!r}"
            )
        has_combined = len(columns) > 1 and columns[1] == "yhat"
        model_columns = columns[2:] if has_combined else columns[1:]
        expected = [f"o{i}" for i in range(1, len(model_columns) + 1)]
        if not model_columns or model_columns != expected:
            raise ValueError(
                f"Line {header_no}: expected model columns {','.join(expected) or 'o1'}, "
                f"got {','.join(model_columns) or 'none'}"
            )

        rows = []
        for no, line in lines[1:]:
            fields = line.split(",")
            if len(fields) != len(columns):
                raise ValueError(
                    f"Line {no}: expected {len(columns)} fields, got {len(fields)}"
                )
            rows.append([_parse_label(token.strip(), no) for token in fields])
        if not rows:
            raise ValueError(f"Could not parse prediction table, {fname} has no rows")

        data = np.array(rows, dtype=np.int64)
        truth = data[:, 0]
        combined = data[:, 1] if has_combined else None
        models = data[:, 2:].T if has_combined else data[:, 1:].T

        inferred = int(truth.max()) + 1
        if ymax is None:
            ymax = inferred
        elif ymax < inferred:
            raise ValueError(
                f"--classes {ymax} is below the largest truth label {inferred - 1}"
            )
        largest = max(int(models.max()), int(combined.max()) if has_combined else 0)
        if largest >= ymax:
            raise ValueError(
                f"Label {largest} is not below the class count {ymax}"
            )
        logging.info(
            "Parsed %s: %d models, %d instances, %d classes",
            fname,
            models.shape[0],
            models.shape[1],
            ymax,
        )
        return PredictionTable(models, truth, ymax, combined=combined)

    def write_to_stream(self, out):
        """Writes the header line and one comma separated row per instance."""
        out.write(self.to_csv())

    def to_csv(self):
        header = ["y"]
        if self.has_combined():
            header.append("yhat")
        header.extend(f"o{i}" for i in range(1, self.n_models + 1))
        columns = [self._truth]
        if self.has_combined():
            columns.append(self._combined)
        columns.extend(self._models)
        data = np.column_stack(columns)
        lines = [",".join(header)]
        lines.extend(",".join(str(v) for v in row) for row in data.tolist())
        return "\n".join(lines) + "\n"

    def write(self, fname, overwrite=False):
        """Writes the table to fname.  Refuses to replace an existing file
        unless overwrite is set.  Returns the number of rows written.
        """
        if not overwrite and exists(fname):
            raise IOError(
                "Filename %s exists, cannot overwrite unless explicitly told to!"
                % fname
            )
        with open(fname, "w") as fname_out:
            self.write_to_stream(fname_out)
        return len(self)
