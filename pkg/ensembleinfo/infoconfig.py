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

from dataclasses import field
from pathlib import Path
from typing import List, Optional

try:
    from pydantic.v1.dataclasses import dataclass
except ImportError:
    from pydantic.dataclasses import dataclass

from typing_extensions import Literal

DEFAULT_C_GRID = [1e-2, 3e-2, 1e-1, 3e-1, 1e0]
DEFAULT_N_VALUES = [1, 2, 5, 10, 15, 20, 30]
COMBINER_NAMES = ("vote", "weighted-vote", "stacking", "best-model")
REGIME_NAMES = ("random-seed", "bagging", "random-hyp", "hetero")


class EnsembleInfoConfig:
    validate_all = True
    validate_assignment = True
    extra = "forbid"
    arbitrary_types_allowed = True


@dataclass(config=EnsembleInfoConfig)
class MtiConfig:
    mode: Literal["exact", "mti"] = "exact"
    k: int = 3

    def __post_init_post_parse__(self):
        if self.k < 1:
            raise ValueError(f"MTI subset size k must be >= 1, not {self.k}")

    def describe(self):
        return "exact" if self.mode == "exact" else f"mti(k={self.k})"


@dataclass(config=EnsembleInfoConfig)
class BoundConfig:
    p0: float
    ymax: int

    def __post_init_post_parse__(self):
        if not 0.0 < self.p0 < 1.0:
            raise ValueError(f"p0 must lie strictly between 0 and 1, not {self.p0}")
        if self.ymax < 2:
            raise ValueError(f"Bounds need ymax >= 2, not {self.ymax}")


@dataclass(config=EnsembleInfoConfig)
class StackingConfig:
    meta_folds: int = 4
    inner_folds: int = 5
    c_grid: List[float] = field(default_factory=lambda: list(DEFAULT_C_GRID))
    seed: int = 0

    def __post_init_post_parse__(self):
        if self.meta_folds < 2 or self.inner_folds < 2:
            raise ValueError("Stacking needs at least 2 outer and 2 inner folds")
        if not self.c_grid or min(self.c_grid) <= 0:
            raise ValueError("The C grid needs at least one positive value")


@dataclass(config=EnsembleInfoConfig)
class SynthConfig:
    n_models: int
    n_instances: int
    per_model_error: List[float]
    ymax: int = 2
    shared_noise: float = 0.0
    truth_prior: Optional[List[float]] = None
    seed: int = 0

    def __post_init_post_parse__(self):
        if self.n_models < 1 or self.n_instances < 1:
            raise ValueError("Need at least one model and one instance")
        if self.ymax < 2:
            raise ValueError(f"Synthetic systems need ymax >= 2, not {self.ymax}")
        if len(self.per_model_error) != self.n_models:
            raise ValueError(
                "per_model_error needs %d entries, got %d"
                % (self.n_models, len(self.per_model_error))
            )
        if any(not 0.0 <= e < 1.0 for e in self.per_model_error):
            raise ValueError(f"Model error rates must lie in [0, 1): {self.per_model_error}")
        if not 0.0 <= self.shared_noise <= 1.0:
            raise ValueError(f"shared_noise must lie in [0, 1], not {self.shared_noise}")
        if self.truth_prior is not None:
            if len(self.truth_prior) != self.ymax:
                raise ValueError(
                    "truth_prior needs %d entries, got %d"
                    % (self.ymax, len(self.truth_prior))
                )
            if min(self.truth_prior) < 0 or abs(sum(self.truth_prior) - 1.0) > 1e-9:
                raise ValueError(f"truth_prior is not a distribution: {self.truth_prior}")

    @property
    def prior(self):
        if self.truth_prior is None:
            return [1.0 / self.ymax] * self.ymax
        return list(self.truth_prior)

    def resized(self, n_models):
        """The same system with n_models models, error rates cycled."""
        errors = [self.per_model_error[i % len(self.per_model_error)] for i in range(n_models)]
        return SynthConfig(
            n_models=n_models,
            n_instances=self.n_instances,
            per_model_error=errors,
            ymax=self.ymax,
            shared_noise=self.shared_noise,
            truth_prior=self.truth_prior,
            seed=self.seed,
        )


@dataclass(config=EnsembleInfoConfig)
class SweepConfig:
    system: SynthConfig
    n_values: List[int] = field(default_factory=lambda: list(DEFAULT_N_VALUES))
    combiner: Literal["vote", "weighted-vote", "stacking", "best-model"] = "vote"
    mti: MtiConfig = field(default_factory=MtiConfig)
    stacking: StackingConfig = field(default_factory=StackingConfig)
    p0: Optional[float] = None
    output_dir: Path = field(default_factory=lambda: Path("."))

    def __post_init_post_parse__(self):
        if not self.n_values or min(self.n_values) < 1:
            raise ValueError("n_values needs positive model counts")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError(f"n_values must be strictly ascending: {self.n_values}")

    def set_base_path(self, new_base):
        """
        sets the base path for relative paths in the config.
        """
        if not self.output_dir.is_absolute():
            self.output_dir = Path(new_base).joinpath(self.output_dir)


@dataclass(config=EnsembleInfoConfig)
class SuiteConfig:
    n_models: int = 15
    n_instances: int = 5000
    ymax: int = 2
    seed: int = 0
    regimes: List[Literal["random-seed", "bagging", "random-hyp", "hetero"]] = field(
        default_factory=lambda: list(REGIME_NAMES)
    )
    combiners: List[Literal["vote", "weighted-vote", "stacking", "best-model"]] = field(
        default_factory=lambda: list(COMBINER_NAMES)
    )
    mti: MtiConfig = field(default_factory=MtiConfig)
    stacking: StackingConfig = field(default_factory=StackingConfig)
    output_dir: Path = field(default_factory=lambda: Path("."))

    def __post_init_post_parse__(self):
        if self.n_models < 1 or self.n_instances < 1:
            raise ValueError("Need at least one model and one instance")
        if not self.regimes or not self.combiners:
            raise ValueError("A suite needs at least one regime and one combiner")

    def set_base_path(self, new_base):
        """
        sets the base path for relative paths in the config.
        """
        if not self.output_dir.is_absolute():
            self.output_dir = Path(new_base).joinpath(self.output_dir)
