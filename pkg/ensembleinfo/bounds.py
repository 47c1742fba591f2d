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

"""Fano-type lower bounds on the error rate of a combined prediction.

All values are raw reals: bounds may be negative and are never clamped, so
reductions against a negative baseline keep their sign semantics.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from math import isnan, log2, nan, sqrt
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import entr
from scipy.stats import pearsonr

# Curvature of the tangent quadratic, m = 4, enters as 2x^2 = (m/2)x^2.
_HALF_CURVATURE = 2.0
_TAU_EPS = 1e-12


class Diagnostic(str, Enum):
    OK = "Ok"
    NEGATIVE_DISCRIMINANT = "NegativeDiscriminant"
    ZERO_SLOPE_HANDLED = "ZeroSlopeHandled"


class Regime(str, Enum):
    MILD_P0 = "MildP0"
    LARGE_P0 = "LargeP0"
    ALWAYS_TIGHT = "AlwaysTight"


@dataclass(frozen=True)
class BoundResult:
    value: float
    defined: bool
    diagnostic: Diagnostic

    def __post_init__(self):
        if self.defined == (self.diagnostic == Diagnostic.NEGATIVE_DISCRIMINANT):
            raise ValueError(
                f"defined={self.defined} is inconsistent with {self.diagnostic.value}"
            )

    def value_or(self, default):
        return self.value if self.defined else default


@dataclass(frozen=True)
class TightnessDiagnostics:
    tau: float
    delta_roots: Optional[Tuple[float, float]]
    regime: Regime


def _check_ymax(ymax):
    if ymax < 2:
        raise ValueError(f"Bounds need ymax >= 2, not {ymax}")


def binary_entropy(p):
    """H2(p) in bits, with H2(0) = H2(1) = 0."""
    if isnan(p) or not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], not {p}")
    return float((entr(p) + entr(1.0 - p)) / np.log(2))


def u_func(p, ymax):
    """U(p) = H2(p) + p log2(ymax - 1)."""
    _check_ymax(ymax)
    return binary_entropy(p) + p * log2(ymax - 1)


def u_prime(p, ymax):
    _check_ymax(ymax)
    if not 0.0 < p < 1.0:
        raise ValueError(f"U'(p) diverges at the endpoints, p must lie in (0, 1), not {p}")
    return log2((1.0 - p) / p) + log2(ymax - 1)


def bound_loose(info, h_y, ymax):
    """(H(Y) - I - 1) / log2 ymax, negative values included."""
    _check_ymax(ymax)
    return (h_y - info - 1.0) / log2(ymax)


def fano_loose(cond_entropy, ymax):
    """(H(Y|O) - 1) / log2 ymax."""
    _check_ymax(ymax)
    return (cond_entropy - 1.0) / log2(ymax)


def fano_bound(cond_entropy, ymax):
    """Smallest p in [0, (ymax-1)/ymax] with U(p) >= H(Y|Yhat).

    U increases on that interval from 0 to log2 ymax.
    """
    _check_ymax(ymax)
    p_max = (ymax - 1) / ymax
    if cond_entropy <= 0.0:
        return 0.0
    if cond_entropy >= log2(ymax):
        return p_max
    return brentq(lambda p: u_func(p, ymax) - cond_entropy, 0.0, p_max, xtol=1e-15)


def bound_tight(strength, h_y, cfg):
    """p0 plus the smaller root of 2x^2 - U'(p0) x + (h_y - strength - U(p0)).

    Every error rate consistent with the strength lies between the roots,
    so the smaller one bounds it from below.
    """
    slope = u_prime(cfg.p0, cfg.ymax)
    offset = h_y - strength - u_func(cfg.p0, cfg.ymax)
    discriminant = slope * slope - 4.0 * _HALF_CURVATURE * offset
    if discriminant < 0.0:
        logging.warning(
            "Tight bound undefined at p0=%.4f: negative discriminant %.3g",
            cfg.p0,
            discriminant,
        )
        return BoundResult(nan, False, Diagnostic.NEGATIVE_DISCRIMINANT)
    root = (slope - sqrt(discriminant)) / (2.0 * _HALF_CURVATURE)
    diagnostic = Diagnostic.ZERO_SLOPE_HANDLED if slope == 0.0 else Diagnostic.OK
    return BoundResult(cfg.p0 + root, True, diagnostic)


def tightness_diagnostics(cfg):
    """Where the tight bound at p0 exceeds the loose one.

    With x the offset of the tight bound from p0, the tight bound wins when
    2x^2 - 4 tau x - K >= 0, K = H2(p0) + p0 log2((ymax-1)/ymax) - 1.
    delta_roots are the two roots of that quadratic, ascending, or None
    when it has none.
    """
    p0, ymax = cfg.p0, cfg.ymax
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"p0 must lie strictly between 0 and 1, not {p0}")
    _check_ymax(ymax)
    tau = 0.25 * (log2((1.0 - p0) / p0) - log2(ymax / (ymax - 1)))
    k = binary_entropy(p0) + p0 * log2((ymax - 1) / ymax) - 1.0
    threshold_regime = (
        Regime.MILD_P0 if p0 <= (ymax - 1) / (2 * ymax - 1) else Regime.LARGE_P0
    )

    if abs(tau) <= _TAU_EPS:
        roots = (-sqrt(k / 2.0), sqrt(k / 2.0)) if k >= 0.0 else None
        return TightnessDiagnostics(tau, roots, threshold_regime)

    radicand = 1.0 + k / (2.0 * tau * tau)
    if radicand < 0.0:
        # the crossover analysis only covers p0 up to random guessing
        regime = Regime.ALWAYS_TIGHT if p0 <= (ymax - 1) / ymax else threshold_regime
        return TightnessDiagnostics(tau, None, regime)
    spread = tau * sqrt(radicand)
    roots = tuple(sorted((tau - spread, tau + spread)))
    return TightnessDiagnostics(tau, roots, threshold_regime)


def error_rate_reduction(er_baseline, er_system):
    """Relative error-rate reduction in percent."""
    if er_baseline == 0:
        raise ValueError("Error-rate reduction needs a nonzero baseline error rate")
    return (er_baseline - er_system) / er_baseline * 100.0


def lower_bound_reduction(lb_baseline, lb_system):
    """Relative lower-bound reduction in percent, over |baseline|."""
    if lb_baseline == 0:
        raise ValueError("Lower-bound reduction needs a nonzero baseline bound")
    return (lb_baseline - lb_system) / abs(lb_baseline) * 100.0


def pearson(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError(f"Need two equally long series, got {xs.shape} and {ys.shape}")
    if len(xs) < 2:
        raise ValueError("Pearson correlation needs at least two points")
    if np.ptp(xs) == 0 or np.ptp(ys) == 0:
        raise ValueError("Pearson correlation undefined for a constant series")
    r = pearsonr(xs, ys)[0]
    return float(min(1.0, max(-1.0, r)))


def anchor_p0(error_rate, m):
    """An observed error rate usable as p0, clamped to [1/(2M), 1 - 1/(2M)]."""
    low, high = 1.0 / (2 * m), 1.0 - 1.0 / (2 * m)
    if not low <= error_rate <= high:
        logging.warning(
            "Error rate %.4f cannot anchor the tight bound, clamping to [%.4g, %.4g]",
            error_rate,
            low,
            high,
        )
    return min(max(error_rate, low), high)
