"""Bandwidth rate anchors, dyadic block grids and envelope truncation.

Natural logarithms throughout. The loglog term in the normalizer is clamped
via max(n, 16) so it stays positive and monotone for small n; the theory is
asymptotic and silent there.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    BandwidthOutOfRange,
    EmptyBandwidthRange,
    InvalidBandwidth,
    SampleTooSmall,
)


@dataclass(frozen=True)
class RateRegime:
    kind: str  # "bounded" | "unbounded"
    c: float
    m: int
    b0: float
    p: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("bounded", "unbounded"):
            raise ValueError(f"unknown regime kind {self.kind!r}")
        if self.kind == "unbounded" and (self.p is None or self.p <= 2):
            raise ValueError("unbounded regime requires p > 2")
        if not 0 < self.b0 < 1:
            raise ValueError("b0 must lie in (0, 1)")
        if self.c <= 0:
            raise ValueError("c must be positive")


@dataclass(frozen=True)
class DyadicGrid:
    ell: int
    n_ell: int
    anchors: tuple
    L: int


@dataclass(frozen=True)
class TruncationSplit:
    threshold: float
    truncated: Callable
    remainder: Callable


def lower_bandwidth(regime, n):
    """Rate anchor: c (log n / n)^{1/m}, or the p-adjusted version for
    unbounded classes."""
    if n < 3:
        raise SampleTooSmall(f"need n >= 3, got {n}")
    ratio = math.log(n) / n
    if regime.kind == "bounded":
        return regime.c * ratio ** (1.0 / regime.m)
    return regime.c * (ratio ** (1.0 - 2.0 / regime.p)) ** (1.0 / regime.m)


def dyadic_grid(regime, ell):
    """Dyadic block boundaries h_j with h_j^m = 2^j a^m, up to 2*b0."""
    if ell < 2:
        raise ValueError("ell must be >= 2")
    n_ell = 2 ** ell
    a0 = lower_bandwidth(regime, n_ell)
    if a0 > regime.b0:
        raise EmptyBandwidthRange(
            f"anchor {a0:.6g} exceeds b0={regime.b0}; n={n_ell} too small for "
            f"c={regime.c}"
        )
    anchors = [a0]
    j = 1
    while True:
        hj = (2.0 ** j * a0 ** regime.m) ** (1.0 / regime.m)
        if hj > 2.0 * regime.b0:
            break
        anchors.append(hj)
        j += 1
    return DyadicGrid(ell=ell, n_ell=n_ell, anchors=tuple(anchors), L=len(anchors) - 1)


def gamma_threshold(ell, epsilon, p):
    """gamma_ell = n_ell / log n_ell and the truncation level eps*gamma^{1/p}."""
    if ell < 2:
        raise ValueError("ell must be >= 2")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if p <= 2:
        raise ValueError("p must exceed 2")
    gamma = 2.0 ** ell / (ell * math.log(2.0))
    return gamma, epsilon * gamma ** (1.0 / p)


def normalizer(n, h, m):
    """sqrt(n h^m) / sqrt(|log h| v loglog n)."""
    if n < 3:
        raise SampleTooSmall(f"need n >= 3, got {n}")
    if h <= 0:
        raise InvalidBandwidth(f"bandwidth must be positive, got {h}")
    if h >= 1:
        raise BandwidthOutOfRange(
            "the |log h| v loglog n convention assumes h < 1"
        )
    denom = max(abs(math.log(h)), math.log(math.log(max(n, 16))))
    return math.sqrt(n * h ** m) / math.sqrt(denom)


def truncate_split(gbar, ftilde, threshold):
    """Split a symmetrized U-kernel at the envelope level.

    truncated fires on F~(y) <= threshold (boundary included), remainder on
    the complement; the two add back to gbar pointwise.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")

    def truncated(xs, ys):
        return gbar(xs, ys) if ftilde(ys) <= threshold else 0.0

    def remainder(xs, ys):
        return gbar(xs, ys) if ftilde(ys) > threshold else 0.0

    return TruncationSplit(threshold=threshold, truncated=truncated, remainder=remainder)
