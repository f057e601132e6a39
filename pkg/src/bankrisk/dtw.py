"""Dynamic time warping over short univariate series.

Cumulative alignment cost with absolute-difference local cost and the
classic three-way recurrence, no warping-window constraint. Series here
are composite-index paths of at most a couple of decades, so the plain
O(n*m) table is already cheap; the inner loop avoids numpy on purpose
because allocation overhead dominates at these sizes.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import AllZeroDistances, EmptySeries, InvalidInput

_INF = float("inf")


def dtw_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Alignment cost D(|a|, |b|); symmetric, zero iff optimal alignment
    meets only equal values."""
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise EmptySeries("dtw_distance needs two non-empty sequences")
    prev = [_INF] * (m + 1)
    prev[0] = 0.0
    for i in range(n):
        ai = a[i]
        cur = [_INF] * (m + 1)
        for j in range(1, m + 1):
            best = prev[j]
            left = cur[j - 1]
            if left < best:
                best = left
            diag = prev[j - 1]
            if diag < best:
                best = diag
            cur[j] = abs(ai - b[j - 1]) + best
        prev = cur
    total = prev[m]
    if not math.isfinite(total):
        raise InvalidInput("non-finite values in dtw input")
    return total


def similarity(distance: float, gamma: float) -> float:
    """exp(-gamma * distance): 1 at zero distance, strictly decreasing,
    never reaching 0 at finite distance. When the exponential underflows,
    the smallest subnormal stands in so weights stay strictly positive."""
    if distance < 0 or not math.isfinite(distance):
        raise InvalidInput(f"distance must be finite non-negative: {distance}")
    if gamma <= 0 or not math.isfinite(gamma):
        raise InvalidInput(f"gamma must be finite positive: {gamma}")
    v = math.exp(-gamma * distance)
    return v if v > 0.0 else 5e-324


def median_gamma(distances: Sequence[float]) -> float:
    """Bandwidth giving the median positive distance similarity 0.5."""
    positive = sorted(d for d in distances if d > 0)
    if not positive:
        raise AllZeroDistances(
            "all pairwise distances are zero; pin gamma explicitly")
    k = len(positive)
    half = k // 2
    if k % 2:
        med = positive[half]
    else:
        med = 0.5 * (positive[half - 1] + positive[half])
    return math.log(2.0) / med
