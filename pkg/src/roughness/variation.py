"""p-th variation along dyadic partitions and dyadic branch moments.

The branch moment is the exact average, over the 2**(n-1) descent paths of
the dyadic tree, of (sum over levels m < n of 2**m * theta[m][anc]**2)**(p/2),
where ``anc`` follows the branch down the tree. At p = 2 it collapses to the
total coefficient energy s_n**2, and the p-th variation of a path with
x(0) = x(1) = 0 is sandwiched between constant multiples of
2**(n(1-p)) times this moment, which is what ``burkholder_ratio`` reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import DyadicSeries, FaberSchauderPyramid, from_samples
from .errors import (
    InputError,
    InvalidP,
    LevelExceedsResolution,
    ResourceLimit,
    ZeroMoment,
)

__all__ = [
    "VariationProfile",
    "BurkholderRatio",
    "pth_variation",
    "variation_profile",
    "branch_moment",
    "burkholder_ratio",
    "detrend_affine",
    "BRANCH_LEVEL_CAP",
]

# 2**(BRANCH_LEVEL_CAP - 1) branch values is the largest enumeration we
# attempt by default (128 MiB of float64 at the cap).
BRANCH_LEVEL_CAP = 24


@dataclass(frozen=True)
class VariationProfile:
    """Table of V_n(p) over (level, p) plus per-p log2 slopes in n.

    ``values[i, j]`` is the p_grid[j]-variation at level levels[i]. The
    slope row is the least-squares slope of log2 V_n(p) against n, NaN
    when some level has zero variation; negative slopes flag vanishing
    variation (p above the critical order), positive slopes divergence.
    """

    levels: tuple[int, ...]
    p_grid: tuple[float, ...]
    values: np.ndarray
    log2_slopes: np.ndarray


@dataclass(frozen=True)
class BurkholderRatio:
    """Sandwich ratio V_n(p) / (2**(n(1-p)) * branch moment) plus metadata."""

    value: float
    p: float
    n: int
    detrended: bool


def pth_variation(series: DyadicSeries, p: float, n: int) -> float:
    """Sum of |increment|**p over the 2**n dyadic increments of the path."""
    if p <= 0:
        raise InvalidP(f"variation order must be positive, got {p}")
    if not 1 <= n <= series.resolution:
        raise LevelExceedsResolution(
            f"level {n} outside 1..{series.resolution}"
        )
    step = 1 << (series.resolution - n)
    inc = np.abs(np.diff(series.values[::step]))
    if p == 2.0:
        return float(np.dot(inc, inc))
    if p == 1.0:
        return float(np.sum(inc))
    with np.errstate(divide="ignore"):
        out = np.where(inc > 0.0, np.exp(p * np.log(np.where(inc > 0.0, inc, 1.0))), 0.0)
    return float(np.sum(out))


def variation_profile(
    series: DyadicSeries,
    p_grid: list[float],
    levels: list[int],
) -> VariationProfile:
    """V_n(p) over a (levels x p_grid) table with per-p growth slopes.

    The slopes are finite-n proxies for the divergence/vanishing dichotomy
    that defines the critical variation order.
    """
    levels = sorted(set(int(n) for n in levels))
    p_grid = [float(p) for p in p_grid]
    table = np.empty((len(levels), len(p_grid)))
    for i, n in enumerate(levels):
        for j, p in enumerate(p_grid):
            table[i, j] = pth_variation(series, p, n)
    slopes = np.full(len(p_grid), np.nan)
    ns = np.asarray(levels, dtype=np.float64)
    if len(levels) >= 2:
        for j in range(len(p_grid)):
            col = table[:, j]
            if np.all(col > 0.0):
                slopes[j] = np.polyfit(ns, np.log2(col), 1)[0]
    return VariationProfile(tuple(levels), tuple(p_grid), table, slopes)


def _branch_sums(pyramid: FaberSchauderPyramid, n: int) -> np.ndarray:
    """2**m-weighted squared coefficients accumulated along each of the
    2**(n-1) dyadic branches; branch k at level m reads ancestor k >> (n-1-m)."""
    width = 1 << (n - 1)
    sums = np.zeros(width)
    for m in range(n):
        scaled = np.ldexp(pyramid.theta[m] * pyramid.theta[m], m)
        sums += np.repeat(scaled, 1 << (n - 1 - m))
    return sums


def branch_moment(
    pyramid: FaberSchauderPyramid,
    n: int,
    p: float,
    level_cap: int = BRANCH_LEVEL_CAP,
) -> float:
    """Exact branch average of (levelwise energy along a descent)**(p/2).

    Enumerates all 2**(n-1) branches; ancestor indices come from bit
    shifts so the inner loop is a strided repeat. Raises ResourceLimit
    beyond ``level_cap`` levels.
    """
    if p <= 0:
        raise InvalidP(f"moment order must be positive, got {p}")
    if not 1 <= n <= pyramid.depth:
        raise LevelExceedsResolution(f"level {n} outside 1..{pyramid.depth}")
    if n > level_cap:
        raise ResourceLimit(
            f"branch enumeration at n={n} exceeds the cap of {level_cap} levels"
        )
    sums = _branch_sums(pyramid, n)
    q = p / 2.0
    if q == 1.0:
        powered = sums
    else:
        positive = sums > 0.0
        powered = np.where(
            positive, np.exp(q * np.log(np.where(positive, sums, 1.0))), 0.0
        )
    return float(math.fsum(powered.tolist()) / sums.size)


def detrend_affine(series: DyadicSeries) -> DyadicSeries:
    """Subtract the affine interpolant of the endpoints (x(0)=x(1)=0 after)."""
    t = np.linspace(0.0, 1.0, series.values.size)
    adjusted = series.values - series.values[0] - t * (series.values[-1] - series.values[0])
    adjusted[0] = 0.0
    adjusted[-1] = 0.0
    return from_samples(adjusted, series.resolution)


def burkholder_ratio(
    series: DyadicSeries,
    p: float,
    n: int,
    detrend: bool = False,
    level_cap: int = BRANCH_LEVEL_CAP,
) -> BurkholderRatio:
    """V_n(p) divided by 2**(n(1-p)) times the branch moment.

    Requires x(0) = x(1) = 0; pass ``detrend=True`` to subtract the affine
    interpolant first (recorded in the result). The ratio is bounded above
    and below by constants depending only on p, and equals 1 exactly at
    p = 2.
    """
    if detrend:
        series = detrend_affine(series)
    elif series.values[0] != 0.0 or series.values[-1] != 0.0:
        raise InputError(
            "burkholder_ratio requires x(0) = x(1) = 0; pass detrend=True to adjust"
        )
    from .dyadic import fs_analyze

    pyramid = fs_analyze(series)
    moment = branch_moment(pyramid, n, p, level_cap=level_cap)
    if moment == 0.0:
        raise ZeroMoment(f"branch moment vanished at n={n}")
    v = pth_variation(series, p, n)
    return BurkholderRatio(
        value=v / (2.0 ** (n * (1.0 - p)) * moment),
        p=p,
        n=n,
        detrended=detrend,
    )
