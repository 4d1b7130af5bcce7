"""Dyadic-grid paths and their exact Faber-Schauder decomposition.

A path sampled at the 2**n + 1 dyadic points k * 2**-n of [0, 1] decomposes
uniquely into an affine part plus triangular hat functions:

    x = x(0) + (x(1) - x(0)) * t  +  sum_{m,k} theta[m][k] * e(m, k, t)

where e(m, k, t) = 2**(-m/2) * e(0, 0, 2**m * t - k) and e(0, 0, .) is the
unit hat peaking at 1/2. The coefficient theta[m][k] is the scaled second
difference of x at the level-m midpoint, so levels 0 .. n-1 are exactly
recoverable from the grid samples. The cumulative coefficient energy

    s_j = sqrt(sum of theta**2 over levels < j),   xi_j = log2(s_j) / j

drives every estimator downstream: the level profile of s_j encodes the
roughness of the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegeneratePath,
    DepthExceeded,
    IndexOutOfRange,
    LengthMismatch,
    NonFinite,
)

__all__ = [
    "DyadicSeries",
    "FaberSchauderPyramid",
    "EnergyTrace",
    "from_samples",
    "fs_analyze",
    "fs_synthesize",
    "fs_eval",
    "energy_trace",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DyadicSeries:
    """Path values at k * 2**-resolution for k = 0 .. 2**resolution.

    Instances are immutable (the array is marked read-only) and safe to
    share across threads.
    """

    values: np.ndarray
    resolution: int

    def __post_init__(self):
        object.__setattr__(self, "values", _readonly(self.values))

    def __len__(self) -> int:
        return self.values.size

    def scaled(self, factor: float) -> "DyadicSeries":
        """The series factor * x, revalidated."""
        return from_samples(self.values * factor, self.resolution)


@dataclass(frozen=True)
class FaberSchauderPyramid:
    """Boundary terms plus hat coefficients for levels 0 .. depth-1.

    ``theta[m]`` holds the 2**m level-m coefficients. Synthesis at depth
    reproduces the analyzed series exactly up to roundoff.
    """

    x0: float
    slope: float
    theta: tuple[np.ndarray, ...]
    depth: int

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(_readonly(t) for t in self.theta))
        for m, level in enumerate(self.theta):
            if level.size != 2**m:
                raise LengthMismatch(f"level {m} has {level.size} coefficients, expected {2**m}")
        if len(self.theta) != self.depth:
            raise LengthMismatch(f"{len(self.theta)} levels for depth {self.depth}")

    def level(self, m: int) -> np.ndarray:
        if not 0 <= m < self.depth:
            raise IndexOutOfRange(f"level {m} outside 0..{self.depth - 1}")
        return self.theta[m]

    def flip_signs(self, signs: list[np.ndarray]) -> "FaberSchauderPyramid":
        """New pyramid with theta multiplied levelwise by +-1 arrays."""
        flipped = tuple(t * s for t, s in zip(self.theta, signs))
        return FaberSchauderPyramid(self.x0, self.slope, flipped, self.depth)


@dataclass(frozen=True)
class EnergyTrace:
    """Cumulative coefficient energy s_j and its normalization xi_j.

    ``s[j-1]`` is s_j for j = 1 .. depth; ``xi`` holds log2(s_j)/j with NaN
    where s_j = 0, flagged by ``xi_defined`` instead of propagating NaN
    downstream. ``s_squared`` keeps the pre-sqrt sums for callers that need
    the extra precision.
    """

    s: np.ndarray
    xi: np.ndarray
    xi_defined: np.ndarray
    s_squared: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "s", _readonly(self.s))
        object.__setattr__(self, "xi", _readonly(self.xi))
        object.__setattr__(self, "s_squared", _readonly(self.s_squared))
        flags = np.ascontiguousarray(self.xi_defined, dtype=bool)
        flags.flags.writeable = False
        object.__setattr__(self, "xi_defined", flags)

    @property
    def depth(self) -> int:
        return self.s.size

    def require_positive(self, j: int) -> float:
        """s_j**2, raising DegeneratePath when the energy vanishes."""
        if not 1 <= j <= self.depth:
            raise IndexOutOfRange(f"s_{j} not computed for depth {self.depth}")
        s2 = float(self.s_squared[j - 1])
        if s2 <= 0.0:
            raise DegeneratePath(f"path has zero coefficient energy through level {j - 1}")
        return s2


def from_samples(values, n: int) -> DyadicSeries:
    """Validate raw samples as a resolution-n dyadic series.

    Raises LengthMismatch unless len(values) == 2**n + 1 and NonFinite if
    any sample is NaN or infinite.
    """
    if n < 1:
        raise LengthMismatch(f"resolution must be >= 1, got {n}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size != 2**n + 1:
        raise LengthMismatch(f"expected {2**n + 1} samples for resolution {n}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        bad = int(np.flatnonzero(~np.isfinite(arr))[0])
        raise NonFinite(f"non-finite sample at index {bad}")
    return DyadicSeries(arr, n)


def fs_analyze(series: DyadicSeries) -> FaberSchauderPyramid:
    """Coefficients theta[m][k] = 2**(m/2) * (2*x(mid) - x(left) - x(right)).

    Each level is read directly off the grid samples (no recursive
    differencing), so every coefficient matches its defining formula
    bit for bit.
    """
    v = series.values
    n = series.resolution
    levels = []
    for m in range(n):
        step = 1 << (n - m)
        half = step >> 1
        left = v[0 : (1 << m) * step : step]
        right = v[step : (1 << m) * step + 1 : step]
        mid = v[half::step]
        levels.append(2.0 ** (m / 2.0) * (2.0 * mid - left - right))
    return FaberSchauderPyramid(
        x0=float(v[0]),
        slope=float(v[-1] - v[0]),
        theta=tuple(levels),
        depth=n,
    )


def fs_synthesize(pyramid: FaberSchauderPyramid, n: int) -> DyadicSeries:
    """Evaluate the truncated expansion (levels < n) on the resolution-n grid.

    Works by successive midpoint displacement: hat functions of level m
    vanish at every grid point coarser than level m+1, so inserting
    midpoints level by level reproduces the partial sum exactly.
    """
    if n > pyramid.depth:
        raise DepthExceeded(f"requested level {n} exceeds pyramid depth {pyramid.depth}")
    if n < 1:
        raise LengthMismatch(f"synthesis resolution must be >= 1, got {n}")
    v = np.array([pyramid.x0, pyramid.x0 + pyramid.slope], dtype=np.float64)
    for m in range(n):
        out = np.empty(2 * (v.size - 1) + 1, dtype=np.float64)
        out[0::2] = v
        # peak of the level-m hat is 2**(-m/2 - 1)
        out[1::2] = 0.5 * (v[:-1] + v[1:]) + 2.0 ** (-m / 2.0 - 1.0) * pyramid.theta[m]
        v = out
    return DyadicSeries(v, n)


def fs_eval(m: int, k: int, t: float) -> float:
    """Value of the hat function e(m, k) at t in [0, 1]."""
    if m < 0 or not 0 <= k <= 2**m - 1:
        raise IndexOutOfRange(f"(m, k) = ({m}, {k}) is not a valid hat index")
    u = math.ldexp(t, m) - k  # 2**m * t - k, exact for dyadic t
    return 2.0 ** (-m / 2.0) * max(min(u, 1.0 - u), 0.0)


def energy_trace(pyramid: FaberSchauderPyramid) -> EnergyTrace:
    """Cumulative energies s_j and normalized exponents xi_j for j = 1 .. depth.

    Level sums and their running total use exact (fsum) accumulation so
    the downstream 1e-12 identity checks hold even at depth 16.
    """
    level_energy = [math.fsum(float(x) * float(x) for x in t) for t in pyramid.theta]
    depth = pyramid.depth
    s2 = np.array([math.fsum(level_energy[:j]) for j in range(1, depth + 1)])
    s = np.sqrt(s2)
    defined = s2 > 0.0
    xi = np.full(depth, np.nan)
    j = np.arange(1, depth + 1)
    with np.errstate(divide="ignore"):
        xi[defined] = np.log2(s2[defined]) / (2.0 * j[defined])
    return EnergyTrace(s=s, xi=xi, xi_defined=defined, s_squared=s2)
