"""Finite-level diagnostics for the consistency conditions behind the estimators.

None of these certify an asymptotic property; they report finite-n evidence.
The key quantity is the two-sided comparison between the branch moment and
the matching power of the coefficient energy: consistency of the base
estimator needs that comparison to grow subexponentially, so the normalized
curve log2(ratio)/n trending to zero is the useful readout. The remaining
checks bound the spread of coefficients within a level, bracket the
attainable exponent by quantile sums, and test a candidate exponent against
the a-priori relations with the energy exponent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dyadic import EnergyTrace, FaberSchauderPyramid
from .errors import DegeneratePath, IndexOutOfRange, InvalidNu
from .variation import BRANCH_LEVEL_CAP, branch_moment

__all__ = [
    "Verdict",
    "BiasVerdicts",
    "BvReadout",
    "DiagnosticReport",
    "reverse_jensen_ratio",
    "condition_a_ratio",
    "condition_b_ratio",
    "quantile_bounds",
    "bias_report",
    "bv_readout",
    "build_report",
]

QUANTILE_CONVENTION = "left-continuous inverse of the sorted squared coefficients"
QUANTILE_LEVEL_START = 1  # level-0 term divides by 0**nu and is dropped


def reverse_jensen_ratio(
    pyramid: FaberSchauderPyramid,
    p: float,
    n: int,
    level_cap: int = BRANCH_LEVEL_CAP,
) -> float:
    """max(M / s_n**p, s_n**p / M) for the branch moment M at order p.

    Equals 1 exactly at p = 2; values near 1 for other p indicate that the
    two-sided moment comparison is tight at this depth.
    """
    moment = branch_moment(pyramid, n, p, level_cap=level_cap)
    s2 = math.fsum(
        math.fsum((t * t).tolist()) for t in pyramid.theta[:n]
    )
    if s2 <= 0.0:
        raise DegeneratePath(f"zero coefficient energy through level {n - 1}")
    s_pow = 2.0 ** ((p / 2.0) * math.log2(s2))
    if moment <= 0.0:
        raise DegeneratePath(f"branch moment vanished at n={n}")
    return max(moment / s_pow, s_pow / moment)


def condition_a_ratio(pyramid: FaberSchauderPyramid, m: int) -> float:
    """max |theta| / min |theta| within level m; inf when a coefficient is 0."""
    level = np.abs(pyramid.level(m))
    lo = float(level.min())
    hi = float(level.max())
    if lo == 0.0:
        return math.inf if hi > 0.0 else math.nan
    return hi / lo


def condition_b_ratio(pyramid: FaberSchauderPyramid, nu: int, m: int) -> float:
    """max over 2**nu-blocks of the level-m squared-coefficient sums divided
    by the min; nu = 0 reduces to the levelwise ratio squared."""
    if nu < 0:
        raise InvalidNu(f"nu must be >= 0, got {nu}")
    if nu > m:
        raise InvalidNu(f"nu={nu} exceeds level m={m}")
    level = pyramid.level(m)
    blocks = (level * level).reshape(-1, 1 << nu).sum(axis=1)
    lo = float(blocks.min())
    hi = float(blocks.max())
    if lo == 0.0:
        return math.inf if hi > 0.0 else math.nan
    return hi / lo


def quantile_bounds(
    pyramid: FaberSchauderPyramid, nu: int, n: int
) -> tuple[float, float]:
    """Lower/upper exponent proxies from quantile sums of scaled coefficients.

    For each level the empirical distribution of 2**m * theta**2 is probed
    at nu-resolution grid points, floor quantiles feeding the lower sum and
    ceiling quantiles the upper one. Level 0 is excluded (its weight divides
    by 0**nu); the quantile convention is the left-continuous inverse, with
    the order statistics giving F^{-1}(j * 2**-m) for j = 1 .. 2**m and the
    bottom statistic reused at 0.
    """
    if nu < 1:
        raise InvalidNu(f"nu must be >= 1, got {nu}")
    if not 1 <= n <= pyramid.depth:
        raise IndexOutOfRange(f"level {n} outside 1..{pyramid.depth}")
    lower_total = 0.0
    upper_total = 0.0
    for m in range(QUANTILE_LEVEL_START, n):
        scaled = np.sort(np.ldexp(pyramid.level(m) ** 2, m))
        cells = m**nu
        width = 1 << m
        k = np.arange(1, cells + 1)
        lo_idx = (width * (k - 1)) // cells  # floor grid point, in units of 2**-m
        hi_idx = -(-(width * k) // cells)  # ceiling grid point
        lower_total += float(np.sum(scaled[np.maximum(lo_idx, 1) - 1])) / cells
        upper_total += float(np.sum(scaled[np.maximum(hi_idx, 1) - 1])) / cells
    if lower_total <= 0.0 or upper_total <= 0.0:
        raise DegeneratePath("quantile sums vanished; path is flat on the grid")
    return (
        math.log2(lower_total) / (2.0 * n),
        math.log2(upper_total) / (2.0 * n),
    )


Verdict = str  # "consistent" | "violated" | "inconclusive"


@dataclass(frozen=True)
class BiasVerdicts:
    """Tri-state checks of a candidate exponent against the energy exponent.

    Margins are signed distances to the violation boundary (positive =
    consistent); verdicts allow slack ``tolerance`` for finite-level noise
    in the energy exponent proxy.
    """

    xi: float
    candidate: float
    tolerance: float
    half_rule: Verdict
    half_margin: float
    low_rule: Verdict
    low_margin: Optional[float]
    high_rule: Verdict
    high_margin: Optional[float]

    def as_dict(self) -> dict:
        return {
            "xi": self.xi,
            "candidate": self.candidate,
            "tolerance": self.tolerance,
            "rules": {
                "energy_exponent_side": {"verdict": self.half_rule, "margin": self.half_margin},
                "rough_candidate_bound": {"verdict": self.low_rule, "margin": self.low_margin},
                "smooth_candidate_bound": {"verdict": self.high_rule, "margin": self.high_margin},
            },
        }


def _verdict(margin: float, tolerance: float) -> Verdict:
    return "consistent" if margin >= -tolerance else "violated"


def bias_report(trace: EnergyTrace, H_candidate: float, tolerance: float = 0.05) -> BiasVerdicts:
    """Check a candidate exponent against the deepest available energy exponent.

    Three a-priori relations are tested, using xi_n at max depth as the
    proxy: an energy exponent above 1/2 forces the true exponent to its
    rough side (and below 1/2 to its smooth side); a candidate at or below
    1/2 must not exceed 1 - xi; a candidate at or above 1/2 must not fall
    below 1 - xi.
    """
    n = trace.depth
    if not trace.xi_defined[n - 1]:
        raise DegeneratePath("energy exponent undefined at the deepest level")
    xi = float(trace.xi[n - 1])
    h = float(H_candidate)

    if xi > 0.5:
        half_margin = 0.5 - h
    elif xi < 0.5:
        half_margin = h - 0.5
    else:
        half_margin = 0.0
    half_rule = _verdict(half_margin, tolerance)

    if h <= 0.5:
        low_margin = (1.0 - xi) - h
        low_rule = _verdict(low_margin, tolerance)
    else:
        low_margin, low_rule = None, "inconclusive"

    if h >= 0.5:
        high_margin = h - (1.0 - xi)
        high_rule = _verdict(high_margin, tolerance)
    else:
        high_margin, high_rule = None, "inconclusive"

    return BiasVerdicts(
        xi=xi, candidate=h, tolerance=tolerance,
        half_rule=half_rule, half_margin=half_margin,
        low_rule=low_rule, low_margin=low_margin,
        high_rule=high_rule, high_margin=high_margin,
    )


@dataclass(frozen=True)
class BvReadout:
    """Growth readout of the energy sequence.

    A bounded energy sequence certifies bounded variation of the path, so
    ``sup_s`` staying flat (increments near zero) is the signature of a
    smooth path; for self-similar paths the increments settle near
    1 - exponent.
    """

    sup_s: float
    log2_increments: np.ndarray

    def slope(self, j_lo: int, j_hi: int) -> float:
        """Mean per-level growth of log2 s_j over j_lo < j <= j_hi."""
        seg = self.log2_increments[j_lo - 1 : j_hi - 1]
        if seg.size == 0 or np.any(np.isnan(seg)):
            return math.nan
        return float(np.mean(seg))


def bv_readout(trace: EnergyTrace) -> BvReadout:
    """Max s_n observed plus the per-level increments of log2 s_n."""
    s = trace.s
    inc = np.full(max(s.size - 1, 0), np.nan)
    for j in range(s.size - 1):
        if s[j] > 0.0 and s[j + 1] > 0.0:
            inc[j] = math.log2(s[j + 1]) - math.log2(s[j])
    return BvReadout(sup_s=float(s.max()) if s.size else 0.0, log2_increments=inc)


@dataclass(frozen=True)
class DiagnosticReport:
    """Bundle of every diagnostic, ready for serialization.

    Infinite ratios are carried as None plus an ``infinite`` flag so the
    JSON stays portable.
    """

    reverse_jensen: tuple[dict, ...]
    condition_a: tuple[dict, ...]
    condition_b: tuple[dict, ...]
    quantile: Optional[dict]
    bias: Optional[dict]
    bv: dict
    notes: tuple[str, ...]


def _flag_ratio(value: float) -> dict:
    if math.isinf(value):
        return {"value": None, "infinite": True}
    if math.isnan(value):
        return {"value": None, "infinite": False, "undefined": True}
    return {"value": value, "infinite": False}


def build_report(
    pyramid: FaberSchauderPyramid,
    trace: EnergyTrace,
    p_grid: list[float],
    nu: int = 2,
    n_grid: Optional[list[int]] = None,
    H_candidate: Optional[float] = None,
    level_cap: int = BRANCH_LEVEL_CAP,
) -> DiagnosticReport:
    """Assemble the full diagnostic bundle for one analyzed path."""
    depth = pyramid.depth
    ns = n_grid if n_grid is not None else list(range(2, depth + 1))
    rj = []
    for p in p_grid:
        for n in ns:
            if n > min(depth, level_cap):
                continue
            try:
                r = reverse_jensen_ratio(pyramid, p, n, level_cap=level_cap)
            except DegeneratePath:
                continue
            rj.append({"p": p, "n": n, "ratio": r, "normalized_log2": math.log2(r) / n})
    cond_a = [
        {"m": m, **_flag_ratio(condition_a_ratio(pyramid, m))} for m in range(depth)
    ]
    cond_b = [
        {"m": m, "nu": nu, **_flag_ratio(condition_b_ratio(pyramid, nu, m))}
        for m in range(max(nu, 0), depth)
    ]
    quantile = None
    if nu >= 1 and depth >= 2:
        try:
            lo, hi = quantile_bounds(pyramid, nu, depth)
            quantile = {
                "nu": nu, "n": depth, "lower": lo, "upper": hi,
                "exponent_range": [1.0 - hi, 1.0 - lo],
                "convention": QUANTILE_CONVENTION,
                "level_start": QUANTILE_LEVEL_START,
            }
        except DegeneratePath:
            quantile = None
    bias = None
    if H_candidate is not None:
        bias = bias_report(trace, H_candidate).as_dict()
    readout = bv_readout(trace)
    bv = {
        "sup_s": readout.sup_s,
        "log2_increments": [None if math.isnan(v) else v for v in readout.log2_increments],
    }
    notes = (
        f"quantile sums start at level {QUANTILE_LEVEL_START}",
        f"quantile convention: {QUANTILE_CONVENTION}",
    )
    return DiagnosticReport(
        reverse_jensen=tuple(rj),
        condition_a=tuple(cond_a),
        condition_b=tuple(cond_b),
        quantile=quantile,
        bias=bias,
        bv=bv,
        notes=notes,
    )
