"""Roughness-exponent estimators built on the coefficient energy profile.

The base estimate at level n is 1 - log2(s_n)/n. It is consistent but not
scale-invariant: replacing x by lambda*x shifts it by -log2|lambda|/n. The
scale estimators below remove that defect by optimizing log2(lambda) against
a quadratic criterion on the estimate sequence; every criterion used here is
strictly convex in phi = log2(lambda), so each minimizer is the unique root
of a linear derivative and the resulting estimate is an explicit linear
combination of the base estimates. The direct derivative root is the
authoritative computation; the printed weight formulas are evaluated
alongside as a consistency check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dyadic import DyadicSeries, EnergyTrace, energy_trace, fs_analyze
from .errors import (
    DegenerateDesign,
    DegeneratePath,
    IndexOutOfRange,
    InputError,
    LevelExceedsResolution,
    WindowTooDeep,
)

__all__ = [
    "WeightProfile",
    "ScaleEstimate",
    "gladyshev",
    "gladyshev_sequence",
    "gladyshev_from_trace",
    "sequential_scale",
    "terminal_scale",
    "regression_scale",
    "generalized_scale",
    "m_stat",
    "simple_regression",
    "closed_form_weights",
    "scale_estimate_from_gladyshev",
    "scaling_factor_from_gladyshev",
]

_CHECK_TOL = 1e-10


@dataclass(frozen=True)
class WeightProfile:
    """Window length m and weights alpha_0 .. alpha_m for the scale criteria.

    alpha_0 must be positive; later weights may be zero but not negative.
    """

    m: int
    alpha: tuple[float, ...]

    def __post_init__(self):
        if self.m < 0:
            raise InputError(f"window length m must be >= 0, got {self.m}")
        alpha = tuple(float(a) for a in self.alpha)
        if len(alpha) != self.m + 1:
            raise InputError(f"need {self.m + 1} weights for m={self.m}, got {len(alpha)}")
        if alpha[0] <= 0.0:
            raise InputError(f"alpha_0 must be positive, got {alpha[0]}")
        if any(a < 0.0 for a in alpha) or not all(math.isfinite(a) for a in alpha):
            raise InputError("weights must be finite and non-negative")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def uniform(cls, m: int) -> "WeightProfile":
        return cls(m, (1.0,) * (m + 1))

    @classmethod
    def geometric(cls, m: int, ratio: float) -> "WeightProfile":
        """alpha_k = ratio**k (ratio 0.5 gives the 2**-k family)."""
        if ratio <= 0.0:
            raise InputError(f"geometric ratio must be positive, got {ratio}")
        return cls(m, tuple(ratio**k for k in range(m + 1)))

    def normalized(self) -> tuple["WeightProfile", bool]:
        """Rescale to sum 1; second element reports whether anything changed."""
        total = math.fsum(self.alpha)
        if math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-15):
            return self, False
        return WeightProfile(self.m, tuple(a / total for a in self.alpha)), True


@dataclass(frozen=True)
class ScaleEstimate:
    """A scale-invariant estimate plus how it was assembled.

    ``weights[i]`` is the realized linear weight on the base estimate of
    level ``weight_indices[i]``; the weights sum to 1 for the sequential,
    terminal, and regression kinds. ``log2_lambda`` is the optimal
    log2 scaling factor.
    """

    H: float
    log2_lambda: float
    kind: str
    n: int
    profile: Optional[WeightProfile]
    weights: Optional[np.ndarray] = None
    weight_indices: Optional[tuple[int, ...]] = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.weights is not None:
            w = np.ascontiguousarray(self.weights, dtype=np.float64)
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)


# -- base estimator ------------------------------------------------------------


def gladyshev_from_trace(trace: EnergyTrace, n: int) -> float:
    """1 - log2(s_n)/n from a precomputed energy trace."""
    s2 = trace.require_positive(n)
    return 1.0 - math.log2(s2) / (2.0 * n)


def gladyshev(series: DyadicSeries, n: int) -> float:
    """Base roughness estimate at level n; raises DegeneratePath if s_n = 0."""
    if not 1 <= n <= series.resolution:
        raise LevelExceedsResolution(f"level {n} outside 1..{series.resolution}")
    return gladyshev_from_trace(energy_trace(fs_analyze(series)), n)


def gladyshev_sequence(series: DyadicSeries, n_lo: int, n_hi: int) -> np.ndarray:
    """Base estimates for levels n_lo .. n_hi from one shared energy trace."""
    if not 1 <= n_lo <= n_hi <= series.resolution:
        raise LevelExceedsResolution(
            f"levels {n_lo}..{n_hi} outside 1..{series.resolution}"
        )
    trace = energy_trace(fs_analyze(series))
    return np.array([gladyshev_from_trace(trace, j) for j in range(n_lo, n_hi + 1)])


def _hhat_through(series: DyadicSeries, n: int, lowest: int) -> np.ndarray:
    """Array h with h[k] = base estimate at level k for k = lowest..n (h[0..lowest-1] NaN)."""
    if n > series.resolution:
        raise LevelExceedsResolution(f"level {n} exceeds resolution {series.resolution}")
    trace = energy_trace(fs_analyze(series))
    trace.require_positive(lowest)  # s_j is non-decreasing, so all later levels are fine
    h = np.full(n + 1, np.nan)
    for k in range(lowest, n + 1):
        h[k] = gladyshev_from_trace(trace, k)
    return h


# -- closed-form solvers on a base-estimate sequence ---------------------------


def _sequential_weights(n: int, profile: WeightProfile) -> np.ndarray:
    m, alpha = profile.m, profile.alpha
    c = math.fsum(alpha[n - k] / (k**2 * (k - 1) ** 2) for k in range(n - m, n + 1))
    w = np.zeros(m + 2)  # indices n-m-1 .. n
    w[-1] = 1.0 + alpha[0] / (c * n**2 * (n - 1))
    for k in range(n - m, n):
        w[k - (n - m - 1)] = (alpha[n - k] / (k - 1) - alpha[n - k - 1] / (k + 1)) / (c * n * k)
    w[0] = -alpha[m] / (c * n * (n - m) * (n - m - 1))
    return w


def _terminal_weights(n: int, profile: WeightProfile) -> np.ndarray:
    # Derived from the derivative of the terminal criterion: the weight
    # attached to the level-j estimate (j = k - 1) carries alpha[n - j - 1].
    m, alpha = profile.m, profile.alpha
    g = {k: (n - k + 1) / (n * (k - 1)) for k in range(n - m, n + 1)}
    c = math.fsum(alpha[n - k] * g[k] ** 2 for k in range(n - m, n + 1))
    w = np.zeros(m + 2)
    w[-1] = 1.0 + math.fsum(alpha[n - k] * g[k] for k in range(n - m, n + 1)) / (c * n)
    for j in range(n - m - 1, n):
        w[j - (n - m - 1)] = -alpha[n - j - 1] * (n - j) / (c * n**2 * j)
    return w


def _printed_terminal_weights(n: int, profile: WeightProfile) -> np.ndarray:
    # Verbatim transcription of the published display, with out-of-range
    # weights read as zero. Kept only so tests can document that its index
    # shift disagrees with the criterion's actual minimizer.
    m, alpha = profile.m, profile.alpha
    g = {k: (n - k + 1) / (n * (k - 1)) for k in range(n - m, n + 1)}
    c = math.fsum(alpha[n - k] * g[k] ** 2 for k in range(n - m, n + 1))
    w = np.zeros(m + 2)
    w[-1] = 1.0 + math.fsum(alpha[n - j] * (n - j + 1) / (j - 1) for j in range(n - m, n + 1)) / (c * n**2)
    for k in range(n - m - 1, n):
        a = alpha[n - k + 1] if 0 <= n - k + 1 <= m else 0.0
        w[k - (n - m - 1)] = (k - n) * a / (c * n**2 * k)
    return w


def _regression_weights(n: int, profile: WeightProfile) -> np.ndarray:
    m, alpha = profile.m, profile.alpha
    a = math.fsum(alpha[k] * k for k in range(m + 1))
    c = a**2 - math.fsum(alpha[k] * k**2 for k in range(m + 1))
    if c == 0.0:
        raise DegenerateDesign("regression needs weight on at least two levels")
    w = np.zeros(m + 1)  # indices n-m .. n
    for k in range(m + 1):
        w[m - k] = alpha[k] * (n - k) * (k - a) / c
    return w


def _require_window(kind: str, n: int, profile: WeightProfile) -> None:
    need = profile.m + (1 if kind == "regression" else 2)
    if n < need:
        raise WindowTooDeep(f"{kind} estimate needs n >= m + {need - profile.m}, got n={n}, m={profile.m}")


def scaling_factor_from_gladyshev(
    kind: str, h: Sequence[float], n: int, profile: WeightProfile
) -> float:
    """Optimal phi = log2(lambda) for the given criterion.

    ``h[k]`` must hold the base estimate at level k for every level the
    criterion touches (k >= n-m-1, or n-m for the regression kind).
    """
    _require_window(kind, n, profile)
    m, alpha = profile.m, profile.alpha
    if kind == "sequential":
        c = math.fsum(alpha[n - k] / (k**2 * (k - 1) ** 2) for k in range(n - m, n + 1))
        return -math.fsum(
            alpha[n - k] * (h[k] - h[k - 1]) / (k * (k - 1)) for k in range(n - m, n + 1)
        ) / c
    if kind == "terminal":
        g = {k: (n - k + 1) / (n * (k - 1)) for k in range(n - m, n + 1)}
        c = math.fsum(alpha[n - k] * g[k] ** 2 for k in range(n - m, n + 1))
        return -math.fsum(
            alpha[n - k] * g[k] * (h[n] - h[k - 1]) for k in range(n - m, n + 1)
        ) / c
    if kind == "regression":
        prof, _ = profile.normalized()
        alpha = prof.alpha
        a = math.fsum(alpha[k] * k for k in range(m + 1))
        est = math.fsum(
            _regression_weights(n, prof)[m - k] * h[n - k] for k in range(m + 1)
        )
        c_side = math.fsum(alpha[k] * (n - k) * h[n - k] for k in range(m + 1))
        return c_side - (n - a) * est
    raise InputError(f"unknown scale estimator kind {kind!r}")


def scale_estimate_from_gladyshev(
    kind: str, h: Sequence[float], n: int, profile: WeightProfile
) -> ScaleEstimate:
    """Assemble a scale estimate from a base-estimate sequence.

    Useful for synthetic sequences; the series-level functions below feed
    this with estimates from one shared energy trace. The estimate is
    computed from the derivative root and cross-checked against the
    closed-form weight vector.
    """
    _require_window(kind, n, profile)
    warnings: tuple[str, ...] = ()
    if kind == "regression":
        norm, changed = profile.normalized()
        if changed:
            warnings = ("alpha weights renormalized to sum 1 for the regression criterion",)
        weights = _regression_weights(n, norm)
        indices = tuple(range(n - profile.m, n + 1))
        est = float(np.dot(weights, [h[j] for j in indices]))
        phi = scaling_factor_from_gladyshev(kind, h, n, profile)
        return ScaleEstimate(
            H=est, log2_lambda=phi, kind=kind, n=n, profile=profile,
            weights=weights, weight_indices=indices, warnings=warnings,
        )
    phi = scaling_factor_from_gladyshev(kind, h, n, profile)
    est = h[n] - phi / n
    weights = closed_form_weights(kind, n, profile)
    indices = tuple(range(n - profile.m - 1, n + 1))
    via_weights = float(np.dot(weights, [h[j] for j in indices]))
    scale = max(1.0, float(np.sum(np.abs(weights * np.asarray([h[j] for j in indices])))))
    assert abs(est - via_weights) <= _CHECK_TOL * scale, (
        f"{kind} closed-form weights disagree with the derivative root: "
        f"{est} vs {via_weights}"
    )
    return ScaleEstimate(
        H=est, log2_lambda=phi, kind=kind, n=n, profile=profile,
        weights=weights, weight_indices=indices, warnings=warnings,
    )


def closed_form_weights(kind: str, n: int, profile: WeightProfile) -> np.ndarray:
    """Realized linear weights on the base estimates.

    Sequential and terminal vectors cover levels n-m-1 .. n, regression
    covers n-m .. n; each sums to 1.
    """
    _require_window(kind, n, profile)
    if kind == "sequential":
        return _sequential_weights(n, profile)
    if kind == "terminal":
        return _terminal_weights(n, profile)
    if kind == "regression":
        norm, _ = profile.normalized()
        return _regression_weights(n, norm)
    raise InputError(f"no closed-form weight vector for kind {kind!r}")


# -- series-level estimators ---------------------------------------------------


def sequential_scale(series: DyadicSeries, n: int, profile: WeightProfile) -> ScaleEstimate:
    """Scale estimate minimizing weighted successive differences of the
    base estimates over levels n-m .. n."""
    _require_window("sequential", n, profile)
    h = _hhat_through(series, n, n - profile.m - 1)
    return scale_estimate_from_gladyshev("sequential", h, n, profile)


def terminal_scale(series: DyadicSeries, n: int, profile: WeightProfile) -> ScaleEstimate:
    """Scale estimate minimizing weighted gaps between the level-n estimate
    and each earlier one."""
    _require_window("terminal", n, profile)
    h = _hhat_through(series, n, n - profile.m - 1)
    return scale_estimate_from_gladyshev("terminal", h, n, profile)


def regression_scale(series: DyadicSeries, n: int, profile: WeightProfile) -> ScaleEstimate:
    """Joint fit of (H, log2 lambda) to the weighted level/estimate cloud."""
    _require_window("regression", n, profile)
    h = _hhat_through(series, n, n - profile.m)
    return scale_estimate_from_gladyshev("regression", h, n, profile)


def generalized_scale(
    series: DyadicSeries,
    n: int,
    pairs: Iterable[tuple[int, int, float]],
) -> ScaleEstimate:
    """Scale estimate from an arbitrary family of weighted level pairs.

    ``pairs`` holds (j, k, weight) entries with j > k >= 1; the criterion
    penalizes the gap between the level-j and level-k estimates. Choosing
    pairs (k, k-1, alpha[n-k]) recovers the sequential kind and
    (n, k-1, alpha[n-k]) the terminal kind.
    """
    pairs = [(int(j), int(k), float(a)) for j, k, a in pairs]
    if not pairs:
        raise DegenerateDesign("no level pairs supplied")
    for j, k, a in pairs:
        if not (j > k >= 1):
            raise InputError(f"pair ({j}, {k}) must satisfy j > k >= 1")
        if a < 0.0:
            raise InputError("pair weights must be non-negative")
    top = max(max(j for j, _, _ in pairs), n)
    if top > series.resolution:
        raise LevelExceedsResolution(f"pair level {top} exceeds resolution {series.resolution}")
    lowest = min(k for _, k, _ in pairs)
    h = _hhat_through(series, top, lowest)

    quad = math.fsum(a * (1.0 / k - 1.0 / j) ** 2 for j, k, a in pairs)
    if quad <= 0.0:
        raise DegenerateDesign("criterion has no curvature in log2(lambda)")
    lin = math.fsum(a * (1.0 / k - 1.0 / j) * (h[j] - h[k]) for j, k, a in pairs)
    phi = -lin / quad

    involved = sorted({n} | {j for j, _, _ in pairs} | {k for _, k, _ in pairs})
    w = {idx: 0.0 for idx in involved}
    w[n] = 1.0
    for j, k, a in pairs:
        g = 1.0 / k - 1.0 / j
        w[j] += a * g / (n * quad)
        w[k] -= a * g / (n * quad)
    weights = np.array([w[idx] for idx in involved])
    est = h[n] - phi / n
    via_weights = float(np.dot(weights, [h[idx] for idx in involved]))
    assert abs(est - via_weights) <= _CHECK_TOL * max(1.0, abs(est))
    return ScaleEstimate(
        H=est, log2_lambda=phi, kind="generalized", n=n, profile=None,
        weights=weights, weight_indices=tuple(involved),
    )


# -- coarsened power variations and the simple regression estimator -------------


def m_stat(series: DyadicSeries, q: float, k: int, n: int) -> float:
    """Mean q-th power of increments over the coarsened grid of spacing k * 2**-n."""
    if q <= 0.0:
        raise InputError(f"power q must be positive, got {q}")
    if not 1 <= n <= series.resolution:
        raise LevelExceedsResolution(f"level {n} outside 1..{series.resolution}")
    if not 1 <= k <= 2**n:
        raise IndexOutOfRange(f"coarsening k={k} outside 1..{2**n}")
    sub = series.values[:: 1 << (series.resolution - n)]
    count = (1 << n) // k
    pts = sub[0 : k * count + 1 : k]
    inc = np.abs(np.diff(pts))
    with np.errstate(divide="ignore"):
        powered = np.where(inc > 0.0, np.exp(q * np.log(np.where(inc > 0.0, inc, 1.0))), 0.0)
    return float(np.sum(powered) / count)


def simple_regression(
    series: DyadicSeries,
    n: int,
    K: Iterable[int],
    Q: Iterable[float],
) -> ScaleEstimate:
    """Slope-based estimate: regress log2 of the coarsened power variation
    on log2 of the coarsening, then average over the powers in Q."""
    ks = sorted(set(int(k) for k in K))
    qs = [float(q) for q in Q]
    if len(ks) < 2:
        raise DegenerateDesign("need at least two distinct coarsenings")
    if not qs:
        raise InputError("need at least one power q")
    u = np.log2(np.array(ks, dtype=np.float64))
    u_c = u - u.mean()
    denom = float(np.dot(u_c, u_c))
    estimates = []
    intercept_scale = []
    for q in qs:
        stats = np.array([m_stat(series, q, k, n) for k in ks])
        if np.any(stats <= 0.0):
            raise DegeneratePath(f"coarsened variation vanished for q={q}")
        y = np.log2(stats)
        slope = float(np.dot(u_c, y - y.mean())) / denom
        h_q = slope / q
        estimates.append(h_q)
        log2_b = float(y.mean()) - q * h_q * (float(u.mean()) - n)
        intercept_scale.append(-log2_b / q)
    return ScaleEstimate(
        H=float(np.mean(estimates)),
        log2_lambda=float(np.mean(intercept_scale)),
        kind="simple_regression",
        n=n,
        profile=None,
    )
