"""Windowed estimation over long series with a shared scaling factor.

Estimating each window separately gives noisy scale factors; optimizing one
log2(lambda) jointly over a grid of windows pools the criterion and, because
every per-window criterion is quadratic in phi with the same curvature, the
pooled minimizer is exactly the mean of the per-window minimizers. Each
window then reports its base estimate corrected by the shared factor, which
damps window-to-window fluctuation while still tracking genuine changes in
roughness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dyadic import DyadicSeries, energy_trace, fs_analyze
from .errors import DegeneratePath, InputError, OutOfBounds, SeriesTooShort, WindowTooDeep
from .estimators import (
    WeightProfile,
    gladyshev_from_trace,
    scaling_factor_from_gladyshev,
)

__all__ = [
    "WindowGrid",
    "WindowEstimate",
    "RollingReport",
    "extract_window",
    "t_adjusted",
    "rolling_monitor",
    "DEFAULT_WINDOW_CAP",
]

DEFAULT_WINDOW_CAP = 50_000


@dataclass(frozen=True)
class WindowGrid:
    """Strictly increasing window start indices into a sample array.

    Offsets are sample indices, not timestamps; each window spans
    ``2**window_n + 1`` consecutive samples. ``stride`` is kept as metadata
    for regular grids and is None for hand-built irregular ones.
    """

    offsets: tuple[int, ...]
    window_n: int
    stride: Optional[int] = None

    def __post_init__(self):
        offsets = tuple(int(o) for o in self.offsets)
        if not offsets:
            raise InputError("window grid needs at least one offset")
        if any(o < 0 for o in offsets):
            raise InputError("window offsets must be non-negative")
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise InputError("window offsets must be strictly increasing")
        if self.window_n < 1:
            raise InputError(f"window resolution must be >= 1, got {self.window_n}")
        object.__setattr__(self, "offsets", offsets)

    @property
    def window_len(self) -> int:
        return 2**self.window_n + 1

    @classmethod
    def regular(cls, length: int, window_n: int, stride: int) -> "WindowGrid":
        """Every admissible start index at the given stride."""
        if stride < 1:
            raise InputError(f"stride must be >= 1, got {stride}")
        last = length - 2**window_n - 1
        if last < 0:
            raise SeriesTooShort(
                f"series of {length} samples is shorter than one window of {2**window_n + 1}"
            )
        return cls(tuple(range(0, last + 1, stride)), window_n, stride)


@dataclass(frozen=True)
class WindowEstimate:
    """Per-window outcome: base estimate, own factor, raw and adjusted estimates."""

    offset: int
    hhat: Optional[float]
    log2_lambda: Optional[float]
    raw: Optional[float]
    adjusted: Optional[float]
    skipped: bool = False
    reason: Optional[str] = None


@dataclass(frozen=True)
class RollingReport:
    """Time-indexed estimates over a window grid with the shared factor.

    ``shared_log2_lambda`` is the mean of the per-window optimal factors,
    which coincides with the minimizer of the pooled criterion.
    """

    grid: WindowGrid
    kind: str
    profile: WeightProfile
    per_window: tuple[WindowEstimate, ...]
    shared_log2_lambda: float
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def estimates(self) -> np.ndarray:
        """Adjusted estimates for non-skipped windows, NaN where skipped."""
        return np.array(
            [np.nan if w.skipped else w.adjusted for w in self.per_window]
        )


def extract_window(values, start_index: int, n: int) -> DyadicSeries:
    """The 2**n + 1 samples from start_index on, as a unit-interval series."""
    arr = np.asarray(values, dtype=np.float64)
    width = 2**n + 1
    if start_index < 0 or start_index + width > arr.size:
        raise OutOfBounds(
            f"window [{start_index}, {start_index + width}) outside 0..{arr.size}"
        )
    from .dyadic import from_samples

    return from_samples(arr[start_index : start_index + width], n)


def t_adjusted(
    values,
    grid: WindowGrid,
    profile: WeightProfile,
    kind: str = "terminal",
    skip_degenerate: bool = False,
) -> RollingReport:
    """Run the chosen scale estimator over every window with a shared factor.

    With ``skip_degenerate`` a zero-energy window gets a diagnostic row
    instead of failing the whole run; otherwise DegeneratePath names the
    offending window. A single-offset grid reduces exactly to the plain
    single-window estimator.
    """
    if kind not in ("sequential", "terminal"):
        raise InputError(f"grid adjustment supports sequential/terminal, got {kind!r}")
    n = grid.window_n
    if n < profile.m + 2:
        raise WindowTooDeep(f"need window resolution >= m + 2 = {profile.m + 2}, got {n}")
    arr = np.asarray(values, dtype=np.float64)

    rows: list[dict] = []
    factors: list[float] = []
    for offset in grid.offsets:
        window = extract_window(arr, offset, n)
        trace = energy_trace(fs_analyze(window))
        try:
            trace.require_positive(n - profile.m - 1)
        except DegeneratePath as exc:
            if not skip_degenerate:
                raise DegeneratePath(f"window at offset {offset}: {exc}") from exc
            rows.append({"offset": offset, "reason": str(exc)})
            continue
        h = np.full(n + 1, np.nan)
        for k in range(n - profile.m - 1, n + 1):
            h[k] = gladyshev_from_trace(trace, k)
        phi = scaling_factor_from_gladyshev(kind, h, n, profile)
        factors.append(phi)
        rows.append({"offset": offset, "hhat": float(h[n]), "phi": phi})

    if not factors:
        raise DegeneratePath("every window in the grid is degenerate")
    shared = math.fsum(factors) / len(factors)

    per_window = []
    for row in rows:
        if "reason" in row:
            per_window.append(
                WindowEstimate(
                    offset=row["offset"], hhat=None, log2_lambda=None,
                    raw=None, adjusted=None, skipped=True, reason=row["reason"],
                )
            )
        else:
            per_window.append(
                WindowEstimate(
                    offset=row["offset"],
                    hhat=row["hhat"],
                    log2_lambda=row["phi"],
                    raw=row["hhat"] - row["phi"] / n,
                    adjusted=row["hhat"] - shared / n,
                )
            )
    return RollingReport(
        grid=grid, kind=kind, profile=profile,
        per_window=tuple(per_window), shared_log2_lambda=shared,
    )


def rolling_monitor(
    values,
    window_n: int,
    stride: int,
    profile: WeightProfile,
    kind: str = "terminal",
    max_windows: int = DEFAULT_WINDOW_CAP,
) -> RollingReport:
    """Maximal regular grid at the given stride, estimated with a shared factor.

    Degenerate windows (flat segments) are skipped with a per-window
    diagnostic. When the grid would exceed ``max_windows`` the stride is
    coarsened to fit and a warning is recorded.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2**window_n + 1:
        raise SeriesTooShort(
            f"series of {arr.size} samples is shorter than one window of {2**window_n + 1}"
        )
    warnings: tuple[str, ...] = ()
    grid = WindowGrid.regular(arr.size, window_n, stride)
    if len(grid.offsets) > max_windows:
        factor = -(-len(grid.offsets) // max_windows)
        coarse = stride * factor
        grid = WindowGrid.regular(arr.size, window_n, coarse)
        warnings = (
            f"grid of {len(grid.offsets) * factor} windows exceeds the cap of "
            f"{max_windows}; stride coarsened from {stride} to {coarse}",
        )
    report = t_adjusted(arr, grid, profile, kind, skip_degenerate=True)
    if warnings:
        report = RollingReport(
            grid=report.grid, kind=report.kind, profile=report.profile,
            per_window=report.per_window,
            shared_log2_lambda=report.shared_log2_lambda,
            warnings=report.warnings + warnings,
        )
    return report
