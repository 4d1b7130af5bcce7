"""Model-free estimation of the Hurst roughness exponent of a sampled path.

The core pipeline: decompose the path over the dyadic hat basis, track the
cumulative coefficient energy across levels, and read the roughness exponent
off its growth rate. On top of that sit scale-invariant estimators with
closed-form weights, grid-adjusted rolling estimation for change detection,
branch-moment diagnostics, and an exact fractional Brownian motion harness
for validation.
"""

__version__ = "0.1.0"

from .dyadic import (
    DyadicSeries,
    EnergyTrace,
    FaberSchauderPyramid,
    energy_trace,
    from_samples,
    fs_analyze,
    fs_eval,
    fs_synthesize,
)
from .estimators import (
    ScaleEstimate,
    WeightProfile,
    closed_form_weights,
    generalized_scale,
    gladyshev,
    gladyshev_sequence,
    m_stat,
    regression_scale,
    sequential_scale,
    simple_regression,
    terminal_scale,
)
from .fbm import EstimatorConfig, McSummary, fbm_path, monte_carlo
from .rolling import RollingReport, WindowGrid, extract_window, rolling_monitor, t_adjusted
from .variation import branch_moment, burkholder_ratio, detrend_affine, pth_variation, variation_profile

__all__ = [
    "__version__",
    "DyadicSeries",
    "EnergyTrace",
    "FaberSchauderPyramid",
    "from_samples",
    "fs_analyze",
    "fs_synthesize",
    "fs_eval",
    "energy_trace",
    "pth_variation",
    "variation_profile",
    "branch_moment",
    "burkholder_ratio",
    "detrend_affine",
    "WeightProfile",
    "ScaleEstimate",
    "gladyshev",
    "gladyshev_sequence",
    "sequential_scale",
    "terminal_scale",
    "regression_scale",
    "generalized_scale",
    "m_stat",
    "simple_regression",
    "closed_form_weights",
    "WindowGrid",
    "RollingReport",
    "extract_window",
    "t_adjusted",
    "rolling_monitor",
    "fbm_path",
    "monte_carlo",
    "EstimatorConfig",
    "McSummary",
]
