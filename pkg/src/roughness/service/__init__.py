"""HTTP service wrapping the core estimation package."""

from .schemas import (
    AnalyzeRequest,
    DiagnoseRequest,
    EstimateRequest,
    Report,
    RollRequest,
    SimulateRequest,
    parse_alpha,
    parse_h_range,
)

__all__ = [
    "AnalyzeRequest",
    "DiagnoseRequest",
    "EstimateRequest",
    "Report",
    "RollRequest",
    "SimulateRequest",
    "parse_alpha",
    "parse_h_range",
]
