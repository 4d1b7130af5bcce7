"""Request/response models for the estimation service.

Every response uses one envelope: command, config (full provenance), a list
of result rows, a list of diagnostics, warnings, and the seed when the run
was randomized. The CLI serializes these envelopes verbatim, so files on
disk and HTTP responses share a schema.
"""

from __future__ import annotations

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator

from ..errors import InputError
from ..estimators import WeightProfile

AlphaSpec = Union[str, list[float]]


def parse_alpha(spec: AlphaSpec, m: int) -> WeightProfile:
    """Materialize a weight profile from a named generator or explicit list.

    ``uniform`` gives alpha_k = 1, ``geometric:r`` gives alpha_k = r**k,
    and an explicit list (or comma string) fixes the weights directly, in
    which case its length must be m + 1.
    """
    if isinstance(spec, str):
        text = spec.strip()
        if text == "uniform":
            return WeightProfile.uniform(m)
        if text.startswith("geometric:"):
            try:
                ratio = float(text.split(":", 1)[1])
            except ValueError:
                raise InputError(f"bad geometric ratio in {spec!r}") from None
            return WeightProfile.geometric(m, ratio)
        try:
            values = [float(tok) for tok in text.split(",") if tok.strip()]
        except ValueError:
            raise InputError(
                f"alpha spec {spec!r} is neither 'uniform', 'geometric:r', nor a float list"
            ) from None
    else:
        values = [float(v) for v in spec]
    if len(values) != m + 1:
        raise InputError(f"explicit alpha list has {len(values)} entries; m={m} needs {m + 1}")
    return WeightProfile(m, tuple(values))


def parse_h_range(spec: str) -> list[float]:
    """Parse '0.1..0.9:0.1' (inclusive range) or a comma list of exponents."""
    text = spec.strip()
    if ".." in text:
        head, _, step_txt = text.partition(":")
        lo_txt, _, hi_txt = head.partition("..")
        try:
            lo, hi = float(lo_txt), float(hi_txt)
            step = float(step_txt) if step_txt else 0.1
        except ValueError:
            raise InputError(f"bad exponent range {spec!r}") from None
        if step <= 0 or hi < lo:
            raise InputError(f"bad exponent range {spec!r}")
        count = int(round((hi - lo) / step)) + 1
        return [round(lo + i * step, 12) for i in range(count) if lo + i * step <= hi + 1e-12]
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise InputError(f"bad exponent list {spec!r}") from None


class Report(BaseModel):
    """The one response envelope every command returns."""

    command: str
    config: dict
    results: list[dict]
    diagnostics: list[dict] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    seed: Optional[int] = None


class AnalyzeRequest(BaseModel):
    values: list[float] = Field(min_length=3)
    include_theta: bool = False
    max_theta_level: int = 8


class EstimateRequest(BaseModel):
    values: list[float] = Field(min_length=3)
    kind: Literal[
        "gladyshev", "sequential", "terminal", "regression", "generalized", "simple_regression"
    ] = "terminal"
    n: Optional[int] = None
    m: int = 1
    alpha: AlphaSpec = "geometric:0.5"
    k_set: Optional[list[int]] = None
    q_set: Optional[list[float]] = None
    pairs: Optional[list[tuple[int, int, float]]] = None

    @field_validator("m")
    @classmethod
    def _m_nonneg(cls, v):
        if v < 0:
            raise ValueError("m must be >= 0")
        return v


class RollRequest(BaseModel):
    values: list[float] = Field(min_length=3)
    window_n: int
    stride: int = 1
    kind: Literal["sequential", "terminal"] = "terminal"
    m: int = 1
    alpha: AlphaSpec = "geometric:0.5"
    max_windows: int = 50_000


class SimulateRequest(BaseModel):
    estimator: Literal[
        "gladyshev", "sequential", "terminal", "regression", "simple_regression"
    ] = "gladyshev"
    H: list[float]
    paths: int = Field(ge=1)
    n: int = Field(ge=1)
    m: int = 1
    alpha: AlphaSpec = "geometric:0.5"
    seed: int = 0
    workers: Optional[int] = None
    standardize: bool = False
    k_set: Optional[list[int]] = None
    q_set: Optional[list[float]] = None


class DiagnoseRequest(BaseModel):
    values: list[float] = Field(min_length=3)
    p: list[float] = Field(default_factory=lambda: [1.0, 2.0, 3.0, 4.0])
    nu: int = 2
    H_candidate: Optional[float] = None
    level_cap: int = 24
