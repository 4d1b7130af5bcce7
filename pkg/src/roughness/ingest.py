"""CSV ingestion: column selection, cleaning, transforms, and dyadic fitting.

Estimation wants exactly 2**n + 1 equally spaced samples. Real files rarely
cooperate, so the policy decides whether to demand that length or truncate
to the largest admissible window (keeping the head or, for monitoring the
most recent regime, the tail). Timestamps ride along into report metadata
but never enter the math.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    EmptyInput,
    InputError,
    LengthMismatch,
    NonFinite,
    ParseError,
    TooShort,
)

__all__ = ["IngestPolicy", "IngestResult", "ingest_csv", "fit_dyadic", "largest_resolution"]

LENGTH_POLICIES = ("require_dyadic", "truncate_head", "truncate_tail")
TRANSFORMS = ("none", "log")
DETRENDS = ("none", "affine")


@dataclass(frozen=True)
class IngestPolicy:
    """How to read and condition a CSV before estimation.

    ``value_col``/``time_col`` accept a header name or a 0-based index.
    ``truncate_head`` keeps the most recent samples, ``truncate_tail`` the
    earliest; both leave 2**n + 1 samples for the largest admissible n.
    """

    value_col: str | int = 1
    time_col: Optional[str | int] = None
    length_policy: str = "require_dyadic"
    transform: str = "none"
    detrend: str = "none"

    def __post_init__(self):
        if self.length_policy not in LENGTH_POLICIES:
            raise InputError(f"length policy must be one of {LENGTH_POLICIES}")
        if self.transform not in TRANSFORMS:
            raise InputError(f"transform must be one of {TRANSFORMS}")
        if self.detrend not in DETRENDS:
            raise InputError(f"detrend must be one of {DETRENDS}")


@dataclass(frozen=True)
class IngestResult:
    values: np.ndarray
    timestamps: Optional[tuple[str, ...]]
    metadata: dict


def _resolve_column(spec, header: Optional[list[str]], width: int, what: str) -> int:
    if isinstance(spec, int) or (isinstance(spec, str) and spec.lstrip("-").isdigit()):
        idx = int(spec)
        if not 0 <= idx < width:
            raise InputError(f"{what} column {idx} outside 0..{width - 1}")
        return idx
    if header is None:
        raise InputError(f"{what} column {spec!r} needs a header row")
    try:
        return header.index(str(spec))
    except ValueError:
        raise InputError(f"{what} column {spec!r} not found in header {header}") from None


def ingest_csv(path: str, policy: IngestPolicy) -> IngestResult:
    """Read, clean, and transform one value column (plus optional timestamps).

    The header row is optional and detected by trying to parse the value
    cell of the first row. A non-numeric or non-finite value raises
    ParseError with its 1-based line number. Log transform and affine
    detrending are applied to the full cleaned series, before any dyadic
    fitting.
    """
    with open(path, newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row and any(c.strip() for c in row)]
    if not rows:
        raise EmptyInput(f"{path} contains no data rows")

    width = len(rows[0][1])
    header: Optional[list[str]] = None
    first_row = rows[0][1]
    # header detection: if the chosen value cell of row 1 is not a number,
    # treat row 1 as a header (named columns imply a header anyway)
    value_idx_guess = None
    try:
        value_idx_guess = _resolve_column(policy.value_col, None, width, "value")
    except InputError:
        pass
    probe_cell = first_row[value_idx_guess] if value_idx_guess is not None else first_row[0]
    try:
        float(probe_cell)
    except ValueError:
        header = [c.strip() for c in first_row]
        rows = rows[1:]
        if not rows:
            raise EmptyInput(f"{path} contains a header but no data rows")

    value_idx = _resolve_column(policy.value_col, header, width, "value")
    time_idx = (
        _resolve_column(policy.time_col, header, width, "time")
        if policy.time_col is not None
        else None
    )

    values = []
    stamps: list[str] = []
    for line, row in rows:
        if value_idx >= len(row):
            raise ParseError(line, f"row at line {line} has no column {value_idx}")
        cell = row[value_idx].strip()
        try:
            v = float(cell)
        except ValueError:
            raise ParseError(line, f"non-numeric value {cell!r} at line {line}") from None
        if not math.isfinite(v):
            raise ParseError(line, f"non-finite value {cell!r} at line {line}")
        values.append(v)
        if time_idx is not None:
            stamps.append(row[time_idx].strip())

    if len(values) < 3:
        raise TooShort(f"{len(values)} usable samples; need at least 3")

    arr = np.asarray(values, dtype=np.float64)
    if policy.transform == "log":
        if np.any(arr <= 0.0):
            bad = int(np.flatnonzero(arr <= 0.0)[0])
            raise NonFinite(f"log transform needs positive values; sample {bad} is {arr[bad]}")
        arr = np.log(arr)
    if policy.detrend == "affine":
        t = np.linspace(0.0, 1.0, arr.size)
        arr = arr - arr[0] - t * (arr[-1] - arr[0])

    return IngestResult(
        values=arr,
        timestamps=tuple(stamps) if time_idx is not None else None,
        metadata={
            "path": path,
            "rows": len(values),
            "header": header,
            "value_col": policy.value_col,
            "time_col": policy.time_col,
            "length_policy": policy.length_policy,
            "transform": policy.transform,
            "detrend": policy.detrend,
        },
    )


def largest_resolution(length: int) -> int:
    """Largest n with 2**n + 1 <= length."""
    if length < 3:
        raise TooShort(f"{length} samples; need at least 3")
    return (length - 1).bit_length() - 1


def fit_dyadic(values: np.ndarray, policy: IngestPolicy) -> tuple[np.ndarray, int]:
    """Cut the cleaned samples down to 2**n + 1 for the largest admissible n.

    ``require_dyadic`` refuses non-dyadic lengths; ``truncate_head`` keeps
    the last window (the most recent samples), ``truncate_tail`` the first.
    """
    length = values.size
    n = largest_resolution(length)
    if policy.length_policy == "require_dyadic":
        if length != 2**n + 1:
            raise LengthMismatch(
                f"{length} samples is not 2**n + 1; closest admissible is {2**n + 1}"
            )
        return values, n
    window = 2**n + 1
    if policy.length_policy == "truncate_tail":
        return values[:window], n
    return values[length - window :], n
