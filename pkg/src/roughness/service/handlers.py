"""Command handlers shared by the HTTP endpoints and the CLI.

Each handler turns a validated request into a Report envelope using the
core package; the FastAPI app and the CLI both call these directly, so the
two surfaces cannot drift apart.
"""

from __future__ import annotations

import math

import numpy as np

from .. import __version__
from ..diagnostics import build_report
from ..dyadic import energy_trace, from_samples, fs_analyze
from ..errors import LengthMismatch
from ..estimators import (
    generalized_scale,
    gladyshev,
    gladyshev_sequence,
    regression_scale,
    sequential_scale,
    simple_regression,
    terminal_scale,
)
from ..fbm import EstimatorConfig, monte_carlo
from ..ingest import largest_resolution
from ..rolling import rolling_monitor
from .schemas import (
    AnalyzeRequest,
    DiagnoseRequest,
    EstimateRequest,
    Report,
    RollRequest,
    SimulateRequest,
    parse_alpha,
)

__all__ = ["run_analyze", "run_estimate", "run_roll", "run_simulate", "run_diagnose"]


def _clean_float(x) -> float | None:
    x = float(x)
    return None if math.isnan(x) else x


def _dyadic_series(values: list[float]):
    n = largest_resolution(len(values))
    if len(values) != 2**n + 1:
        raise LengthMismatch(
            f"{len(values)} samples is not 2**n + 1; ingest with a truncation policy first"
        )
    return from_samples(np.asarray(values), n)


def run_analyze(req: AnalyzeRequest) -> Report:
    series = _dyadic_series(req.values)
    pyramid = fs_analyze(series)
    trace = energy_trace(pyramid)
    result = {
        "resolution": series.resolution,
        "x0": pyramid.x0,
        "slope": pyramid.slope,
        "s": [float(v) for v in trace.s],
        "xi": [(_clean_float(v) if d else None) for v, d in zip(trace.xi, trace.xi_defined)],
        "xi_defined": [bool(d) for d in trace.xi_defined],
    }
    if req.include_theta:
        cap = min(req.max_theta_level, pyramid.depth)
        result["theta"] = {str(m): [float(v) for v in pyramid.theta[m]] for m in range(cap)}
    return Report(
        command="analyze",
        config={"version": __version__, "resolution": series.resolution,
                "include_theta": req.include_theta},
        results=[result],
    )


def run_estimate(req: EstimateRequest) -> Report:
    series = _dyadic_series(req.values)
    n = req.n if req.n is not None else series.resolution
    warnings: list[str] = []
    config: dict = {"version": __version__, "kind": req.kind, "n": n,
                    "resolution": series.resolution}

    if req.kind == "gladyshev":
        h = gladyshev(series, n)
        results = [{"kind": req.kind, "H": h, "log2_lambda": 0.0, "n": n,
                    "weights": None, "weight_indices": None}]
        return Report(command="estimate", config=config, results=results)

    if req.kind == "simple_regression":
        k_set = req.k_set or [2**j for j in range(min(n, 5))]
        q_set = req.q_set or [2.0]
        est = simple_regression(series, n, k_set, q_set)
        config.update({"k_set": sorted(set(k_set)), "q_set": q_set})
        results = [{"kind": est.kind, "H": est.H, "log2_lambda": est.log2_lambda,
                    "n": n, "weights": None, "weight_indices": None}]
        return Report(command="estimate", config=config, results=results)

    if req.kind == "generalized":
        if not req.pairs:
            from ..errors import InputError

            raise InputError("generalized estimator needs 'pairs' of (j, k, weight)")
        est = generalized_scale(series, n, req.pairs)
        config["pairs"] = [list(p) for p in req.pairs]
    else:
        profile = parse_alpha(req.alpha, req.m)
        config.update({"m": req.m, "alpha": list(profile.alpha)})
        fn = {"sequential": sequential_scale, "terminal": terminal_scale,
              "regression": regression_scale}[req.kind]
        est = fn(series, n, profile)
        warnings.extend(est.warnings)

    lo = est.weight_indices[0]
    base = gladyshev_sequence(series, lo, n)
    results = [{
        "kind": est.kind,
        "H": est.H,
        "log2_lambda": est.log2_lambda,
        "n": n,
        "weights": [float(w) for w in est.weights],
        "weight_indices": list(est.weight_indices),
        "gladyshev": {str(k): float(v) for k, v in zip(range(lo, n + 1), base)},
    }]
    return Report(command="estimate", config=config, results=results, warnings=warnings)


def run_roll(req: RollRequest) -> Report:
    profile = parse_alpha(req.alpha, req.m)
    report = rolling_monitor(
        np.asarray(req.values), req.window_n, req.stride, profile,
        kind=req.kind, max_windows=req.max_windows,
    )
    rows = []
    diagnostics = []
    for w in report.per_window:
        rows.append({
            "offset": w.offset,
            "hhat": _clean_float(w.hhat) if w.hhat is not None else None,
            "log2_lambda": _clean_float(w.log2_lambda) if w.log2_lambda is not None else None,
            "raw": _clean_float(w.raw) if w.raw is not None else None,
            "adjusted": _clean_float(w.adjusted) if w.adjusted is not None else None,
            "skipped": w.skipped,
        })
        if w.skipped:
            diagnostics.append({"offset": w.offset, "reason": w.reason})
    config = {
        "version": __version__, "kind": req.kind, "window_n": req.window_n,
        "stride": report.grid.stride, "m": req.m, "alpha": list(profile.alpha),
        "windows": len(rows), "shared_log2_lambda": report.shared_log2_lambda,
    }
    return Report(
        command="roll", config=config, results=rows,
        diagnostics=diagnostics, warnings=list(report.warnings),
    )


def run_simulate(req: SimulateRequest) -> Report:
    profile = None
    if req.estimator in ("sequential", "terminal", "regression"):
        profile = parse_alpha(req.alpha, req.m)
    config_obj = EstimatorConfig(
        kind=req.estimator, n=req.n, profile=profile,
        k_set=tuple(req.k_set) if req.k_set else None,
        q_set=tuple(req.q_set) if req.q_set else None,
    )
    summaries = monte_carlo(
        config_obj, req.H, req.paths, seed=req.seed,
        workers=req.workers, standardize=req.standardize,
    )
    rows = [{
        "H_true": s.H_true, "mean": _clean_float(s.mean), "sd": _clean_float(s.sd),
        "max": _clean_float(s.max), "min": _clean_float(s.min),
        "paths": s.paths, "failures": s.failures,
    } for s in summaries]
    diagnostics = [
        {"H_true": s.H_true, "failure_log": list(s.failure_log)}
        for s in summaries if s.failures
    ]
    config = {
        "version": __version__, "estimator": req.estimator, "n": req.n,
        "paths": req.paths, "standardize": req.standardize,
        "workers": req.workers,
    }
    if profile is not None:
        config.update({"m": req.m, "alpha": list(profile.alpha)})
    return Report(
        command="simulate", config=config, results=rows,
        diagnostics=diagnostics, seed=req.seed,
    )


def run_diagnose(req: DiagnoseRequest) -> Report:
    series = _dyadic_series(req.values)
    pyramid = fs_analyze(series)
    trace = energy_trace(pyramid)
    report = build_report(
        pyramid, trace, p_grid=req.p, nu=req.nu,
        H_candidate=req.H_candidate, level_cap=req.level_cap,
    )
    results = [
        {"section": "reverse_jensen", "entries": list(report.reverse_jensen)},
        {"section": "condition_a", "entries": list(report.condition_a)},
        {"section": "condition_b", "entries": list(report.condition_b)},
        {"section": "quantile_bounds", "entries": [report.quantile] if report.quantile else []},
        {"section": "bias", "entries": [report.bias] if report.bias else []},
        {"section": "bounded_variation", "entries": [report.bv]},
    ]
    config = {
        "version": __version__, "p": req.p, "nu": req.nu,
        "H_candidate": req.H_candidate, "level_cap": req.level_cap,
        "resolution": series.resolution,
    }
    return Report(
        command="diagnose", config=config, results=results,
        diagnostics=[{"note": note} for note in report.notes],
    )
