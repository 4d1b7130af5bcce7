"""Command-line client for the estimation service.

The CLI stays thin: it reads and conditions local CSV files, builds the
same request models the HTTP endpoints accept, runs them either in-process
or against a remote server (``--server URL``), and serializes the response
envelope to JSON and/or CSV. All numerics live in the core package.

Exit codes: 0 success, 2 input error, 3 numerical degeneracy, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Optional

from pydantic import ValidationError

from .errors import DegeneracyError, InputError, RoughnessError
from .ingest import IngestPolicy, IngestResult, fit_dyadic, ingest_csv
from .service import handlers
from .service.schemas import (
    AnalyzeRequest,
    DiagnoseRequest,
    EstimateRequest,
    Report,
    RollRequest,
    SimulateRequest,
    parse_h_range,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_io_flags(p: argparse.ArgumentParser, needs_input: bool) -> None:
    if needs_input:
        p.add_argument("--input", required=True, help="input CSV file")
        p.add_argument("--value-col", default="1", help="value column name or 0-based index")
        p.add_argument("--time-col", default=None, help="timestamp column name or 0-based index")
        p.add_argument(
            "--length-policy",
            choices=["require-dyadic", "truncate-head", "truncate-tail"],
            default="require-dyadic",
        )
        p.add_argument("--transform", choices=["none", "log"], default="none")
        p.add_argument("--detrend", choices=["none", "affine"], default="none")
    p.add_argument("--json", dest="json_path", default="-", help="JSON output path ('-' = stdout)")
    p.add_argument("--csv", dest="csv_path", default=None, help="CSV output path")
    p.add_argument("--server", default=None, help="base URL of a running service; default in-process")
    p.add_argument("--config", default=None, help="JSON file of flag defaults")


def build_parser() -> _Parser:
    parser = _Parser(prog="roughness", description=__doc__)
    parser.subparsers = {}
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="hat-basis decomposition and energy trace")
    p.add_argument("--include-theta", action="store_true")
    p.add_argument("--max-theta-level", type=int, default=8)
    _add_io_flags(p, needs_input=True)

    p = sub.add_parser("estimate", help="one estimator on one window")
    p.add_argument(
        "--kind",
        choices=["gladyshev", "sequential", "terminal", "regression", "generalized",
                 "simple-regression"],
        default="terminal",
    )
    p.add_argument("--n", type=int, default=None, help="estimation level (default: resolution)")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--alpha", default="geometric:0.5",
                   help="'uniform', 'geometric:r', or comma-separated weights")
    p.add_argument("--k-set", default=None, help="comma list of coarsenings (simple regression)")
    p.add_argument("--q-set", default=None, help="comma list of powers (simple regression)")
    _add_io_flags(p, needs_input=True)

    p = sub.add_parser("roll", help="rolling monitor with a shared scaling factor")
    p.add_argument("--n", type=int, required=True, help="window resolution")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--alpha", default="geometric:0.5")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--kind", choices=["sequential", "terminal"], default="terminal")
    p.add_argument("--max-windows", type=int, default=50_000)
    _add_io_flags(p, needs_input=True)

    p = sub.add_parser("simulate", help="fractional Brownian Monte Carlo table")
    p.add_argument(
        "--estimator",
        choices=["gladyshev", "sequential", "terminal", "regression", "simple-regression"],
        default="gladyshev",
    )
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--alpha", default="geometric:0.5")
    p.add_argument("--H", dest="h_spec", required=True,
                   help="exponents: '0.1..0.9:0.1' or '0.3,0.5'")
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--standardize", action="store_true")
    _add_io_flags(p, needs_input=False)

    p = sub.add_parser("diagnose", help="consistency diagnostics report")
    p.add_argument("--p", default="1,2,3,4", help="comma list of variation orders")
    p.add_argument("--nu", type=int, default=2)
    p.add_argument("--H-candidate", type=float, default=None)
    p.add_argument("--level-cap", type=int, default=24)
    _add_io_flags(p, needs_input=True)

    parser.subparsers = dict(sub.choices)
    return parser


def _apply_config_file(argv: list[str], parser: _Parser) -> list[str]:
    """Pre-scan for --config and fold its JSON into the subcommand defaults.

    Flags given on the command line still win, because defaults only fill
    in values for flags that were not supplied.
    """
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        parser.error("--config needs a file argument")
    with open(argv[idx + 1]) as fh:
        defaults = json.load(fh)
    if not isinstance(defaults, dict):
        raise InputError("--config file must hold a JSON object")
    cleaned = {k.replace("-", "_"): v for k, v in defaults.items()}
    target = parser.subparsers.get(argv[0]) if argv else None
    (target or parser).set_defaults(**cleaned)
    return argv


def _ingest(args) -> tuple[IngestResult, IngestPolicy]:
    policy = IngestPolicy(
        value_col=args.value_col,
        time_col=args.time_col,
        length_policy=args.length_policy.replace("-", "_"),
        transform=args.transform,
        detrend=args.detrend,
    )
    return ingest_csv(args.input, policy), policy


def _dispatch(args, request) -> Report:
    route = {
        AnalyzeRequest: ("/analyze", handlers.run_analyze),
        EstimateRequest: ("/estimate", handlers.run_estimate),
        RollRequest: ("/roll", handlers.run_roll),
        SimulateRequest: ("/simulate", handlers.run_simulate),
        DiagnoseRequest: ("/diagnose", handlers.run_diagnose),
    }[type(request)]
    if args.server:
        import httpx

        resp = httpx.post(
            args.server.rstrip("/") + route[0],
            json=json.loads(request.model_dump_json()),
            timeout=600.0,
        )
        if resp.status_code >= 400:
            body = resp.json()
            name = body.get("error", "")
            message = body.get("detail", resp.text)
            if name in ("DegeneratePath", "DegenerateDesign", "ZeroMoment", "EmbeddingFailure"):
                raise DegeneracyError(message)
            raise InputError(message)
        return Report.model_validate(resp.json())
    return route[1](request)


def _comma_ints(text: Optional[str]) -> Optional[list[int]]:
    if text is None:
        return None
    return [int(tok) for tok in str(text).split(",") if tok.strip()]


def _comma_floats(text: Optional[str]) -> Optional[list[float]]:
    if text is None:
        return None
    return [float(tok) for tok in str(text).split(",") if tok.strip()]


def _build_request(args) -> tuple[object, Optional[IngestResult]]:
    ingested: Optional[IngestResult] = None
    if args.command == "analyze":
        ingested, policy = _ingest(args)
        values, _ = fit_dyadic(ingested.values, policy)
        req = AnalyzeRequest(
            values=values.tolist(),
            include_theta=args.include_theta,
            max_theta_level=args.max_theta_level,
        )
    elif args.command == "estimate":
        ingested, policy = _ingest(args)
        values, _ = fit_dyadic(ingested.values, policy)
        req = EstimateRequest(
            values=values.tolist(),
            kind=args.kind.replace("-", "_"),
            n=args.n,
            m=args.m,
            alpha=args.alpha,
            k_set=_comma_ints(args.k_set),
            q_set=_comma_floats(args.q_set),
        )
    elif args.command == "roll":
        ingested, _ = _ingest(args)  # the monitor windows the full series itself
        req = RollRequest(
            values=ingested.values.tolist(),
            window_n=args.n,
            stride=args.stride,
            kind=args.kind,
            m=args.m,
            alpha=args.alpha,
            max_windows=args.max_windows,
        )
    elif args.command == "simulate":
        req = SimulateRequest(
            estimator=args.estimator.replace("-", "_"),
            H=parse_h_range(args.h_spec),
            paths=args.paths,
            n=args.n,
            m=args.m,
            alpha=args.alpha,
            seed=args.seed,
            workers=args.workers,
            standardize=args.standardize,
        )
    else:
        ingested, policy = _ingest(args)
        values, _ = fit_dyadic(ingested.values, policy)
        req = DiagnoseRequest(
            values=values.tolist(),
            p=_comma_floats(args.p) or [2.0],
            nu=args.nu,
            H_candidate=args.H_candidate,
            level_cap=args.level_cap,
        )
    return req, ingested


def _attach_provenance(report: Report, args, ingested: Optional[IngestResult]) -> Report:
    if ingested is not None:
        report.config["input"] = ingested.metadata
        if ingested.timestamps and report.command == "roll":
            stamps = ingested.timestamps
            for row in report.results:
                off = row.get("offset")
                if off is not None and off < len(stamps):
                    row["timestamp"] = stamps[off]
    return report


def _write_json(report: Report, path: str) -> None:
    text = json.dumps(report.model_dump(), indent=2, sort_keys=True)
    if path == "-":
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


_CSV_COLUMNS = {
    "simulate": ["H_true", "mean", "sd", "max", "min", "paths", "failures"],
    "roll": ["offset", "timestamp", "hhat", "log2_lambda", "raw", "adjusted", "skipped"],
    "estimate": ["kind", "H", "log2_lambda", "n"],
}


def _write_csv(report: Report, path: str) -> None:
    if report.command == "analyze":
        rows = [
            {"level": j + 1, "s": s, "xi": xi}
            for j, (s, xi) in enumerate(zip(report.results[0]["s"], report.results[0]["xi"]))
        ]
        columns = ["level", "s", "xi"]
    elif report.command == "diagnose":
        rows = next(r for r in report.results if r["section"] == "reverse_jensen")["entries"]
        columns = ["p", "n", "ratio", "normalized_log2"]
    else:
        rows = report.results
        columns = _CSV_COLUMNS[report.command]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config_file(argv, parser)
    except (InputError, OSError, json.JSONDecodeError) as exc:
        print(f"roughness: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    args = parser.parse_args(argv)
    try:
        request, ingested = _build_request(args)
        report = _dispatch(args, request)
        report = _attach_provenance(report, args, ingested)
        _write_json(report, args.json_path)
        if args.csv_path:
            _write_csv(report, args.csv_path)
    except DegeneracyError as exc:
        print(f"roughness: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (InputError, OSError, ValidationError, json.JSONDecodeError) as exc:
        print(f"roughness: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RoughnessError as exc:
        print(f"roughness: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
