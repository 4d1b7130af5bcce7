"""FastAPI surface for the roughness estimation service.

Run with:  uvicorn roughness.service.app:app

Input errors map to 400, numerical degeneracies to 422; both carry the
error class name so clients can branch without parsing messages.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import DegeneracyError, InputError
from . import handlers
from .schemas import (
    AnalyzeRequest,
    DiagnoseRequest,
    EstimateRequest,
    Report,
    RollRequest,
    SimulateRequest,
)

app = FastAPI(
    title="roughness",
    version=__version__,
    description="Model-free Hurst roughness exponent estimation",
)


@app.exception_handler(InputError)
async def _input_error(_: Request, exc: InputError):
    return JSONResponse(status_code=400, content={"error": type(exc).__name__, "detail": str(exc)})


@app.exception_handler(DegeneracyError)
async def _degeneracy(_: Request, exc: DegeneracyError):
    return JSONResponse(status_code=422, content={"error": type(exc).__name__, "detail": str(exc)})


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/analyze", response_model=Report)
def analyze(req: AnalyzeRequest) -> Report:
    return handlers.run_analyze(req)


@app.post("/estimate", response_model=Report)
def estimate(req: EstimateRequest) -> Report:
    return handlers.run_estimate(req)


@app.post("/roll", response_model=Report)
def roll(req: RollRequest) -> Report:
    return handlers.run_roll(req)


@app.post("/simulate", response_model=Report)
def simulate(req: SimulateRequest) -> Report:
    return handlers.run_simulate(req)


@app.post("/diagnose", response_model=Report)
def diagnose(req: DiagnoseRequest) -> Report:
    return handlers.run_diagnose(req)
