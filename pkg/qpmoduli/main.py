from __future__ import annotations

import logging
from typing import Any

from fastapi import FastAPI, HTTPException

from qpmoduli import __version__, schemas
from qpmoduli.services.catalog import get_algebra, list_algebras
from qpmoduli.services.qla import AlgebraError, dump_algebra, validate_algebra
from qpmoduli.services.suite import prepare, resolve_recipe, run_suite
from qpmoduli.services.surface import analyze, replay

logger = logging.getLogger(__name__)

app = FastAPI(
    title="Quasi-Poisson Moduli API",
    version=__version__,
    description="Exact verification of quasi-Poisson structures on moduli spaces of flat connections.",
)


@app.get("/health")
def health_check() -> dict[str, str]:
    return {"status": "ok"}


@app.get("/")
def root() -> dict[str, str]:
    return {"message": "API is running", "docs": "/docs", "health": "/health"}


@app.get("/catalog", response_model=list[schemas.AlgebraSummary])
def catalog() -> list[schemas.AlgebraSummary]:
    out = []
    for name in list_algebras():
        algebra = get_algebra(name)
        out.append(
            schemas.AlgebraSummary(
                name=name,
                dim=algebra.dim,
                nondegenerate=algebra.nondegenerate,
                valid=validate_algebra(algebra).ok,
            )
        )
    return out


@app.get("/catalog/{name}")
def catalog_entry(name: str) -> dict[str, Any]:
    try:
        return dump_algebra(get_algebra(name))
    except AlgebraError as exc:
        raise HTTPException(status_code=404, detail=str(exc)) from exc


@app.post("/surfaces/analyze", response_model=schemas.SurfaceAnalysisOut)
def analyze_surface(payload: schemas.RecipeIn) -> schemas.SurfaceAnalysisOut:
    try:
        surface = replay(resolve_recipe(payload))
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return schemas.SurfaceAnalysisOut(surface=surface.as_dict(), analysis=analyze(surface).as_dict())


@app.post("/suites/run", response_model=schemas.Report)
def run(payload: schemas.SuiteConfig) -> schemas.Report:
    try:
        suite = prepare(payload)
        return run_suite(suite)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
