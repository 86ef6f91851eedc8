"""HTTP service exposing the estimators and the figure data sets.

The CLI calls the same underlying functions in-process; this module only
adds request/response schemas and error mapping.
"""

from __future__ import annotations

import math

from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from . import figures
from .errors import (FadeoutError, NotApplicableError, NumericalFailureError,
                     OutOfDomainError)
from .fem2d import DEFAULT_DENSITIES
from .model import ModelParams


class EstimateRequest(BaseModel):
    method: str = Field(description="Exact, Det, Lin, DSS, KL, AD, OU, FPE, "
                                    "BBN, Diff, or MC")
    beta: float = Field(gt=0)
    gamma: float = Field(default=1.0, gt=0)
    n_pop: int = Field(ge=2)
    k_stages: int = Field(default=1, ge=1)
    i: int | None = Field(default=None, ge=1,
                          description="initial infective count, where used")
    seed: int = 0
    mc_paths: int = Field(default=100_000, ge=1)


class EstimateResponse(BaseModel):
    method: str
    value: float | None
    log_value: float | None = None
    std_error: float | None = None
    meta: dict = {}


class FigureRequest(BaseModel):
    figure: str
    beta: float | None = None
    gamma: float = 1.0
    k: int | None = None
    n_grid: list[int] | None = None
    methods: list[str] | None = None
    seed: int = 0
    fem_density: list[int] | None = None


def create_app() -> FastAPI:
    app = FastAPI(title="fadeout", version="1.0.0")

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/estimate", response_model=EstimateResponse)
    def estimate(req: EstimateRequest) -> EstimateResponse:
        params = ModelParams(beta=req.beta, gamma=req.gamma, n_pop=req.n_pop,
                             k_stages=req.k_stages)
        try:
            est = figures.evaluate_method(req.method, params, i=req.i,
                                          seed=req.seed,
                                          mc_paths=req.mc_paths)
        except (OutOfDomainError, NotApplicableError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except NumericalFailureError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return EstimateResponse(
            method=est.method.value,
            value=est.value if math.isfinite(est.value) else None,
            log_value=est.log_value,
            std_error=est.std_error,
            meta=est.meta,
        )

    @app.post("/figure")
    def figure(req: FigureRequest) -> Response:
        try:
            spec = figures.RunSpec(
                figure=req.figure,
                beta=req.beta,
                gamma=req.gamma,
                k=req.k,
                n_grid=tuple(req.n_grid) if req.n_grid else None,
                methods=tuple(req.methods) if req.methods else None,
                seed=req.seed,
                fem_density=(tuple(req.fem_density) if req.fem_density
                             else DEFAULT_DENSITIES),
            )
            data = figures.compute_figure(spec)
        except (OutOfDomainError, NotApplicableError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except NumericalFailureError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        return Response(content=data.to_csv_text(), media_type="text/csv")

    @app.exception_handler(FadeoutError)
    def _domain_error(_request, exc):  # pragma: no cover - safety net
        raise HTTPException(status_code=500, detail=str(exc))

    return app


app = create_app()
