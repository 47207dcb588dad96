"""HTTP front end over the pipeline commands.

One POST route per pipeline stage plus a health probe. Domain errors map
to a structured body {"kind", "message"} mirroring the CLI exit codes:
config problems are 400, missing/unreadable files 404, numerical failures
422.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from .schemas import (
    ErrorBody,
    EvalRequest,
    EvalResponse,
    GenDataRequest,
    GenDataResponse,
    HealthResponse,
    HsicRequest,
    HsicResponse,
    TrainRequest,
    TrainResponse,
)


def _error_response(status: int, kind: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content=ErrorBody(kind=kind, message=message).model_dump(),
    )


def create_app() -> FastAPI:
    app = FastAPI(title="hsicwae", version=__version__)

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request,
                             exc: RequestValidationError) -> JSONResponse:
        # exc.errors(), not str(exc): the latter appends the handler's
        # source location, leaking server paths into the response.
        parts = [
            "%s: %s" % (".".join(str(p) for p in err["loc"]), err["msg"])
            for err in exc.errors()
        ]
        return _error_response(400, "config", "; ".join(parts))

    @app.exception_handler(ValueError)
    async def _config_error(request: Request, exc: ValueError) -> JSONResponse:
        return _error_response(400, "config", str(exc))

    @app.exception_handler(OSError)
    async def _io_error(request: Request, exc: OSError) -> JSONResponse:
        return _error_response(404, "io", str(exc))

    @app.exception_handler(ArithmeticError)
    async def _numeric_error(request: Request, exc: ArithmeticError) -> JSONResponse:
        return _error_response(422, "numeric", str(exc))

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/gen-data", response_model=GenDataResponse)
    def gen_data(req: GenDataRequest) -> GenDataResponse:
        return GenDataResponse(**pipeline.cmd_gen_data(req.config))

    @app.post("/train", response_model=TrainResponse)
    def train(req: TrainRequest) -> TrainResponse:
        return TrainResponse(**pipeline.cmd_train(req.config))

    @app.post("/eval", response_model=EvalResponse)
    def evaluate(req: EvalRequest) -> EvalResponse:
        return EvalResponse(**pipeline.cmd_eval(req.config, req.checkpoint))

    @app.post("/hsic", response_model=HsicResponse, response_model_exclude_none=True)
    def hsic(req: HsicRequest) -> HsicResponse:
        result = pipeline.cmd_hsic(
            np.asarray(req.x), np.asarray(req.y),
            kernel=req.kernel, statistic=req.statistic,
            permutations=req.permutations, seed=req.seed,
        )
        return HsicResponse(**result)

    return app


app = create_app()
