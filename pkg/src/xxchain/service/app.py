"""FastAPI service wrapping the experiment drivers.

Runs are executed synchronously; desk-scale sweeps take seconds to minutes,
so clients should set their read timeout accordingly.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, experiments
from ..config import ConfigError
from .models import RunRequest, SubcommandInfo, TableResponse


def execute(request: RunRequest) -> TableResponse:
    """Shared handler for the HTTP route and the in-process CLI client."""
    table = experiments.run(request.subcommand, dict(request.config), threads=request.threads)
    return TableResponse(
        subcommand=table.subcommand,
        meta=table.meta,
        columns=table.columns,
        rows=[[float(v) for v in row] for row in table.rows],
    )


def create_app() -> FastAPI:
    app = FastAPI(
        title="xxchain",
        version=__version__,
        description="Protected-qubit chain and adiabatic gate simulations",
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/subcommands", response_model=list[SubcommandInfo])
    def subcommands() -> list[SubcommandInfo]:
        return [
            SubcommandInfo(name=name, defaults=experiments.DEFAULTS[name])
            for name in experiments.SUBCOMMANDS
        ]

    @app.post("/run", response_model=TableResponse)
    def run_experiment(request: RunRequest) -> TableResponse:
        try:
            return execute(request)
        except ConfigError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc

    return app


app = create_app()
