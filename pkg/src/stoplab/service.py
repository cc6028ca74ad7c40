"""HTTP+JSON API for live experiment sessions.

Endpoints wrap the SessionStore one-to-one; responses before finalization
are redacted so a participant can never see values past the reveal
cursor, the position of the maximum, or the draw base.  All errors use
the shape {"error": code, "message": text}.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any, Literal

import uvicorn
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse
from pydantic import BaseModel, Field

from .core import (
    InvalidParamsError,
    PayoffParams,
    asymptotics,
    closed_form_value,
    expected_duration,
    optimal_threshold,
    solve,
    stop_probability,
)
from .sessions import (
    REVEAL_FLAGS,
    REVEAL_VALUES,
    ProtocolError,
    SessionConfig,
    SessionRecord,
    SessionStore,
    UnknownSessionError,
)
from .simulate import DEFAULT_HORIZON_CAP

ENV_PORT = "STOPLAB_PORT"
ENV_LOG_DIR = "STOPLAB_LOG_DIR"
ENV_HORIZON_CAP = "STOPLAB_HORIZON_CAP"


class CreateSessionRequest(BaseModel):
    n: int = Field(ge=1)
    alpha: float = 1.0
    beta: float = 0.0
    gamma: float = 0.0
    seed: int | None = None
    reveal_policy: Literal["values", "flags"] = REVEAL_VALUES


class DecisionRequest(BaseModel):
    choice: Literal["stop", "pass"]
    metadata: dict[str, Any] | None = None


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": code, "message": message})


def _reveal_view(record: SessionRecord, payload: dict) -> dict:
    shown = dict(payload)
    if record.config.reveal_policy == REVEAL_FLAGS:
        shown["value"] = None
    return shown


def redacted_view(record: SessionRecord) -> dict:
    """Participant-safe snapshot: only the revealed prefix, never the params."""
    return {
        "session_id": record.session_id,
        "n": record.config.n,
        "state": record.state,
        "cursor": record.cursor,
        "pending_decision": record.pending_decision,
        "revealed": [_reveal_view(record, p) for p in record.revealed_payloads()],
    }


def create_app(store: SessionStore) -> FastAPI:
    app = FastAPI(title="stoplab session service", docs_url=None, redoc_url=None)
    # the participant UI is typically served from a different origin/port
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(UnknownSessionError)
    async def _unknown(request: Request, exc: UnknownSessionError):
        return _error(404, "not_found", str(exc))

    @app.exception_handler(ProtocolError)
    async def _protocol(request: Request, exc: ProtocolError):
        return _error(409, exc.code, str(exc))

    @app.exception_handler(InvalidParamsError)
    async def _params(request: Request, exc: InvalidParamsError):
        return _error(400, "validation", str(exc))

    @app.exception_handler(ValueError)
    async def _value(request: Request, exc: ValueError):
        return _error(400, "validation", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _request_validation(request: Request, exc: RequestValidationError):
        return _error(422, "validation", str(exc.errors()))

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionRequest) -> dict:
        config = SessionConfig(
            n=body.n,
            params=PayoffParams(body.alpha, body.beta, body.gamma),
            reveal_policy=body.reveal_policy,
            seed=body.seed,
        )
        record = store.create(config)
        return {"session_id": record.session_id, "n": record.config.n, "state": record.state}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return redacted_view(store.get(session_id))

    @app.post("/sessions/{session_id}/next")
    def next_observation(session_id: str) -> dict:
        payload = store.next_observation(session_id)
        return _reveal_view(store.get(session_id), payload)

    @app.post("/sessions/{session_id}/decision")
    def decide(session_id: str, body: DecisionRequest) -> dict:
        record = store.decide(session_id, body.choice, body.metadata)
        view = redacted_view(record)
        view["finalized"] = record.state == "finalized"
        return view

    @app.get("/sessions/{session_id}/result")
    def result(session_id: str) -> dict:
        return store.result(session_id)

    @app.get("/export")
    def export(since: str | None = None):
        def lines():
            for line in store.export_jsonl(since):
                yield line + "\n"

        return StreamingResponse(lines(), media_type="application/x-ndjson")

    @app.get("/solve")
    def solve_endpoint(alpha: float, beta: float, gamma: float, n: int) -> dict:
        params = PayoffParams(alpha, beta, gamma)
        solution = solve(params, n)
        limits = asymptotics(params)
        closed = [
            closed_form_value(params, n, k, k_star=solution.k_star) for k in range(1, n + 1)
        ]
        return {
            "alpha": alpha,
            "beta": beta,
            "gamma": gamma,
            "n": n,
            "k_star": solution.k_star,
            "t_star": limits.t_star,
            "v_limit": limits.v_limit,
            "p_win_limit": limits.p_win,
            "mean_duration_fraction": limits.mean_duration_fraction,
            "stop_probability": stop_probability(params, n),
            "expected_duration_start": expected_duration(params, n, 0),
            "values": solution.values,
            "values_closed_form": closed,
            "g": solution.g,
            "durations": solution.durations,
        }

    return app


def run_server(
    host: str = "127.0.0.1",
    port: int | None = None,
    log_dir: str | Path | None = None,
    horizon_cap: int | None = None,
) -> None:
    """Start the service; flag values win over environment variables."""
    if port is None:
        port = int(os.environ.get(ENV_PORT, "8000"))
    if log_dir is None:
        log_dir = os.environ.get(ENV_LOG_DIR) or None
    if horizon_cap is None:
        horizon_cap = int(os.environ.get(ENV_HORIZON_CAP, str(DEFAULT_HORIZON_CAP)))
    store = SessionStore(log_dir, horizon_cap=horizon_cap)
    try:
        uvicorn.run(create_app(store), host=host, port=port, log_level="warning")
    finally:
        store.close()
