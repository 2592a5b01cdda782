"""HTTP/JSON facade over live sessions for the companion UI and scripts.

File-backed: each session is one JSON file in the sessions directory.  Writes
take a per-session lock and are flushed to disk before the response returns.
"""

from __future__ import annotations

import os
import threading
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import (
    DuplicateResponse,
    HasodError,
    NonFiniteError,
    SessionComplete,
    SessionError,
    UnknownRowId,
)
from .session import (
    PHASE_DONE,
    SessionConfig,
    SessionState,
    _result_to_dict,
    _screening_to_dict,
    load_session,
    save_session,
)
from .optimize import DEConfig

_CONFIG_OVERRIDE_KEYS = {
    "en_lambda",
    "en_alpha",
    "se_lambda",
    "combined_lambda",
    "epsilon",
    "n3",
    "region_halfwidth",
    "axial_clip",
    "include_quadratics_on_C",
}


class SessionStore:
    def __init__(self, directory: str):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _path(self, session_id: str) -> str:
        if not session_id.isalnum():
            raise HTTPException(404, "unknown session id")
        return os.path.join(self.directory, f"{session_id}.json")

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def ids(self) -> list[str]:
        return sorted(
            f[: -len(".json")]
            for f in os.listdir(self.directory)
            if f.endswith(".json")
        )

    def load(self, session_id: str) -> SessionState:
        path = self._path(session_id)
        if not os.path.exists(path):
            raise HTTPException(404, "unknown session id")
        return load_session(path)

    def save(self, session_id: str, state: SessionState) -> None:
        save_session(state, self._path(session_id))

    def created_at(self, session_id: str) -> float:
        return os.path.getmtime(self._path(session_id))


def _summary(store: SessionStore, session_id: str, state: SessionState) -> dict:
    pending = 0 if state.phase == PHASE_DONE else len(state.propose_runs())
    return {
        "id": session_id,
        "phase": state.phase,
        "k": state.config.k,
        "pending_run_count": pending,
        "created_at": store.created_at(session_id),
    }


def make_app(sessions_dir: str, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="hasod")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(sessions_dir)

    @app.exception_handler(HasodError)
    async def _domain_error(request: Request, exc: HasodError):
        status = 400
        if isinstance(exc, UnknownRowId):
            status = 404
        elif isinstance(exc, DuplicateResponse):
            status = 422
        elif isinstance(exc, (SessionComplete,)):
            status = 409
        return JSONResponse(
            status_code=status, content={"error": type(exc).__name__, "detail": str(exc)}
        )

    async def _json_body(request: Request):
        try:
            return await request.json()
        except Exception:
            raise HTTPException(400, "malformed JSON body")

    @app.post("/api/sessions", status_code=201)
    async def create_session(request: Request):
        body = await _json_body(request)
        if not isinstance(body, dict) or "k" not in body:
            raise HTTPException(400, "body must be an object with at least 'k'")
        try:
            k = int(body["k"])
            seed = int(body.get("seed", 0))
            overrides = {
                key: body[key] for key in _CONFIG_OVERRIDE_KEYS if key in body
            }
            config = SessionConfig(k=k, seed=seed, **overrides)
            if isinstance(body.get("de"), dict):
                config.de = DEConfig(**body["de"])
        except (TypeError, ValueError) as exc:
            raise HTTPException(400, f"bad config: {exc}")
        try:
            state = SessionState(config)
        except SessionError as exc:
            raise HTTPException(400, str(exc))
        session_id = uuid.uuid4().hex
        with store.lock(session_id):
            store.save(session_id, state)
        return _summary(store, session_id, state)

    @app.get("/api/sessions")
    async def list_sessions():
        out = []
        for session_id in store.ids():
            out.append(_summary(store, session_id, store.load(session_id)))
        return out

    @app.get("/api/sessions/{session_id}")
    async def get_session(session_id: str):
        return store.load(session_id).to_dict()

    @app.get("/api/sessions/{session_id}/batch")
    async def get_batch(session_id: str):
        state = store.load(session_id)
        if state.phase == PHASE_DONE:
            return []
        return [
            {"row_id": row_id, "levels": [float(v) for v in levels]}
            for row_id, levels in state.propose_runs()
        ]

    @app.post("/api/sessions/{session_id}/responses")
    async def post_responses(session_id: str, request: Request):
        body = await _json_body(request)
        if not isinstance(body, list):
            raise HTTPException(400, "body must be a list of {row_id, y}")
        try:
            responses = [(int(item["row_id"]), float(item["y"])) for item in body]
        except (TypeError, KeyError, ValueError):
            raise HTTPException(400, "each item needs integer row_id and numeric y")
        with store.lock(session_id):
            state = store.load(session_id)
            state.ingest_responses(responses)
            store.save(session_id, state)
        return {"phase": state.phase}

    @app.get("/api/sessions/{session_id}/report")
    async def get_report(session_id: str):
        state = store.load(session_id)
        if state.phase != PHASE_DONE:
            raise HTTPException(409, "session is not complete")
        return _result_to_dict(state.result)

    @app.get("/api/sessions/{session_id}/screening")
    async def get_screening(session_id: str):
        state = store.load(session_id)
        if state.screening is None:
            raise HTTPException(404, "screening not available yet")
        return _screening_to_dict(state.screening)

    @app.get("/api/sessions/{session_id}/surface")
    async def get_surface(session_id: str, x: str):
        state = store.load(session_id)
        if state.gp_params is None:
            raise HTTPException(409, "no surrogate before Phase 2 completes")
        try:
            point = np.array([float(v) for v in x.split(",")], dtype=float)
        except ValueError:
            raise HTTPException(400, "x must be comma-separated numbers")
        if len(point) != state.config.k:
            raise HTTPException(400, f"x must have {state.config.k} coordinates")
        mean, var = state.current_gp_model().predict(point)
        return {"mean": mean, "variance": var}

    if static_dir is not None and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
