"""Session-oriented HTTP API for live monitoring of a WoR sampling process.

One session wraps one engine; observations are posted as they are collected
and every post returns the refreshed snapshot.  Persistence is an
append-only JSONL observation log; recovery replays the log through the
(deterministic) engines, so snapshots are always recomputed, never stored.

No authentication: this is a single-operator tool.  CORS is open for the
companion browser UI; do not expose the port beyond localhost without a
proxy in front.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from collections import OrderedDict

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .engines import Engine, EngineConfig
from .errors import DomainError, StateError, ValidationError, WorcsError

CHECKPOINT_EVERY = 200


class ApiError(WorcsError):
    def __init__(self, status: int, code: str, message: str,
                 field: str | None = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.field = field

    def body(self) -> dict:
        out = {"code": self.code, "message": str(self)}
        if self.field:
            out["field"] = self.field
        return out


class Session:
    def __init__(self, sid: str, created_at: float, config_raw: dict,
                 engine: Engine):
        self.id = sid
        self.created_at = created_at
        self.config_raw = config_raw
        self.engine = engine
        self.initial = engine.initial_snapshot().to_dict()
        self.idempotency: dict[str, dict] = {}
        self.lock = threading.Lock()

    def status(self) -> dict:
        engine = self.engine
        if engine.stopped is not None:
            reason, at = engine.stopped
            state = "stopped"
        else:
            reason = at = None
            state = "exhausted" if engine.exhausted else "active"
        out = {"state": state, "exhausted": engine.exhausted,
               "t": engine.t}
        if reason is not None:
            out["reason"] = reason
            out["stop_t"] = at
        return out

    def etag(self) -> str:
        return f'W/"{self.id}:{self.engine.t}:{self.status()["state"]}"'


class SessionStore:
    """In-memory session map with an append-only log and LRU eviction."""

    def __init__(self, state_file: str | None = None,
                 max_sessions: int = 10000,
                 checkpoint_every: int = CHECKPOINT_EVERY):
        self.max_sessions = max_sessions
        self.checkpoint_every = checkpoint_every
        self.sessions: OrderedDict[str, Session] = OrderedDict()
        self._lock = threading.RLock()
        self._events = 0
        self.state_file = state_file
        self._log = None
        if state_file:
            if os.path.exists(state_file):
                self._replay(state_file)
            self._log = open(state_file, "a", encoding="utf-8")

    # -- persistence -------------------------------------------------------

    def _replay(self, path: str) -> None:
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    ev = json.loads(line)
                except json.JSONDecodeError as e:
                    raise ValidationError(
                        f"corrupt state file at line {lineno}: {e}") from e
                kind = ev.get("kind")
                if kind == "create":
                    cfg = EngineConfig.from_dict(ev["config"])
                    sess = Session(ev["id"], ev["created_at"], ev["config"],
                                   Engine(cfg))
                    self.sessions[ev["id"]] = sess
                elif kind == "observe":
                    sess = self.sessions.get(ev["id"])
                    if sess is None:
                        continue
                    key = ev.get("idempotency_key")
                    if key and key in sess.idempotency:
                        continue
                    snap = sess.engine.observe(ev["value"])
                    if key:
                        sess.idempotency[key] = snap.to_dict()
                elif kind == "evict":
                    self.sessions.pop(ev["id"], None)

    def _append(self, event: dict) -> None:
        if self._log is None:
            return
        self._log.write(json.dumps(event, separators=(",", ":")) + "\n")
        self._log.flush()
        self._events += 1
        if self._events % self.checkpoint_every == 0:
            self.checkpoint()

    def checkpoint(self) -> None:
        """Write a metadata checkpoint (observation counts, never snapshots)."""
        if not self.state_file:
            return
        meta = {
            "written_at": time.time(),
            "sessions": {sid: {"t": s.engine.t, "status": s.status()["state"]}
                         for sid, s in self.sessions.items()},
        }
        with open(self.state_file + ".checkpoint.json", "w",
                  encoding="utf-8") as f:
            json.dump(meta, f, indent=2, sort_keys=True)

    def flush(self) -> None:
        self.checkpoint()
        if self._log is not None:
            self._log.flush()

    def close(self) -> None:
        self.flush()
        if self._log is not None:
            self._log.close()
            self._log = None

    # -- operations ----------------------------------------------------------

    def _evict_if_needed(self) -> None:
        while len(self.sessions) >= self.max_sessions:
            victim = None
            for sid, sess in self.sessions.items():
                if sess.status()["state"] != "active":
                    victim = sid
                    break
            if victim is None:
                raise ApiError(429, "session_limit",
                               f"{self.max_sessions} active sessions reached")
            del self.sessions[victim]
            self._append({"kind": "evict", "id": victim})

    def create(self, config_raw: dict) -> Session:
        try:
            cfg = EngineConfig.from_dict(config_raw)
            engine = Engine(cfg)
        except ValidationError as e:
            raise ApiError(400, "invalid_config", str(e),
                           field=getattr(e, "field", None)) from e
        with self._lock:
            self._evict_if_needed()
            sid = uuid.uuid4().hex
            sess = Session(sid, time.time(), config_raw, engine)
            self.sessions[sid] = sess
            self._append({"kind": "create", "id": sid,
                          "created_at": sess.created_at,
                          "config": config_raw})
        return sess

    def _get(self, sid: str) -> Session:
        with self._lock:
            sess = self.sessions.get(sid)
            if sess is None:
                raise ApiError(404, "unknown_session", f"no session {sid}")
            self.sessions.move_to_end(sid)
        return sess

    def observe(self, sid: str, value, idempotency_key: str | None) -> dict:
        sess = self._get(sid)
        with sess.lock:
            if idempotency_key and idempotency_key in sess.idempotency:
                return sess.idempotency[idempotency_key]
            if sess.engine.exhausted:
                raise ApiError(409, "exhausted",
                               "population exhausted: no further observations")
            try:
                snap = sess.engine.observe(value)
            except (ValidationError, DomainError) as e:
                raise ApiError(422, "out_of_domain", str(e),
                               field="value") from e
            except StateError as e:
                raise ApiError(409, "exhausted", str(e)) from e
            body = snap.to_dict()
            if idempotency_key:
                sess.idempotency[idempotency_key] = body
            self._append({"kind": "observe", "id": sid, "value": value,
                          "idempotency_key": idempotency_key})
            return body

    def get_state(self, sid: str, since: int = 0) -> tuple[dict, str]:
        sess = self._get(sid)
        history = sess.engine.history
        snaps = [s.to_dict() for s in history[max(0, since):]]
        payload = {
            "id": sess.id,
            "created_at": sess.created_at,
            "config": sess.config_raw,
            "status": sess.status(),
            "initial_snapshot": sess.initial,
            "since": since,
            "snapshots": snaps,
        }
        return payload, sess.etag()


def create_app(store: SessionStore) -> FastAPI:
    """Build the FastAPI app around a session store."""
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app):
        yield
        store.close()

    app = FastAPI(title="worcs", version="1", lifespan=lifespan)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.body())

    @app.get("/v1/healthz")
    def healthz():
        return {"status": "ok", "sessions": len(store.sessions)}

    @app.post("/v1/sessions", status_code=201)
    def create_session(config: dict):
        sess = store.create(config)
        return {
            "id": sess.id,
            "created_at": sess.created_at,
            "config": sess.config_raw,
            "status": sess.status(),
            "snapshot": sess.initial,
        }

    @app.post("/v1/sessions/{sid}/observations")
    def post_observation(sid: str, body: dict):
        if "value" not in body:
            raise ApiError(422, "missing_value", "body needs a value",
                           field="value")
        return store.observe(sid, body["value"],
                             body.get("idempotency_key"))

    @app.get("/v1/sessions/{sid}")
    def get_session(sid: str, request: Request, since: int = 0):
        payload, etag = store.get_state(sid, since)
        if request.headers.get("if-none-match") == etag:
            return Response(status_code=304, headers={"ETag": etag})
        return JSONResponse(content=payload, headers={"ETag": etag})

    return app
