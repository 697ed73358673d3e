"""Session service: the engine behind a JSON-over-WebSocket protocol.

One engine session per session id; commands are applied strictly in seq
order (the first message fixes the base, afterwards seq must increase by
exactly one) and every command is answered with the full document state.
A protocol violation closes the offending session only.
"""

from __future__ import annotations

import asyncio
import time

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import Session
from .mathml import export_presentation
from .script import command_from_dict
from .templates import load_registry

DEFAULT_IDLE_TIMEOUT_MIN = 30


class SessionHost:
    """Holds engine sessions for the service; one lock per session."""

    def __init__(self, registry=None, idle_timeout_min=DEFAULT_IDLE_TIMEOUT_MIN):
        self.registry = registry if registry is not None else load_registry()
        self.idle_timeout = idle_timeout_min * 60
        self._sessions = {}   # id -> (Session, lock, last_seq or None, last_used)

    def get(self, session_id):
        entry = self._sessions.get(session_id)
        if entry is None:
            entry = [Session(registry=self.registry), asyncio.Lock(),
                     None, time.monotonic()]
            self._sessions[session_id] = entry
        return entry

    def drop(self, session_id):
        self._sessions.pop(session_id, None)

    def reap_idle(self):
        now = time.monotonic()
        for sid in [sid for sid, e in self._sessions.items()
                    if now - e[3] > self.idle_timeout]:
            self.drop(sid)


def state_response(session, seq, result=None, diagnostics=()):
    status = result.status if result is not None else "ok"
    return {
        "seq": seq,
        "status": status,
        "reason": result.reason if result is not None else None,
        "content_mathml": session.export_content(),
        "presentation_mathml": export_presentation(session.doc,
                                                   session.registry),
        "caret": session.doc.caret.text_form(),
        "mode": session.mode,
        "pending_token": session.pending,
        "transform_log": [e.as_dict() for e in result.transform_log]
        if result is not None else [],
        "diagnostics": list(diagnostics),
    }


def handle_message(host, message):
    """(response dict, close: bool) for one protocol message."""
    session_id = message.get("session")
    seq = message.get("seq")
    if not isinstance(session_id, str) or not isinstance(seq, int):
        return ({"seq": seq, "status": "error",
                 "diagnostics": ["BadMessage: session and seq required"]},
                True)
    entry = host.get(session_id)
    session, _lock, last_seq, _t = entry
    entry[3] = time.monotonic()
    if message.get("command", {}).get("type") == "templates":
        listing = [{"id": t.id, "glyphs": list(t.glyphs), "arity": t.arity}
                   for t in session.registry.templates.values()]
        resp = state_response(session, seq)
        resp["templates"] = listing
        entry[2] = seq
        return resp, False
    if last_seq is not None and seq != last_seq + 1:
        host.drop(session_id)
        return ({"seq": seq, "status": "error",
                 "diagnostics": [f"SeqGap: expected {last_seq + 1}, "
                                 f"got {seq}"]}, True)
    entry[2] = seq
    try:
        cmd = command_from_dict(message.get("command") or {})
    except (KeyError, ValueError) as exc:
        host.drop(session_id)
        return ({"seq": seq, "status": "error",
                 "diagnostics": [f"BadCommand: {exc}"]}, True)
    snap = session.doc.snapshot()
    try:
        result = session.apply(cmd)
    except Exception as exc:  # crash isolation: restore last good state
        session.doc.restore(snap)
        resp = state_response(session, seq)
        resp["status"] = "error"
        resp["diagnostics"] = [f"InternalError: {type(exc).__name__}: {exc}"]
        return resp, False
    return state_response(session, seq, result), False


def create_app(registry=None, idle_timeout_min=DEFAULT_IDLE_TIMEOUT_MIN,
               frontend_dir=None):
    host = SessionHost(registry, idle_timeout_min)
    app = FastAPI(title="semedit session service")
    app.state.host = host

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        host.reap_idle()
        try:
            while True:
                message = await ws.receive_json()
                session_id = message.get("session")
                entry = host._sessions.get(session_id)
                lock = entry[1] if entry else None
                if lock is not None:
                    async with lock:
                        response, close = handle_message(host, message)
                else:
                    response, close = handle_message(host, message)
                await ws.send_json(response)
                if close:
                    await ws.close()
                    return
        except WebSocketDisconnect:
            return

    @app.get("/healthz")
    def health():
        return {"ok": True, "sessions": len(host._sessions)}

    if frontend_dir is not None:
        from pathlib import Path

        from fastapi.responses import FileResponse
        from fastapi.staticfiles import StaticFiles

        root = Path(frontend_dir)
        if (root / "index.html").is_file():
            @app.get("/")
            def index():
                return FileResponse(root / "index.html")

            if (root / "dist").is_dir():
                app.mount("/dist",
                          StaticFiles(directory=root / "dist"),
                          name="dist")

    return app
