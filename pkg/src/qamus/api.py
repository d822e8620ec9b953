"""Local HTTP API for the review UI.

Loopback by default, JSON bodies, no authentication: this hosts a
single-reviewer process on one machine. Requests are handled concurrently
but every mutation funnels through apply_decision under the project's
writer mutex, so readers see pre- or post-decision state, never a partial
one. Stale submissions (the entry moved on since the UI rendered it) fail
the pass/state precondition and come back as 409 IllegalTransition.

    GET  /api/queue?pass=<1|2>&limit=<n>
    GET  /api/entries/{id}
    POST /api/entries/{id}/decision   {pass, action, corrections, reviewer}
    GET  /api/stats

Anything outside /api/ is served from the static UI directory when one is
configured.
"""

from __future__ import annotations

import json
import mimetypes
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional
from urllib.parse import parse_qs, urlparse

from .model import entry_to_dict
from .relations import pending_fills_for
from .store import Project, UnknownEntry
from .workflow import (
    Decision,
    IllegalTransition,
    InvalidDecision,
    ValidationFailed,
    apply_decision,
    review_queue,
    stats,
)

DEFAULT_PORT = 7311


class AddressInUse(Exception):
    pass


_STATUS = {
    "UnknownEntry": 404,
    "IllegalTransition": 409,
    "ValidationFailed": 422,
    "InvalidDecision": 422,
    "InvalidBody": 422,
}


class _Handler(BaseHTTPRequestHandler):
    server_version = "qamus-review"
    protocol_version = "HTTP/1.1"

    # -- helpers -------------------------------------------------------------

    def _send_json(self, status: int, payload) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_error_code(self, code: str, message: str, extra: Optional[dict] = None) -> None:
        payload = {"code": code, "message": message}
        if extra:
            payload.update(extra)
        self._send_json(_STATUS.get(code, 400), payload)

    def log_message(self, fmt, *args):  # quiet by default; stderr noise helps nobody
        if self.server.verbose:  # type: ignore[attr-defined]
            super().log_message(fmt, *args)

    @property
    def project(self) -> Project:
        return self.server.project  # type: ignore[attr-defined]

    # -- routing ---------------------------------------------------------------

    def do_GET(self) -> None:
        url = urlparse(self.path)
        if url.path == "/api/queue":
            self._get_queue(parse_qs(url.query))
        elif url.path == "/api/stats":
            self._send_json(200, stats(self.project))
        elif url.path.startswith("/api/entries/"):
            self._get_entry(url.path.removeprefix("/api/entries/"))
        elif url.path.startswith("/api/"):
            self._send_error_code("UnknownEntry", f"no such endpoint: {url.path}")
        else:
            self._serve_static(url.path)

    def do_POST(self) -> None:
        url = urlparse(self.path)
        if url.path.startswith("/api/entries/") and url.path.endswith("/decision"):
            entry_id = url.path.removeprefix("/api/entries/").removesuffix("/decision")
            self._post_decision(entry_id)
        else:
            self._send_error_code("UnknownEntry", f"no such endpoint: {url.path}")

    # -- handlers ---------------------------------------------------------------

    def _get_queue(self, query: dict) -> None:
        try:
            pass_number = int(query.get("pass", ["1"])[0])
            limit = int(query["limit"][0]) if "limit" in query else None
        except ValueError:
            self._send_error_code("InvalidBody", "pass and limit must be integers")
            return
        try:
            items = review_queue(self.project, pass_number, limit)
        except InvalidDecision as exc:
            self._send_error_code(exc.code, str(exc))
            return
        self._send_json(200, items)

    def _get_entry(self, entry_id: str) -> None:
        entry = self.project.entries.get(entry_id)
        if entry is None:
            self._send_error_code("UnknownEntry", f"no entry with id {entry_id}")
            return
        payload = entry_to_dict(entry)
        payload["pending_fills"] = [f.to_dict() for f in pending_fills_for(self.project, entry_id)]
        self._send_json(200, payload)

    def _post_decision(self, entry_id: str) -> None:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        try:
            body = json.loads(raw.decode("utf-8"))
            if not isinstance(body, dict):
                raise ValueError("body must be a JSON object")
        except (ValueError, UnicodeDecodeError) as exc:
            self._send_error_code("InvalidBody", f"bad request body: {exc}")
            return
        decision = Decision(
            entry_id=entry_id,
            pass_number=body.get("pass", 0),
            action=body.get("action", ""),
            corrections=body.get("corrections") or {},
            reviewer=body.get("reviewer") or self.server.reviewer,  # type: ignore[attr-defined]
        )
        try:
            with self.server.mutation_lock:  # type: ignore[attr-defined]
                updated = apply_decision(self.project, decision)
        except ValidationFailed as exc:
            self._send_error_code(
                exc.code,
                str(exc),
                {"violations": [{"code": v.code, "field": v.field, "message": v.message} for v in exc.violations]},
            )
            return
        except (IllegalTransition, InvalidDecision, UnknownEntry) as exc:
            self._send_error_code(exc.code, str(exc))
            return
        self._send_json(200, entry_to_dict(updated))

    # -- static UI ---------------------------------------------------------------

    def _serve_static(self, path: str) -> None:
        ui_dir = self.server.ui_dir  # type: ignore[attr-defined]
        if ui_dir is None:
            if path == "/":
                self._send_json(
                    200,
                    {
                        "service": "qamus review API",
                        "endpoints": ["/api/queue", "/api/entries/{id}", "/api/stats"],
                        "note": "no UI directory configured; pass --ui-dir to serve the frontend",
                    },
                )
            else:
                self._send_error_code("UnknownEntry", f"no such path: {path}")
            return
        rel = path.lstrip("/") or "index.html"
        target = (ui_dir / rel).resolve()
        if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
            self._send_error_code("UnknownEntry", f"no such path: {path}")
            return
        content_type = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class ReviewApiServer:
    """Owns the HTTP server; the caller must already hold the project lock."""

    def __init__(
        self,
        project: Project,
        host: str = "127.0.0.1",
        port: int = DEFAULT_PORT,
        reviewer: str = "anonymous",
        ui_dir: Optional[Path] = None,
        verbose: bool = False,
    ):
        try:
            self.httpd = ThreadingHTTPServer((host, port), _Handler)
        except OSError as exc:
            if exc.errno in (48, 98):  # EADDRINUSE (mac, linux)
                raise AddressInUse(f"{host}:{port} is already in use") from None
            raise
        self.httpd.project = project  # type: ignore[attr-defined]
        self.httpd.reviewer = reviewer  # type: ignore[attr-defined]
        self.httpd.ui_dir = Path(ui_dir) if ui_dir else None  # type: ignore[attr-defined]
        self.httpd.verbose = verbose  # type: ignore[attr-defined]
        self.httpd.mutation_lock = threading.Lock()  # type: ignore[attr-defined]
        self._thread: Optional[threading.Thread] = None

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[:2]

    @property
    def url(self) -> str:
        host, port = self.address
        return f"http://{host}:{port}/"

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def start_background(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def shutdown(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def serve_review_api(
    project: Project,
    host: str = "127.0.0.1",
    port: int = DEFAULT_PORT,
    **kwargs,
) -> ReviewApiServer:
    server = ReviewApiServer(project, host=host, port=port, **kwargs)
    server.start_background()
    return server
