"""HTTP control surface for a running stream session.

Versioned under /v1/: status snapshot, model swap, multiplier change, stop,
and a server-sent-events feed mirroring the emitted stream.  Optionally
serves the dashboard's static files at the root path.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import os
import queue
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from . import io as io_mod
from .stream import StreamSession

log = logging.getLogger(__name__)

FEED_STATUS_INTERVAL_S = 1.0


class ControlServer:
    def __init__(self, session: StreamSession, host: str = "127.0.0.1",
                 port: int = 9001, static_dir: Optional[str] = None):
        self.session = session
        self.static_dir = os.path.abspath(static_dir) if static_dir else None
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._httpd.daemon_threads = True
        self._thread: Optional[threading.Thread] = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=2.0)


def _make_handler(server: "ControlServer"):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # route through logging, not stderr
            log.debug("control: " + fmt, *args)

        def _json(self, status: int, payload: dict) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _read_body(self) -> bytes:
            length = int(self.headers.get("Content-Length") or 0)
            return self.rfile.read(length)

        # -- GET -----------------------------------------------------------

        def do_GET(self):
            if self.path == "/v1/status":
                self._json(200, server.session.status())
            elif self.path == "/v1/feed":
                self._serve_feed()
            elif server.static_dir is not None and not self.path.startswith("/v1/"):
                self._serve_static()
            else:
                self._json(404, {"error": f"unknown path {self.path}"})

        def _serve_feed(self) -> None:
            if not server.session.running:
                self._json(409, {"error": "no running session"})
                return
            sub = server.session.subscribe()
            try:
                self.send_response(200)
                self.send_header("Content-Type", "text/event-stream")
                self.send_header("Cache-Control", "no-cache")
                self.send_header("Access-Control-Allow-Origin", "*")
                self.end_headers()
                while server.session.running:
                    try:
                        kind, payload = sub.get(timeout=FEED_STATUS_INTERVAL_S)
                    except queue.Empty:
                        kind, payload = "status", server.session.status()
                    frame = f"event: {kind}\ndata: {json.dumps(payload)}\n\n"
                    self.wfile.write(frame.encode("utf-8"))
                    self.wfile.flush()
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                server.session.unsubscribe(sub)
                self.close_connection = True

        def _serve_static(self) -> None:
            rel = self.path.lstrip("/") or "index.html"
            path = os.path.normpath(os.path.join(server.static_dir, rel))
            if not path.startswith(os.path.abspath(server.static_dir)):
                self._json(404, {"error": "not found"})
                return
            if not os.path.isfile(path):
                self._json(404, {"error": "not found"})
                return
            ctype = mimetypes.guess_type(path)[0] or "application/octet-stream"
            with open(path, "rb") as fh:
                body = fh.read()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        # -- POST ----------------------------------------------------------

        def do_POST(self):
            if self.path == "/v1/model":
                self._post_model()
            elif self.path == "/v1/multiplier":
                self._post_multiplier()
            elif self.path == "/v1/stop":
                server.session.stop()
                self._json(200, {"ok": True, "running": False})
            else:
                self._json(404, {"error": f"unknown path {self.path}"})

        def _post_model(self) -> None:
            text = self._read_body().decode("utf-8", errors="replace")
            try:
                if text.lstrip().startswith("<"):
                    model = io_mod.import_pnml(text)
                else:
                    model = io_mod.import_native(text)
            except (io_mod.NativeFormatError, io_mod.PnmlImportError) as exc:
                self._json(400, {"ok": False, "error": f"parse failure: {exc}"})
                return
            violations = server.session.swap_model(model)
            if violations:
                self._json(400, {
                    "ok": False,
                    "error": "model failed validation",
                    "violations": [
                        {"code": v.code, "message": v.message, "components": list(v.components)}
                        for v in violations
                    ],
                })
                return
            self._json(200, {"ok": True, "model": model.name})

        def _post_multiplier(self) -> None:
            text = self._read_body().decode("utf-8", errors="replace").strip()
            try:
                doc = json.loads(text)
                value = float(doc["value"] if isinstance(doc, dict) else doc)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                self._json(400, {"ok": False, "error": "body must be a number or {\"value\": n}"})
                return
            if not value > 0:
                self._json(400, {"ok": False, "error": "multiplier must be > 0"})
                return
            server.session.set_multiplier(value)
            self._json(200, {"ok": True, "time_multiplier": value})

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

    return Handler
