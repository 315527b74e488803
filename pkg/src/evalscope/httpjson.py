"""Minimal JSON-over-HTTP plumbing shared by registry, orchestrator, agents.

Stdlib only: a threading HTTP server with regex routes, and urllib-based
client helpers. Bodies are canonical JSON in both directions.
"""

from __future__ import annotations

import json
import re
import threading
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable

from . import canonjson


class HttpError(Exception):
    """Maps to an HTTP error response with a JSON body."""

    def __init__(self, status: int, message: str) -> None:
        super().__init__(message)
        self.status = status
        self.message = message


@dataclass
class Request:
    method: str
    path: str
    params: dict[str, str]  # named groups from the route pattern
    query: dict[str, str]
    body: Any


Handler = Callable[[Request], tuple[int, Any]]


@dataclass
class Route:
    method: str
    pattern: re.Pattern
    handler: Handler


def route(method: str, pattern: str, handler: Handler) -> Route:
    return Route(method, re.compile(f"^{pattern}$"), handler)


class JsonHttpServer:
    """Threaded HTTP server dispatching to regex routes."""

    def __init__(self, host: str, port: int, routes: list[Route]) -> None:
        self.routes = routes
        server = self

        class _Handler(BaseHTTPRequestHandler):
            protocol_version = "HTTP/1.1"

            def log_message(self, format: str, *args: Any) -> None:  # noqa: A002
                pass

            def _dispatch(self, method: str) -> None:
                parsed = urllib.parse.urlparse(self.path)
                query = {k: v[-1] for k, v in urllib.parse.parse_qs(parsed.query).items()}
                body: Any = None
                length = int(self.headers.get("Content-Length") or 0)
                if length:
                    raw = self.rfile.read(length)
                    try:
                        body = json.loads(raw)
                    except json.JSONDecodeError:
                        self._send(400, {"error": "request body is not valid JSON"})
                        return
                for rt in server.routes:
                    if rt.method != method:
                        continue
                    match = rt.pattern.match(parsed.path)
                    if match is None:
                        continue
                    request = Request(method, parsed.path, match.groupdict(), query, body)
                    try:
                        status, payload = rt.handler(request)
                    except HttpError as exc:
                        self._send(exc.status, {"error": exc.message})
                    except Exception as exc:  # pragma: no cover - defensive
                        self._send(500, {"error": f"{type(exc).__name__}: {exc}"})
                    else:
                        self._send(status, payload)
                    return
                self._send(404, {"error": f"no route for {method} {parsed.path}"})

            def do_GET(self) -> None:
                self._dispatch("GET")

            def do_POST(self) -> None:
                self._dispatch("POST")

            def do_DELETE(self) -> None:
                self._dispatch("DELETE")

            def do_OPTIONS(self) -> None:
                # CORS preflight for the browser console.
                self.send_response(204)
                self._cors_headers()
                self.send_header("Content-Length", "0")
                self.end_headers()

            def _cors_headers(self) -> None:
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")

            def _send(self, status: int, payload: Any) -> None:
                data = canonjson.dump_bytes(payload if payload is not None else {})
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self._cors_headers()
                self.end_headers()
                self.wfile.write(data)

        self._httpd = ThreadingHTTPServer((host, port), _Handler)
        self._httpd.daemon_threads = True
        self._thread: threading.Thread | None = None

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def address(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> None:
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self._httpd.serve_forever()

    def shutdown(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


# ---------------------------------------------------------------------------
# Client helpers


def request_json(
    method: str,
    url: str,
    body: Any = None,
    timeout: float = 30.0,
) -> tuple[int, Any]:
    """Issue a request with an optional JSON body; returns (status, parsed body)."""
    data = canonjson.dump_bytes(body) if body is not None else None
    req = urllib.request.Request(url, data=data, method=method)
    if data is not None:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, timeout=timeout) as response:
            payload = response.read()
            return response.status, (json.loads(payload) if payload else None)
    except urllib.error.HTTPError as exc:
        payload = exc.read()
        try:
            parsed = json.loads(payload) if payload else None
        except json.JSONDecodeError:
            parsed = {"error": payload.decode("utf-8", "replace")}
        return exc.code, parsed


def get_json(url: str, params: dict[str, str] | None = None, timeout: float = 30.0) -> tuple[int, Any]:
    if params:
        url = f"{url}?{urllib.parse.urlencode(params)}"
    return request_json("GET", url, timeout=timeout)


def post_json(url: str, body: Any, timeout: float = 30.0) -> tuple[int, Any]:
    return request_json("POST", url, body, timeout=timeout)


def delete_json(url: str, timeout: float = 30.0) -> tuple[int, Any]:
    return request_json("DELETE", url, timeout=timeout)
