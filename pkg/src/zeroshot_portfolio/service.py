"""Read-only HTTP/JSON recommendation service.

``POST /recommend`` takes the four metafeatures and answers with the same
bytes ``zsp recommend`` prints. ``GET /healthz`` answers ``ok``. The model is
shared across handler threads and is never mutated.
"""

from __future__ import annotations

import json
import logging
import math
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .core import TaskRecord
from .decision import DecisionModel, recommend, recommendation_json
from .errors import RangeViolation

log = logging.getLogger(__name__)

QUERY_FIELDS = ("n_instances", "n_features", "n_classes", "pct_numeric")
QUERY_TASK_ID = "query"


class QueryError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def parse_query(body: bytes) -> TaskRecord:
    """Validate a request body; 400 for schema problems, 422 for out-of-range values."""
    try:
        doc = json.loads(body)
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise QueryError(400, "body is not valid JSON") from None
    if not isinstance(doc, dict):
        raise QueryError(400, "body must be a JSON object")
    missing = [f for f in QUERY_FIELDS if f not in doc]
    unknown = sorted(set(doc) - set(QUERY_FIELDS))
    if missing:
        raise QueryError(400, f"missing field(s): {', '.join(missing)}")
    if unknown:
        raise QueryError(400, f"unknown field(s): {', '.join(unknown)}")
    for f in QUERY_FIELDS[:3]:
        if not _is_int(doc[f]):
            raise QueryError(400, f"{f} must be an integer")
    pct = doc["pct_numeric"]
    if not (_is_int(pct) or isinstance(pct, float)) or not math.isfinite(pct):
        raise QueryError(400, "pct_numeric must be a finite number")
    try:
        return TaskRecord(QUERY_TASK_ID, *(doc[f] for f in QUERY_FIELDS[:3]), float(pct))
    except RangeViolation as exc:
        raise QueryError(422, str(exc)) from None


class RecommendHandler(BaseHTTPRequestHandler):
    model: DecisionModel  # bound by make_server
    protocol_version = "HTTP/1.1"

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, status: int, message: str) -> None:
        body = json.dumps({"error": message}, sort_keys=True).encode() + b"\n"
        self._send(status, body, "application/json")

    def do_GET(self):
        if self.path == "/healthz":
            self._send(200, b"ok", "text/plain; charset=utf-8")
        else:
            self._error(HTTPStatus.NOT_FOUND, f"no route {self.path}")

    def do_POST(self):
        if self.path != "/recommend":
            self._error(HTTPStatus.NOT_FOUND, f"no route {self.path}")
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length)
        try:
            task = parse_query(body)
        except QueryError as exc:
            self._error(exc.status, str(exc))
            return
        rec = recommend(self.model, task)
        self._send(200, (recommendation_json(rec) + "\n").encode(), "application/json")

    def log_message(self, format, *args):
        log.debug("%s - %s", self.address_string(), format % args)


class RecommendServer(ThreadingHTTPServer):
    daemon_threads = True
    # socketserver's default backlog of 5 resets connections under bursts
    request_queue_size = 128


def make_server(model: DecisionModel, host: str = "127.0.0.1", port: int = 0) -> RecommendServer:
    handler = type("BoundRecommendHandler", (RecommendHandler,), {"model": model})
    return RecommendServer((host, port), handler)
