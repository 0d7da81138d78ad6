"""HTTP ingestion and query service.

Desk-scale tool: stdlib threaded HTTP server, no authentication, binds to
localhost by default. The record store serialises writes internally; what-if
evaluations are pure functions of the request and the loaded models.

Routes (JSON bodies unless noted):
  POST /v1/records            one record object or a JSON Lines batch -> ids
  GET  /v1/records?...        filtered records as JSON Lines
  GET  /v1/aggregate?group=table|speed   table cells / per-speed series
  POST /v1/whatif             {workload, policy_a, policy_b, seed} -> comparison
Errors are {"code", "message"} with a matching HTTP status.
"""
from __future__ import annotations

import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .errors import (
    ConfigInvalid,
    NoFeasibleTechnology,
    ParseError,
    RatbenchError,
    ValidationError,
)
from .models import ModelSet, builtin_model
from .policy import policy_from_json
from .records import (
    Technology,
    cell_to_json,
    record_to_line,
)
from .simulate import compare_policies, workload_from_json
from .store import (
    DEFAULT_MIN_SAMPLES,
    FilterExpr,
    RecordStore,
    aggregate_table,
    speed_series,
)


class ApiError(RatbenchError):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def _filter_from_query(params: dict[str, list[str]]) -> FilterExpr:
    def one(name: str) -> str | None:
        values = params.get(name)
        return values[-1] if values else None

    try:
        tech = one("tech")
        delivered = one("delivered")
        return FilterExpr(
            technology=Technology(tech) if tech else None,
            min_payload=int(one("min_payload")) if one("min_payload") else None,
            max_payload=int(one("max_payload")) if one("max_payload") else None,
            min_speed=float(one("min_speed")) if one("min_speed") else None,
            max_speed=float(one("max_speed")) if one("max_speed") else None,
            from_ms=int(one("from")) if one("from") else None,
            to_ms=int(one("to")) if one("to") else None,
            delivered=None if delivered is None else delivered.lower() in ("1", "true"),
        )
    except (ValueError, ValidationError) as exc:
        raise ApiError(400, "bad_filter", str(exc)) from exc


class _Handler(BaseHTTPRequestHandler):
    server_version = "ratbench"
    store: RecordStore
    models: ModelSet

    # -- plumbing ---------------------------------------------------------
    def log_message(self, fmt, *args):  # quiet by default
        if os.environ.get("RATBENCH_HTTP_LOG"):
            super().log_message(fmt, *args)

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, obj) -> None:
        self._send(status, json.dumps(obj).encode(), "application/json")

    def _send_error_obj(self, exc: ApiError) -> None:
        self._send_json(exc.status, {"code": exc.code, "message": exc.message})

    def _read_body(self) -> str:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length).decode("utf-8") if length else ""

    def do_OPTIONS(self):  # CORS preflight for the browser dashboard
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    # -- routes -----------------------------------------------------------
    def do_POST(self):
        try:
            path = urlparse(self.path).path
            if path == "/v1/records":
                self._post_records()
            elif path == "/v1/whatif":
                self._post_whatif()
            else:
                raise ApiError(404, "not_found", f"no route {path}")
        except ApiError as exc:
            self._send_error_obj(exc)
        except Exception as exc:  # pragma: no cover - defensive
            self._send_error_obj(ApiError(500, "internal", str(exc)))

    def do_GET(self):
        try:
            url = urlparse(self.path)
            params = parse_qs(url.query)
            if url.path == "/v1/records":
                self._get_records(params)
            elif url.path == "/v1/aggregate":
                self._get_aggregate(params)
            else:
                raise ApiError(404, "not_found", f"no route {url.path}")
        except ApiError as exc:
            self._send_error_obj(exc)
        except Exception as exc:  # pragma: no cover - defensive
            self._send_error_obj(ApiError(500, "internal", str(exc)))

    def _post_records(self) -> None:
        body = self._read_body().strip()
        if not body:
            raise ApiError(400, "parse_error", "empty body")
        try:
            lines = [line for line in body.splitlines() if line.strip()]
            ids = []
            created = 0
            for line in lines:
                from .records import record_from_line

                record = record_from_line(line)
                record_id, was_new = self.store.ingest_record(record)
                ids.append(record_id)
                created += int(was_new)
        except ParseError as exc:
            raise ApiError(400, "parse_error", str(exc)) from exc
        except ValidationError as exc:
            raise ApiError(400, "validation_error", str(exc)) from exc
        self._send_json(200, {"ids": ids, "created": created})

    def _get_records(self, params) -> None:
        flt = _filter_from_query(params)
        body = "".join(record_to_line(r) + "\n" for r in self.store.records(flt))
        self._send(200, body.encode(), "application/jsonl")

    def _get_aggregate(self, params) -> None:
        group = (params.get("group") or ["table"])[-1]
        flt = _filter_from_query(params)
        min_samples = int((params.get("min_samples") or [str(DEFAULT_MIN_SAMPLES)])[-1])
        if group == "table":
            delivered_only = (params.get("delivered_only") or ["false"])[-1].lower() in (
                "1",
                "true",
            )
            cells = aggregate_table(
                self.store, flt, min_samples=min_samples, delivered_only=delivered_only
            )
            self._send_json(200, {"cells": [cell_to_json(c) for c in cells]})
        elif group == "speed":
            try:
                techs = (
                    [Technology((params.get("tech") or [""])[-1])]
                    if params.get("tech")
                    else list(Technology)
                )
            except ValueError as exc:
                raise ApiError(400, "bad_filter", str(exc)) from exc
            series = {
                tech.value: [
                    {"speed_bucket": bucket.value, "pdr_pct": pdr, "n_sent": n}
                    for bucket, pdr, n in speed_series(store=self.store, tech=tech)
                ]
                for tech in techs
            }
            self._send_json(200, {"series": series})
        else:
            raise ApiError(400, "bad_group", "group must be 'table' or 'speed'")

    def _post_whatif(self) -> None:
        try:
            obj = json.loads(self._read_body() or "{}")
            workload = workload_from_json(obj["workload"])
            policy_a = policy_from_json(obj["policy_a"])
            policy_b = policy_from_json(obj["policy_b"])
            seed = int(obj.get("seed", 0))
        except (KeyError, json.JSONDecodeError) as exc:
            raise ApiError(400, "parse_error", f"bad what-if request: {exc}") from exc
        except ConfigInvalid as exc:
            raise ApiError(400, "config_invalid", str(exc)) from exc
        try:
            comparison = compare_policies(workload, policy_a, policy_b, self.models, seed)
        except NoFeasibleTechnology as exc:
            raise ApiError(422, "no_feasible_technology", str(exc)) from exc
        except (ConfigInvalid, ValidationError) as exc:
            raise ApiError(400, "config_invalid", str(exc)) from exc
        self._send_json(200, comparison.as_json())


class IngestService:
    """Owns the server thread, store, and models for one data directory."""

    def __init__(
        self,
        data_dir: str | os.PathLike,
        addr: str = "127.0.0.1",
        port: int = 8080,
        models: ModelSet | None = None,
    ):
        os.makedirs(data_dir, exist_ok=True)
        self.store = RecordStore(os.path.join(os.fspath(data_dir), "records.jsonl"))
        self.models = models or builtin_model()
        handler = type("BoundHandler", (_Handler,), {"store": self.store, "models": self.models})
        self.httpd = ThreadingHTTPServer((addr, port), handler)
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        host, port = self.httpd.server_address[:2]
        return str(host), int(port)

    def start_background(self) -> None:
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()

    def serve_forever(self) -> None:
        self.httpd.serve_forever()

    def shutdown(self) -> None:
        self.httpd.shutdown()
        if self._thread is not None:
            self._thread.join(timeout=5)
        self.httpd.server_close()
