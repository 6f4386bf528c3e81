"""HTTP/JSON facade over the session orchestrator.

Every response is an envelope ``{"ok": true, "payload": ...}`` or
``{"ok": false, "error": {"code", "message", "details"}}``.  Sessions
persist as one JSON document each under the configured data directory,
written atomically (write to a temp file, then rename), so the service can
be killed and restarted between any two calls without losing state.
Mutating endpoints accept an ``Idempotency-Key`` header; a repeated key
replays the recorded response instead of re-executing.
"""

from __future__ import annotations

import json
import os
import tempfile
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import codegen
from .charts import ChartError
from .concepts import ConceptError, DuplicateName, UnknownConcept
from .evaluate import DerivationError
from .formula import FormulaError
from .session import (
    EncodingRequest,
    ExampleMismatch,
    NeedsExampleRelation,
    PendingFormulate,
    Ready,
    Session,
    SessionError,
    StaleCandidate,
)
from .synthesis import ExampleRelation, NoProgram
from .table import MalformedInput, TableError, parse_table, table_to_records
from .table import _json_to_value, _value_to_json

DEFAULT_UPLOAD_LIMIT = 5 * 1024 * 1024
DEFAULT_PAGE_LIMIT = 100


def envelope_ok(payload) -> dict:
    return {"ok": True, "payload": payload}


def envelope_error(code: str, message: str, details=None) -> dict:
    return {"ok": False,
            "error": {"code": code, "message": message,
                      "details": details or {}}}


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.details = details or {}


class SessionStore:
    """One JSON document per session; atomic replace on write."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.json"

    def save(self, session: Session):
        self._write(self._path(session.id), session.to_dict())

    def load(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not path.exists():
            raise ApiError(404, "SessionNotFound",
                           f"no session {session_id!r}")
        return Session.from_dict(json.loads(path.read_text()))

    def _write(self, path: Path, doc: dict):
        fd, tmp = tempfile.mkstemp(dir=self.data_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w") as fh:
                json.dump(doc, fh)
            os.replace(tmp, path)
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    # -- idempotency --------------------------------------------------------

    def _idem_path(self, session_id: str) -> Path:
        return self.data_dir / f"{session_id}.idem.json"

    def recorded_response(self, session_id: str,
                          key: str) -> Optional[dict]:
        path = self._idem_path(session_id)
        if not path.exists():
            return None
        return json.loads(path.read_text()).get(key)

    def record_response(self, session_id: str, key: str, response: dict):
        path = self._idem_path(session_id)
        doc = json.loads(path.read_text()) if path.exists() else {}
        doc[key] = response
        self._write(path, doc)


def _concept_payload(c) -> dict:
    return {
        "id": c.id,
        "name": c.name,
        "kind": c.kind,
        "semantic_type": c.semantic_type.value,
        "example_values": [_value_to_json(v) for v in c.example_values],
        "known": c.known,
        "resolution": ({"table_id": c.resolution.table_id,
                        "column": c.resolution.column}
                       if c.known else None),
        "sources": list(c.sources),
        "formula_text": c.formula_text,
    }


def _candidate_formula_payload(c: codegen.CandidateFormula) -> dict:
    return {
        "formula_text": c.source_text,
        "origin": c.origin,
        "sample_outputs": [
            {"inputs": [_value_to_json(v) for v in args],
             "output": _value_to_json(out)}
            for args, out in c.sample_outputs],
    }


def _table_payload(t, offset=0, limit=None) -> dict:
    records = table_to_records(t)
    page = records[offset:offset + limit if limit is not None else None]
    return {
        "name": t.name,
        "columns": [{"name": c.name, "semantic_type": c.sem_type.value}
                    for c in t.columns],
        "rows": page,
        "total_rows": len(records),
        "offset": offset,
    }


def _chart_candidate_payload(c) -> dict:
    return {
        "index": c.index,
        "spec": c.spec,
        "table": _table_payload(c.table),
        "provenance": {
            "reshape_program": c.provenance.reshape_program,
            "formulas": [list(p) for p in c.provenance.formulas],
            "column_binding": [list(p) for p in
                               c.provenance.column_binding],
        },
    }


def _encodings_from(payload) -> list[EncodingRequest]:
    return [EncodingRequest(e["channel"], e.get("concept_id"),
                            e.get("aggregate"))
            for e in payload["encodings"]]


def _example_rows_from(payload):
    rows = payload.get("example_rows")
    if rows is None:
        return None
    return [tuple(_json_to_value(v) for v in row) for row in rows]


def create_app(data_dir: str | Path,
               backend_config: codegen.BackendConfig = None,
               upload_limit: int = DEFAULT_UPLOAD_LIMIT,
               cors_origins: tuple = ()) -> FastAPI:
    store = SessionStore(data_dir)
    backend_config = backend_config or codegen.BackendConfig()
    app = FastAPI(title="conceptviz", docs_url="/docs")
    if cors_origins:
        app.add_middleware(
            CORSMiddleware, allow_origins=list(cors_origins),
            allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(ApiError)
    async def _api_error(request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content=envelope_error(exc.code, str(exc), exc.details))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content=envelope_error("ValidationError", "invalid request",
                                   {"errors": exc.errors()}))

    def _load(session_id: str) -> Session:
        return store.load(session_id)

    def _run(session: Session, fn):
        """Execute a mutation, translating domain errors to HTTP codes."""
        try:
            return fn()
        except DuplicateName as exc:
            raise ApiError(409, "DuplicateName", str(exc))
        except StaleCandidate as exc:
            raise ApiError(409, "StaleCandidate", str(exc))
        except UnknownConcept as exc:
            raise ApiError(404, "UnknownConcept", str(exc))
        except codegen.BackendUnavailable as exc:
            raise ApiError(502, "BackendUnavailable", str(exc),
                           {"retryable": exc.retryable})
        except codegen.AllCandidatesRejected as exc:
            raise ApiError(
                422, "AllCandidatesRejected", str(exc),
                {"rejections": [{"formula_text": r.source_text,
                                 "reason": r.reason}
                                for r in exc.rejections]})
        except NoProgram as exc:
            raise ApiError(422, "NoProgram", str(exc),
                           {"diagnostic": exc.diagnostic.describe()})
        except FormulaError as exc:
            raise ApiError(422, type(exc).__name__, str(exc))
        except ExampleMismatch as exc:
            raise ApiError(422, "ExampleMismatch", str(exc))
        except (ValueError, ConceptError, ChartError, DerivationError,
                SessionError, TableError) as exc:
            raise ApiError(422, type(exc).__name__, str(exc))

    async def _idempotent(request: Request, session_id: str, fn):
        key = request.headers.get("Idempotency-Key")
        if key:
            recorded = store.recorded_response(session_id, key)
            if recorded is not None:
                return recorded
        response = fn()
        if key:
            store.record_response(session_id, key, response)
        return response

    @app.post("/sessions")
    async def create_session(request: Request):
        body = await request.body()
        if len(body) > upload_limit:
            raise ApiError(413, "TooLarge",
                           f"upload exceeds {upload_limit} bytes")
        if not body.strip():
            raise ApiError(400, "MalformedInput", "empty upload body")
        content_type = request.headers.get("content-type", "")
        fmt = "json-rows" if "json" in content_type else "csv"
        name = request.query_params.get("name", "table")
        try:
            table = parse_table(body, fmt, name)
        except TableError as exc:
            raise ApiError(400, "MalformedInput", str(exc))
        session = Session(f"s-{uuid.uuid4().hex[:12]}")
        concepts = session.upload_table(table)
        store.save(session)
        return envelope_ok({
            "session_id": session.id,
            "concepts": [_concept_payload(c) for c in concepts],
        })

    @app.post("/sessions/{session_id}/concepts/custom")
    async def custom_concept(session_id: str, request: Request):
        payload = await request.json()
        session = _load(session_id)

        def run():
            c = _run(session, lambda: session.create_custom_concept(
                payload["name"],
                [_json_to_value(v) for v in payload["examples"]]))
            store.save(session)
            return envelope_ok({"concept": _concept_payload(c)})

        return await _idempotent(request, session_id, run)

    @app.post("/sessions/{session_id}/concepts/derive/preview")
    async def derive_preview(session_id: str, request: Request):
        payload = await request.json()
        session = _load(session_id)
        backend = codegen.make_backend(backend_config)
        candidates = _run(session, lambda: session.derive_preview(
            payload["source_ids"], payload["description"], backend))
        store.save(session)  # the preview is audit-logged
        return envelope_ok({
            "candidates": [_candidate_formula_payload(c)
                           for c in candidates]})

    @app.post("/sessions/{session_id}/concepts/derive")
    async def derive_commit(session_id: str, request: Request):
        payload = await request.json()
        session = _load(session_id)

        def run():
            c = _run(session, lambda: session.create_derived_concept(
                payload["name"], payload["source_ids"],
                payload["description"], payload["formula_text"]))
            store.save(session)
            return envelope_ok({
                "concept": _concept_payload(c),
                "table": _table_payload(session.current_table),
            })

        return await _idempotent(request, session_id, run)

    @app.post("/sessions/{session_id}/formulate")
    async def formulate(session_id: str, request: Request):
        payload = await request.json()
        session = _load(session_id)
        outcome = _run(session, lambda: session.formulate(
            payload["template_id"], _encodings_from(payload)))
        if isinstance(outcome, NeedsExampleRelation):
            return envelope_ok({
                "status": "needs_example_relation",
                "columns": list(outcome.columns),
                "prefilled_rows": [[_value_to_json(v) for v in row]
                                   for row in outcome.prefilled_rows],
                "session_version": session.version,
            })
        return envelope_ok({
            "status": "ready",
            "candidates": [_chart_candidate_payload(c)
                           for c in outcome.candidates],
            "session_version": session.version,
        })

    @app.post("/sessions/{session_id}/formulate/complete")
    async def formulate_complete(session_id: str, request: Request):
        payload = await request.json()
        session = _load(session_id)

        def run():
            outcome = session.formulate(payload["template_id"],
                                        _encodings_from(payload))
            if not isinstance(outcome, NeedsExampleRelation):
                return outcome
            rows = _example_rows_from(payload)
            if rows is None:
                raise ExampleMismatch("example_rows is required")
            example = ExampleRelation(outcome.columns, tuple(rows))
            return session.complete_formulate(outcome.pending, example)

        outcome = _run(session, run)
        store.save(session)
        return envelope_ok({
            "status": "ready",
            "candidates": [_chart_candidate_payload(c)
                           for c in outcome.candidates],
            "session_version": session.version,
        })

    @app.post("/sessions/{session_id}/charts/save")
    async def save_chart(session_id: str, request: Request):
        payload = await request.json()
        session = _load(session_id)

        def run():
            expected = payload.get("session_version")
            if expected is not None and expected != session.version:
                raise ApiError(409, "StaleCandidate",
                               f"session is at version {session.version}, "
                               f"candidate was built at {expected}")
            chart_id = _run(session, lambda: session.formulate_and_save(
                payload["template_id"], _encodings_from(payload),
                example_rows=_example_rows_from(payload),
                candidate_index=payload.get("candidate_index", 0)))
            store.save(session)
            return envelope_ok({
                "chart_id": chart_id,
                "session_version": session.version,
                "concepts": [_concept_payload(c) for c in session.shelf],
                "current_table": _table_payload(session.current_table),
            })

        return await _idempotent(request, session_id, run)

    @app.get("/templates")
    async def list_templates():
        from .charts import BUILTIN_TEMPLATES

        return envelope_ok({"templates": [
            {"id": t.id,
             "mark": t.mark,
             "channels": [{"name": c.name, "required": c.required}
                          for c in t.channels]}
            for t in BUILTIN_TEMPLATES]})

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        session = _load(session_id)
        return envelope_ok({
            "session_id": session.id,
            "version": session.version,
            "current_table_id": session.current_table_id,
            "concepts": [_concept_payload(c) for c in session.shelf],
            "saved_charts": session.saved_charts,
        })

    @app.get("/sessions/{session_id}/table")
    async def get_table(session_id: str, offset: int = Query(0, ge=0),
                        limit: int = Query(DEFAULT_PAGE_LIMIT, gt=0)):
        session = _load(session_id)
        return envelope_ok(
            _table_payload(session.current_table, offset, limit))

    return app
