"""HTTP service over one corpus: upload, query, paragraph lookup, usage.

Document ingestion is serialized behind a writer lock; queries read a
corpus snapshot and never mutate it. Queries that outlive the configured
threshold return a job id for polling.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor, TimeoutError as FutureTimeout
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import Config
from .corpus import Corpus, get_paragraph, key_to_json, load_corpus
from .errors import (
    AlignmentParseError,
    BudgetExceededError,
    CiteweaveError,
    CorpusFormatError,
    EmptyCorpusError,
    ParagraphNotFoundError,
    UnsupportedDocumentError,
    ValidationError,
)
from .ingest import ingest_document
from .pipeline import build_gateway, params_from_config, run_query, usage_summary

_ERROR_MAP = [
    (EmptyCorpusError, 409, "empty_corpus"),
    (ParagraphNotFoundError, 404, "not_found"),
    (UnsupportedDocumentError, 422, "unsupported_document"),
    (AlignmentParseError, 502, "alignment_parse_error"),
    (BudgetExceededError, 400, "budget_exceeded"),
    (ValidationError, 400, "validation_error"),
    (CorpusFormatError, 400, "corpus_format"),
]


def _error_response(exc: Exception) -> JSONResponse:
    for exc_type, status, code in _ERROR_MAP:
        if isinstance(exc, exc_type):
            return JSONResponse(
                status_code=status, content={"error": {"code": code, "message": str(exc)}}
            )
    return JSONResponse(
        status_code=400, content={"error": {"code": "domain_error", "message": str(exc)}}
    )


class QueryRequest(BaseModel):
    query: str
    grain: str = "fine"


class ServiceState:
    def __init__(self, corpus_path: str, config: Config):
        self.corpus_path = corpus_path
        self.config = config
        self.gateway = build_gateway(config)
        if Path(corpus_path).exists():
            self.corpus = load_corpus(corpus_path)
        else:
            self.corpus = Corpus(corpus_id=Path(corpus_path).stem or "corpus")
        self.write_lock = threading.Lock()
        self.jobs: dict[str, dict] = {}
        self.executor = ThreadPoolExecutor(max_workers=4)


def make_app(corpus_path: str, config: Config | None = None, frontend_dir: str | None = None) -> FastAPI:
    config = config or Config()
    state = ServiceState(corpus_path, config)
    app = FastAPI(title="citeweave", version="0.1.0")
    app.state.service = state

    @app.exception_handler(CiteweaveError)
    async def _domain_error_handler(request: Request, exc: CiteweaveError):
        return _error_response(exc)

    def _check_corpus_id(corpus_id: str) -> None:
        if corpus_id != state.corpus.corpus_id:
            raise ParagraphNotFoundError(f"corpus {corpus_id}")

    @app.get("/api/corpora")
    def list_corpora():
        return {
            "corpora": [
                {
                    "corpus_id": state.corpus.corpus_id,
                    "documents": len(state.corpus.documents),
                }
            ]
        }

    @app.post("/api/corpora/{corpus_id}/documents")
    async def upload_document(corpus_id: str, file: UploadFile):
        _check_corpus_id(corpus_id)
        pdf_bytes = await file.read()
        with state.write_lock:
            corpus, doc_id = ingest_document(
                pdf_bytes,
                state.corpus,
                state.corpus_path,
                state.gateway,
                params_from_config(state.config),
                state.config,
                origin=file.filename or "upload.pdf",
            )
            state.corpus = corpus
        return {"doc_id": doc_id}

    @app.get("/api/corpora/{corpus_id}/documents")
    def list_documents(corpus_id: str):
        _check_corpus_id(corpus_id)
        return {
            "documents": [
                {
                    "doc_id": doc.doc_id,
                    "title": doc.title,
                    "origin": doc.origin,
                    "page_count": doc.page_count,
                    "paragraph_count": sum(1 for _ in doc.iter_paragraphs()),
                    "notation_style": doc.notation_style,
                }
                for doc in state.corpus.documents.values()
            ]
        }

    @app.post("/api/corpora/{corpus_id}/query")
    def query(corpus_id: str, request: QueryRequest):
        _check_corpus_id(corpus_id)
        if not state.corpus.documents:
            raise EmptyCorpusError("corpus has no documents")
        if request.grain not in ("coarse", "fine"):
            return JSONResponse(
                status_code=422,
                content={"error": {"code": "bad_grain", "message": request.grain}},
            )
        job_id = uuid.uuid4().hex[:12]
        job = {"status": "running", "progress": {"completed": 0, "total": 0}}
        state.jobs[job_id] = job
        corpus_snapshot = state.corpus

        def on_progress(done: int, total: int) -> None:
            job["progress"] = {"completed": done, "total": total}

        def work() -> dict:
            try:
                payload = run_query(
                    request.query,
                    request.grain,
                    corpus_snapshot,
                    state.gateway,
                    state.config,
                    on_progress=on_progress,
                )
                job["status"] = "done"
                job["result"] = payload
                return payload
            except Exception as exc:  # recorded on the job for polled clients
                job["status"] = "failed"
                job["error"] = {"code": "query_failed", "message": str(exc)}
                raise

        future = state.executor.submit(work)
        if state.config.job_threshold_seconds <= 0:
            return JSONResponse(status_code=202, content={"job_id": job_id})
        try:
            return future.result(timeout=state.config.job_threshold_seconds)
        except FutureTimeout:
            return JSONResponse(status_code=202, content={"job_id": job_id})
        except CiteweaveError as exc:
            return _error_response(exc)

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        job = state.jobs.get(job_id)
        if job is None:
            raise ParagraphNotFoundError(f"job {job_id}")
        body = {"status": job["status"], "progress": job["progress"]}
        if job["status"] == "done":
            body["result"] = job["result"]
        if job["status"] == "failed":
            body["error"] = job["error"]
        return body

    @app.get("/api/corpora/{corpus_id}/paragraphs/{para_id:path}")
    def paragraph(corpus_id: str, para_id: str):
        _check_corpus_id(corpus_id)
        para = get_paragraph(state.corpus, para_id)
        doc_id = para_id.split("/", 1)[0]
        return {
            "para_id": para.para_id,
            "doc_id": doc_id,
            "text": para.text,
            "page_span": list(para.page_span),
            "markers": [
                {
                    "span": list(m.span),
                    "raw": m.raw,
                    "style": m.style,
                    "resolved_keys": [key_to_json(k) for k in m.resolved_keys],
                    "unresolved": m.unresolved,
                }
                for m in para.markers
            ],
        }

    @app.get("/api/usage")
    def usage():
        return usage_summary(state.gateway, state.config)

    if frontend_dir and Path(frontend_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")
    else:

        @app.get("/")
        def root():
            return {"service": "citeweave", "corpus_id": state.corpus.corpus_id}

    return app
