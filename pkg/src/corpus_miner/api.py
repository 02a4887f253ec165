"""HTTP JSON service exposing the engine to the web UI and scripts.

Endpoint catalog: /corpora, /documents, /collections, /search, /jobs,
/results, /annotations, /schemes, /models, /export. Payload schemas are
documented in API.md at the repository root. Long-running analyses go
through /jobs; everything else is synchronous.
"""

from __future__ import annotations

import datetime as dt
import io
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from .errors import MinerError, NotFound, QueryParseError, ValidationError
from .store import MetadataSchema
from .workspace import Workspace


def _doc_json(doc) -> dict:
    metadata = {
        k: (v.isoformat() if isinstance(v, dt.date) else v)
        for k, v in doc.metadata.items()
    }
    return {
        "id": doc.id,
        "corpus_id": doc.corpus_id,
        "title": doc.title,
        "date": doc.date.isoformat() if doc.date else None,
        "body": doc.body,
        "metadata": metadata,
    }


def _collection_json(coll) -> dict:
    return {
        "id": coll.id,
        "corpus_id": coll.corpus_id,
        "name": coll.name,
        "query": coll.query,
        "size": coll.size,
        "doc_ids": list(coll.doc_ids),
        "created_at": coll.created_at,
        "run_id": coll.run_id,
    }


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="corpus-miner", version="0.1.0")
    app.state.workspace = workspace

    @app.exception_handler(MinerError)
    async def miner_error_handler(request: Request, exc: MinerError):
        if isinstance(exc, ValidationError):
            return JSONResponse(
                status_code=422,
                content={"error": str(exc), "fields": exc.field_paths},
            )
        if isinstance(exc, NotFound):
            return JSONResponse(status_code=404, content={"error": str(exc)})
        if isinstance(exc, QueryParseError):
            return JSONResponse(
                status_code=400,
                content={"error": str(exc), "position": exc.position},
            )
        return JSONResponse(status_code=400, content={"error": str(exc)})

    # -- corpora ---------------------------------------------------------------

    @app.get("/corpora")
    def list_corpora():
        return [
            {"id": c.id, "name": c.name, "language": c.language,
             "owner": c.owner, "created_at": c.created_at,
             "documents": workspace.store.document_count(c.id),
             "schema": c.schema.to_dict()}
            for c in workspace.store.list_corpora()
        ]

    @app.post("/corpora", status_code=201)
    def create_corpus(body: dict):
        schema = MetadataSchema.from_dict(body["schema"])
        corpus = workspace.create_corpus(
            body["name"], body.get("language", "en"), schema,
            owner=body.get("owner", "local"),
        )
        return {"id": corpus.id, "warnings": list(corpus.warnings)}

    @app.get("/corpora/{corpus_id}")
    def get_corpus(corpus_id: str):
        c = workspace.store.get_corpus(corpus_id)
        return {"id": c.id, "name": c.name, "language": c.language,
                "owner": c.owner, "created_at": c.created_at,
                "documents": workspace.store.document_count(c.id),
                "schema": c.schema.to_dict()}

    @app.post("/corpora/{corpus_id}/import")
    def import_documents(corpus_id: str, body: dict):
        report = workspace.import_documents(
            corpus_id,
            source=body["source"],
            format=body["format"],
            mapping=body.get("mapping"),
            dedupe_key=body.get("dedupe_key"),
            record_path=body.get("record_path"),
        )
        return report.to_dict()

    @app.post("/corpora/{corpus_id}/index")
    def rebuild_index(corpus_id: str):
        snapshot = workspace.ensure_index(corpus_id, rebuild=True)
        return {"corpus_id": corpus_id, "generation": snapshot.generation,
                "documents": snapshot.doc_count}

    # -- documents ---------------------------------------------------------------

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str):
        return _doc_json(workspace.store.get_document(doc_id))

    @app.get("/documents/{doc_id}/highlight")
    def highlight_document(doc_id: str, query: str):
        spans = workspace.highlight_document(doc_id, query)
        return [
            {"start": s.start, "end": s.end, "leaf": s.leaf} for s in spans
        ]

    # -- search -------------------------------------------------------------------

    @app.get("/search")
    def search(corpus: str, q: str, offset: int = 0, limit: int = 10,
               facets: str = ""):
        facet_fields = [f for f in facets.split(",") if f] or None
        page = workspace.search(corpus, q, offset, limit, facet_fields)
        return {
            "total_hits": page.total_hits,
            "hits": [
                {"doc_id": h.doc_id, "score": h.score, "snippet": h.snippet}
                for h in page.hits
            ],
            "facets": {
                f: [{"value": v, "count": c} for v, c in values]
                for f, values in page.facets.items()
            },
            "query_echo": page.query_echo,
        }

    @app.get("/search/timeseries")
    def search_timeseries(corpus: str, q: str, granularity: str = "month"):
        series = workspace.search_time_series(corpus, q, granularity)
        return {"granularity": granularity, "points": series.to_rows()}

    # -- collections -----------------------------------------------------------------

    @app.get("/collections")
    def list_collections(corpus: str):
        return [_collection_json(c) for c in workspace.store.list_collections(corpus)]

    @app.post("/collections", status_code=201)
    def create_collection(body: dict):
        coll = workspace.create_collection(
            body["corpus_id"], body["name"],
            query=body.get("query"), doc_ids=body.get("doc_ids"),
            user=body.get("user", "local"),
        )
        return _collection_json(coll)

    @app.get("/collections/{collection_id}")
    def get_collection(collection_id: str):
        return _collection_json(workspace.store.get_collection(collection_id))

    # -- jobs ---------------------------------------------------------------------

    @app.post("/jobs", status_code=202)
    def submit_job(body: dict):
        job = workspace.submit(body["operation"], body.get("parameters") or {})
        return job.to_dict()

    @app.get("/jobs/{job_id}")
    def poll_job(job_id: str):
        return workspace.jobs.poll(job_id).to_dict()

    @app.get("/jobs/{job_id}/result")
    def job_result(job_id: str):
        return workspace.jobs.result(job_id)

    # -- results and provenance ------------------------------------------------------

    @app.get("/results/{result_hash}")
    def get_result(result_hash: str):
        return workspace.results.read(result_hash)

    @app.get("/results/{result_hash}/provenance")
    def get_provenance(result_hash: str):
        return [r.to_dict() for r in workspace.provenance(result_hash)]

    @app.post("/results/{result_hash}/replay")
    def replay_result(result_hash: str):
        record = workspace.ledger.by_result(result_hash)
        if record is None:
            raise NotFound(f"no run record for result {result_hash!r}")
        return workspace.replay(record.id)

    # -- schemes and annotations -------------------------------------------------------

    @app.get("/schemes")
    def list_schemes():
        return [s.to_dict() for s in workspace.annotations.list_schemes()]

    @app.post("/schemes", status_code=201)
    def define_scheme(body: dict):
        scheme = workspace.annotations.define_scheme(
            body["name"], body["categories"], scheme_id=body.get("id"),
        )
        return scheme.to_dict()

    @app.get("/schemes/{scheme_id}")
    def get_scheme(scheme_id: str, version: int | None = None):
        return workspace.annotations.get_scheme(scheme_id, version).to_dict()

    @app.post("/annotations", status_code=201)
    def annotate(body: dict):
        span = None
        if body.get("start") is not None and body.get("end") is not None:
            span = (body["start"], body["end"])
        ann = workspace.annotations.annotate(
            doc_id=body["doc_id"],
            category_id=body["category_id"],
            annotator=body["annotator"],
            scheme_id=body["scheme_id"],
            span=span,
            note=body.get("note"),
        )
        scheme = workspace.annotations.get_scheme(ann.scheme_id, ann.scheme_version)
        return ann.to_dict(scheme)

    @app.get("/annotations")
    def list_annotations(docs: str = "", annotator: str = "", scheme: str = ""):
        doc_ids = [d for d in docs.split(",") if d] or None
        anns = workspace.annotations.annotations_for(
            doc_ids=doc_ids, annotator=annotator or None, scheme_id=scheme or None,
        )
        out = []
        schemes: dict[tuple[str, int], Any] = {}
        for a in anns:
            key = (a.scheme_id, a.scheme_version)
            if key not in schemes:
                schemes[key] = workspace.annotations.get_scheme(*key)
            out.append(a.to_dict(schemes[key]))
        return out

    # -- models -----------------------------------------------------------------------

    @app.get("/models")
    def list_models():
        out = []
        for record in workspace.ledger.all_records():
            if record.operation in ("topics.fit", "classify.train") and record.result_hash:
                out.append({
                    "result_hash": record.result_hash,
                    "operation": record.operation,
                    "parameters": record.parameters,
                    "created_at": record.created_at,
                })
        return out

    @app.get("/models/{result_hash}")
    def get_model(result_hash: str):
        return workspace.results.read(result_hash)

    # -- export -------------------------------------------------------------------------

    @app.get("/export/{result_hash}")
    def export(result_hash: str):
        buffer = io.BytesIO()
        import tempfile
        with tempfile.NamedTemporaryFile(suffix=".zip") as tmp:
            workspace.export_bundle(result_hash, tmp.name)
            tmp.seek(0)
            buffer.write(tmp.read())
        return Response(
            content=buffer.getvalue(),
            media_type="application/zip",
            headers={"Content-Disposition":
                     f'attachment; filename="bundle-{result_hash[:12]}.zip"'},
        )

    return app


def serve(workspace: Workspace, host: str = "127.0.0.1", port: int = 8765) -> None:
    import uvicorn

    uvicorn.run(create_app(workspace), host=host, port=port, log_level="info")
