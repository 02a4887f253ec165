"""Workspace facade: one data directory, one engine.

The CLI and the HTTP API both drive this class, so identical parameters
take the same code path and produce identical result hashes. Analysis
operations are registered as jobs here; document management and search
are synchronous methods.

Configuration: a TOML file with the keys

    [storage]
    data_dir = "./corpus-data"
    [server]
    port = 8765
    workers = 2

overridden by the environment variables ILCM_DATA_DIR, ILCM_PORT and
ILCM_WORKERS.
"""

from __future__ import annotations

import os
import tempfile
import threading
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import classify as clf
from . import lexicostats as lx
from . import topics as tp
from .annotation import AnnotationStore
from .errors import NotFound, ProvenanceError, ValidationError
from .hashing import content_hash
from .jobs import JobManager, Operation
from .nlp.pipeline import DocumentTermMatrix, PipelineConfig, build_dtm, process_collection
from .nlp.resources import Resources
from .provenance import ResultStore, RunLedger, export_bundle, import_bundle
from .query.index import IndexSnapshot, build_index
from .query.parser import parse_query
from .query.search import facet_time_series, highlight, search
from .store import Collection, CorpusStore, Database, MetadataSchema

DEFAULT_PORT = 8765
DEFAULT_WORKERS = 2


def load_config(path: str | Path | None = None) -> dict:
    cfg = {"data_dir": "./corpus-data", "port": DEFAULT_PORT, "workers": DEFAULT_WORKERS}
    candidate = Path(path) if path else Path("config.toml")
    if candidate.is_file():
        with open(candidate, "rb") as fh:
            data = tomllib.load(fh)
        storage = data.get("storage", {})
        server = data.get("server", {})
        cfg["data_dir"] = storage.get("data_dir", cfg["data_dir"])
        cfg["port"] = int(server.get("port", cfg["port"]))
        cfg["workers"] = int(server.get("workers", cfg["workers"]))
    if os.environ.get("ILCM_DATA_DIR"):
        cfg["data_dir"] = os.environ["ILCM_DATA_DIR"]
    if os.environ.get("ILCM_PORT"):
        cfg["port"] = int(os.environ["ILCM_PORT"])
    if os.environ.get("ILCM_WORKERS"):
        cfg["workers"] = int(os.environ["ILCM_WORKERS"])
    return cfg


class Workspace:
    def __init__(self, data_dir: str | Path | None = None, workers: int = DEFAULT_WORKERS):
        if data_dir is None:
            # ephemeral workspace (tests, throwaway sessions)
            self._tmp = tempfile.TemporaryDirectory(prefix="corpus-miner-")
            data_dir = self._tmp.name
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.db = Database(self.data_dir / "miner.db")
        self.store = CorpusStore(self.db)
        self.annotations = AnnotationStore(self.db, self.store)
        self.ledger = RunLedger(self.db)
        self.results = ResultStore(self.data_dir / "results")
        user_resources = self.data_dir / "resources"
        self.resources = Resources([user_resources] if user_resources.is_dir() else [])
        self.jobs = JobManager(self, workers=workers)
        self._snapshots: dict[str, IndexSnapshot] = {}
        self._index_lock = threading.Lock()
        register_operations(self.jobs)

    def close(self) -> None:
        self.jobs.shutdown()
        self.db.close()

    # -- corpora and documents -------------------------------------------------

    def create_corpus(self, name: str, language: str, schema: MetadataSchema | dict,
                      owner: str = "local"):
        corpus = self.store.create_corpus(name, language, schema, owner)
        self.ledger.record(
            "corpus.create",
            {"name": name, "language": language,
             "schema": corpus.schema.to_dict(), "owner": owner},
            result_hash=self.results.write({"kind": "corpus", "corpus_id": corpus.id}),
        )
        return corpus

    def import_documents(self, corpus_id: str, source: str, format: str,
                         mapping: dict | None = None, dedupe_key: str | None = None,
                         record_path: str | None = None, user: str = "local"):
        report = self.store.import_documents(
            corpus_id, source, format, mapping, dedupe_key, record_path
        )
        payload = {
            "kind": "import_report",
            "corpus_id": corpus_id,
            **report.to_dict(),
            "document_count": self.store.document_count(corpus_id),
        }
        result_hash = self.results.write(payload)
        self.ledger.record(
            "corpus.import",
            {"corpus_id": corpus_id, "source": str(source), "format": format,
             "mapping": mapping or {}, "dedupe_key": dedupe_key,
             "record_path": record_path},
            result_hash=result_hash,
            user=user,
        )
        self._snapshots.pop(corpus_id, None)  # stale; readers keep their copy
        return report

    def import_result_hashes(self, corpus_id: str) -> list[str]:
        return [
            r.result_hash
            for r in self.ledger.all_records()
            if r.operation == "corpus.import"
            and r.parameters.get("corpus_id") == corpus_id
            and r.result_hash
        ]

    # -- index and search --------------------------------------------------------

    def ensure_index(self, corpus_id: str, rebuild: bool = False) -> IndexSnapshot:
        with self._index_lock:
            snapshot = self._snapshots.get(corpus_id)
            if snapshot is None or rebuild:
                snapshot = build_index(self.store, corpus_id)
                self._snapshots[corpus_id] = snapshot  # atomic publish
            return snapshot

    def search(self, corpus_id: str, query: str, offset: int = 0, limit: int = 10,
               facet_fields: list[str] | None = None):
        snapshot = self.ensure_index(corpus_id)
        ast = parse_query(query)
        return search(snapshot, ast, page=(offset, limit), facet_fields=facet_fields)

    def search_time_series(self, corpus_id: str, query: str, granularity: str = "month"):
        snapshot = self.ensure_index(corpus_id)
        return facet_time_series(snapshot, parse_query(query), granularity)

    def highlight_document(self, doc_id: str, query: str):
        doc = self.store.get_document(doc_id)
        corpus = self.store.get_corpus(doc.corpus_id)
        kinds = {f.name: f.kind for f in corpus.schema.fields}
        return highlight(doc.body, doc.id, parse_query(query), doc.metadata, kinds)

    def query_doc_ids(self, corpus_id: str, query: str) -> list[str]:
        snapshot = self.ensure_index(corpus_id)
        from .query.search import evaluate_membership
        members = evaluate_membership(snapshot, parse_query(query))
        return [d for d in snapshot.doc_ids if d in members]

    # -- collections ---------------------------------------------------------------

    def create_collection(self, corpus_id: str, name: str, query: str | None = None,
                          doc_ids: list[str] | None = None, user: str = "local") -> Collection:
        collection = self.store.create_collection(
            corpus_id, name, doc_ids=doc_ids, query=query,
            resolver=self.query_doc_ids if query is not None else None,
        )
        payload = {
            "kind": "collection",
            "collection_id": collection.id,
            "corpus_id": corpus_id,
            "name": name,
            "query": query,
            "doc_ids": list(collection.doc_ids),
        }
        result_hash = self.results.write(payload)
        run = self.ledger.record(
            "collection.create",
            {"corpus_id": corpus_id, "name": name, "query": query,
             "explicit": doc_ids is not None},
            input_hashes=self.import_result_hashes(corpus_id),
            result_hash=result_hash,
            collection_id=collection.id,
            user=user,
        )
        with self.db.transaction() as db:
            db.execute("UPDATE collections SET run_id=? WHERE id=?", (run.id, collection.id))
        return self.store.get_collection(collection.id)

    def collection_result_hash(self, collection_id: str) -> str | None:
        collection = self.store.get_collection(collection_id)
        if collection.run_id is None:
            return None
        return self.ledger.get(collection.run_id).result_hash

    # -- analysis building blocks ---------------------------------------------------

    def processed_collection(self, collection_id: str, config: PipelineConfig):
        docs = self.store.collection_documents(collection_id)
        layers = {}
        return process_collection(docs, config, self.resources, layers)

    def build_collection_dtm(self, collection_id: str, config: PipelineConfig) -> DocumentTermMatrix:
        docs = self.store.collection_documents(collection_id)
        return build_dtm(docs, config, self.resources, collection_id=collection_id)

    def get_dtm(self, result_hash: str) -> DocumentTermMatrix:
        payload = self.results.read(result_hash)
        if payload.get("kind") != "dtm":
            raise ProvenanceError(f"result {result_hash} is not a term matrix")
        return DocumentTermMatrix.from_payload(payload)

    def get_model(self, result_hash: str) -> tp.TopicModel:
        payload = self.results.read(result_hash)
        if payload.get("kind") != "topic_model":
            raise ProvenanceError(f"result {result_hash} is not a topic model")
        return tp.TopicModel.from_payload(payload)

    def get_classifier(self, result_hash: str) -> clf.Classifier:
        payload = self.results.read(result_hash)
        if payload.get("kind") != "classifier":
            raise ProvenanceError(f"result {result_hash} is not a classifier")
        return clf.Classifier.from_payload(payload["classifier"])

    # -- jobs, provenance, bundles -----------------------------------------------

    def submit(self, operation: str, parameters: dict):
        return self.jobs.submit(operation, parameters)

    def run_sync(self, operation: str, parameters: dict):
        """Submit and wait; returns the finished job (CLI path)."""
        job = self.jobs.submit(operation, parameters)
        return self.jobs.wait(job.id)

    def provenance(self, result_hash: str):
        return self.ledger.provenance_chain(result_hash)

    def export_bundle(self, result_hash: str, out_path):
        return export_bundle(self.ledger, self.results, result_hash, out_path)

    def import_bundle(self, bundle_path) -> str:
        return import_bundle(self.ledger, self.results, bundle_path)

    def replay(self, run_id: str) -> dict:
        """Re-execute a pure operation with its recorded parameters.

        Returns {"match": bool, "original": hash, "replayed": hash}.
        """
        record = self.ledger.get(run_id)
        op = self.jobs.operations.get(record.operation)
        if op is None or not op.pure:
            raise ValidationError(f"operation {record.operation!r} is not replayable")
        payload = op.handler(self, record.parameters)
        replayed = content_hash(payload)
        return {
            "match": replayed == record.result_hash,
            "original": record.result_hash,
            "replayed": replayed,
        }


# ---------------------------------------------------------------------------
# Operation registry
# ---------------------------------------------------------------------------

def _need(params: dict, key: str, kind=None, path: str | None = None):
    if key not in params or params[key] is None:
        raise ValidationError(f"missing parameter {path or key}", [path or key])
    if kind is not None and not isinstance(params[key], kind):
        raise ValidationError(f"parameter {path or key} has the wrong type", [path or key])
    return params[key]


def _pipeline_config(params: dict) -> PipelineConfig:
    return PipelineConfig.from_dict(params.get("config") or {})


def _validate_lda_config(params: dict) -> None:
    config = _need(params, "config", dict)
    k = config.get("k", config.get("K"))
    if not isinstance(k, int) or k < 1:
        raise ValidationError("config.k must be an integer >= 1", ["config.k"])
    if "K" in config and "k" not in config:
        config["k"] = config.pop("K")
    for field_name in ("alpha", "beta"):
        if config.get(field_name) is not None and float(config[field_name]) <= 0:
            raise ValidationError(
                f"config.{field_name} must be > 0", [f"config.{field_name}"]
            )


def _lda_config(params: dict) -> tp.LdaConfig:
    return tp.LdaConfig.from_dict(params["config"])


# handlers: (workspace, params) -> JSON payload

def _op_dtm_build(ws: Workspace, params: dict) -> dict:
    config = _pipeline_config(params)
    dtm = ws.build_collection_dtm(params["collection_id"], config)
    return dtm.to_payload()


def _op_freq(ws: Workspace, params: dict) -> dict:
    dtm = ws.get_dtm(params["dtm"])
    series = lx.term_frequencies(
        dtm, params["terms"],
        params.get("granularity", "month"), params.get("normalization", "absolute"),
    )
    return {
        "kind": "time_series",
        "granularity": params.get("granularity", "month"),
        "normalization": params.get("normalization", "absolute"),
        "series": {term: s.to_rows() for term, s in series.items()},
    }


def _op_dict(ws: Workspace, params: dict) -> dict:
    dtm = ws.get_dtm(params["dtm"])
    dictionary = lx.Dictionary(
        name=params["dictionary"]["name"],
        concepts={k: set(v) for k, v in params["dictionary"]["concepts"].items()},
    )
    series = lx.dictionary_analysis(
        dtm, dictionary,
        params.get("granularity", "month"), params.get("normalization", "absolute"),
    )
    return {
        "kind": "time_series",
        "granularity": params.get("granularity", "month"),
        "normalization": params.get("normalization", "absolute"),
        "series": {concept: s.to_rows() for concept, s in series.items()},
    }


def _op_keyterms(ws: Workspace, params: dict) -> dict:
    target = ws.get_dtm(params["target"])
    reference = ws.get_dtm(params["reference"]) if params.get("reference") else None
    model = ws.get_model(params["model"]) if params.get("model") else None
    result = lx.extract_keyterms(
        target, reference, params.get("method", "keyness_llr"),
        model=model, limit=params.get("limit"),
    )
    return {"kind": "keyterms", "method": result.method, "terms": result.to_rows()}


def _op_kwic(ws: Workspace, params: dict) -> dict:
    processed = ws.processed_collection(params["collection_id"], _pipeline_config(params))
    lines = lx.kwic(
        processed, params["term"],
        window=params.get("window", 5), max_lines=params.get("max_lines"),
    )
    return {"kind": "kwic", "term": params["term"], "lines": [l.to_row() for l in lines]}


def _op_cooc(ws: Workspace, params: dict) -> dict:
    processed = ws.processed_collection(params["collection_id"], _pipeline_config(params))
    cfg = params.get("cooc") or {}
    cooc_config = lx.CoocConfig(
        unit=cfg.get("unit", "sentence"),
        n_left=cfg.get("n_left", 0),
        n_right=cfg.get("n_right", 0),
        ordered=bool(cfg.get("ordered", False)),
        measure=cfg.get("measure", "llr"),
        min_joint=cfg.get("min_joint", 2),
    )
    result = lx.cooccurrences(processed, cooc_config)
    return {
        "kind": "cooccurrence",
        "unit": cooc_config.unit,
        "ordered": cooc_config.ordered,
        "measure": cooc_config.measure,
        "min_joint": cooc_config.min_joint,
        "n_units": result.n_units,
        "pairs": result.to_rows(),
    }


def _op_volatility(ws: Workspace, params: dict) -> dict:
    processed = ws.processed_collection(params["collection_id"], _pipeline_config(params))
    results = lx.context_volatility(
        processed, params["terms"],
        granularity=params.get("granularity", "year"),
        history=params.get("history", 3),
        top_m=params.get("top_m", 10),
    )
    return {
        "kind": "volatility",
        "granularity": params.get("granularity", "year"),
        "history": params.get("history", 3),
        "top_m": params.get("top_m", 10),
        "series": {term: r.to_rows() for term, r in results.items()},
        "profiles": {
            term: {b.isoformat(): p for b, p in r.profiles.items()}
            for term, r in results.items()
        },
    }


def _op_topics_fit(ws: Workspace, params: dict) -> dict:
    dtm = ws.get_dtm(params["dtm"])
    model = tp.fit_lda(dtm, _lda_config(params))
    return model.to_payload()


def _op_topics_search(ws: Workspace, params: dict) -> dict:
    dtm = ws.get_dtm(params["dtm"])
    table, best = tp.hyperparameter_search(
        dtm,
        k_grid=params["k_grid"],
        alpha_grid=params["alpha_grid"],
        heldout_fraction=params.get("heldout_fraction", 0.1),
        seed=params.get("seed", 0),
        beta=params.get("beta", 0.01),
        iterations=params.get("iterations", 200),
        fold_sweeps=params.get("fold_sweeps", 50),
    )
    return {"kind": "hyperparameter_search", "table": table, "best": best.to_dict()}


def _op_topics_reliability(ws: Workspace, params: dict) -> dict:
    dtm = ws.get_dtm(params["dtm"])
    report = tp.reliability(
        dtm, _lda_config(params),
        runs=params.get("runs", 5), tau=params.get("tau", 0.8),
        seeds=params.get("seeds"),
    )
    return {"kind": "reliability", **report.to_dict()}


def _op_topics_ldavis(ws: Workspace, params: dict) -> dict:
    dtm = ws.get_dtm(params["dtm"])
    model = ws.get_model(params["model"])
    payload = tp.ldavis_export(model, dtm, n_terms=params.get("n_terms", 30))
    return {"kind": "ldavis", **payload}


def _op_topics_filter(ws: Workspace, params: dict) -> dict:
    dtm = ws.get_dtm(params["dtm"])
    model = ws.get_model(params["model"])
    doc_ids = tp.topic_filter_ids(model, dtm, params["topic"], params["theta_min"])
    collection = ws.store.get_collection(dtm.collection_id)
    name = params.get("name") or f"{collection.name}-topic{params['topic']}"
    created = ws.create_collection(collection.corpus_id, name, doc_ids=doc_ids)
    return {
        "kind": "collection",
        "collection_id": created.id,
        "corpus_id": created.corpus_id,
        "name": created.name,
        "query": None,
        "doc_ids": list(created.doc_ids),
        "topic": params["topic"],
        "theta_min": params["theta_min"],
    }


def _op_agreement(ws: Workspace, params: dict) -> dict:
    report = ws.annotations.agreement(
        params["scheme_id"], params["doc_ids"],
        params["annotator_a"], params["annotator_b"],
    )
    return {"kind": "agreement", **report.to_dict()}


def _training_inputs(ws: Workspace, params: dict):
    config = _pipeline_config(params)
    dtm = ws.get_dtm(params["dtm"])
    processed = ws.processed_collection(dtm.collection_id, config)
    scheme = ws.annotations.get_scheme(params["scheme_id"])
    anns = ws.annotations.annotations_for(scheme_id=params["scheme_id"])
    return config, dtm, processed, scheme, anns


def _op_classify_train(ws: Workspace, params: dict) -> dict:
    _, dtm, processed, scheme, anns = _training_inputs(ws, params)
    examples = clf.build_training_set(
        anns, params["target_category"], scheme, processed, dtm.vocabulary,
        include_unannotated=bool(params.get("include_unannotated", False)),
    )
    classifier, report = clf.train(
        examples,
        algorithm=params.get("algorithm", "multinomial_nb"),
        hyperparams=params.get("hyperparams") or {},
        seed=params.get("seed", 0),
        k_folds=params.get("k_folds", 5),
        target_category=params["target_category"],
        vocab_hash=clf.vocabulary_hash(dtm.vocabulary),
    )
    return {
        "kind": "classifier",
        "classifier": classifier.to_payload(),
        "eval": report.to_dict(),
        "n_examples": len(examples),
        "n_positive": sum(1 for e in examples if e.label),
    }


def _doc_features(processed, vocabulary) -> list[tuple[str, dict[int, int]]]:
    items = []
    for pdoc in processed:
        features: dict[int, int] = {}
        for t in pdoc.tokens:
            tid = vocabulary.id_of(t.term)
            if tid is not None:
                features[tid] = features.get(tid, 0) + 1
        items.append((pdoc.doc_id, features))
    return items


def _op_classify_predict(ws: Workspace, params: dict) -> dict:
    classifier = ws.get_classifier(params["model"])
    dtm = ws.get_dtm(params["dtm"])
    processed = ws.processed_collection(params["collection_id"], _pipeline_config(params))
    items = _doc_features(processed, dtm.vocabulary)
    predictions = clf.predict(classifier, items, vocab_hash=clf.vocabulary_hash(dtm.vocabulary))
    return {
        "kind": "predictions",
        "predictions": [
            {"key": key, "label": bool(label), "score": score}
            for key, label, score in predictions
        ],
    }


def _op_classify_batch(ws: Workspace, params: dict) -> dict:
    classifier = ws.get_classifier(params["model"])
    dtm = ws.get_dtm(params["dtm"])
    processed = ws.processed_collection(params["collection_id"], _pipeline_config(params))
    exclude = set(params.get("exclude") or [])
    items = [(k, f) for k, f in _doc_features(processed, dtm.vocabulary) if k not in exclude]
    batch = clf.next_batch(
        classifier, items,
        batch_size=params.get("batch_size", 10),
        round_index=params.get("round", 0),
    )
    return {"kind": "active_batch", **batch.to_dict()}


def register_operations(manager: JobManager) -> None:
    def collection_input(ws: Workspace, params: dict) -> list[str]:
        h = ws.collection_result_hash(params["collection_id"])
        return [h] if h else []

    ops = [
        Operation("dtm.build", _op_dtm_build,
                  validator=lambda p: (_need(p, "collection_id", str),
                                       _pipeline_config(p)),
                  input_hashes=collection_input,
                  collection_of=lambda p: p.get("collection_id")),
        Operation("freq.terms", _op_freq,
                  validator=lambda p: (_need(p, "dtm", str), _need(p, "terms", list)),
                  input_hashes=lambda ws, p: [p["dtm"]]),
        Operation("dict.analyze", _op_dict,
                  validator=lambda p: (_need(p, "dtm", str), _need(p, "dictionary", dict)),
                  input_hashes=lambda ws, p: [p["dtm"]]),
        Operation("keyterms.extract", _op_keyterms,
                  validator=lambda p: _need(p, "target", str),
                  input_hashes=lambda ws, p: [h for h in
                                              (p.get("target"), p.get("reference"), p.get("model"))
                                              if h]),
        Operation("kwic.lines", _op_kwic,
                  validator=lambda p: (_need(p, "collection_id", str), _need(p, "term", str)),
                  input_hashes=collection_input,
                  collection_of=lambda p: p.get("collection_id")),
        Operation("cooc.pairs", _op_cooc,
                  validator=lambda p: _need(p, "collection_id", str),
                  input_hashes=collection_input,
                  collection_of=lambda p: p.get("collection_id")),
        Operation("volatility.compute", _op_volatility,
                  validator=lambda p: (_need(p, "collection_id", str), _need(p, "terms", list)),
                  input_hashes=collection_input,
                  collection_of=lambda p: p.get("collection_id")),
        Operation("topics.fit", _op_topics_fit,
                  validator=lambda p: (_need(p, "dtm", str), _validate_lda_config(p)),
                  input_hashes=lambda ws, p: [p["dtm"]]),
        Operation("topics.search", _op_topics_search,
                  validator=lambda p: (_need(p, "dtm", str),
                                       _need(p, "k_grid", list), _need(p, "alpha_grid", list)),
                  input_hashes=lambda ws, p: [p["dtm"]]),
        Operation("topics.reliability", _op_topics_reliability,
                  validator=lambda p: (_need(p, "dtm", str), _validate_lda_config(p)),
                  input_hashes=lambda ws, p: [p["dtm"]]),
        Operation("topics.ldavis", _op_topics_ldavis,
                  validator=lambda p: (_need(p, "dtm", str), _need(p, "model", str)),
                  input_hashes=lambda ws, p: [p["dtm"], p["model"]]),
        Operation("topics.filter", _op_topics_filter,
                  validator=lambda p: (_need(p, "dtm", str), _need(p, "model", str),
                                       _need(p, "topic", int), _need(p, "theta_min", (int, float))),
                  input_hashes=lambda ws, p: [p["dtm"], p["model"]],
                  pure=False),
        Operation("agreement.compute", _op_agreement,
                  validator=lambda p: (_need(p, "scheme_id", str), _need(p, "doc_ids", list),
                                       _need(p, "annotator_a", str), _need(p, "annotator_b", str))),
        Operation("classify.train", _op_classify_train,
                  validator=lambda p: (_need(p, "dtm", str), _need(p, "scheme_id", str),
                                       _need(p, "target_category", str)),
                  input_hashes=lambda ws, p: [p["dtm"]]),
        Operation("classify.predict", _op_classify_predict,
                  validator=lambda p: (_need(p, "model", str), _need(p, "dtm", str),
                                       _need(p, "collection_id", str)),
                  input_hashes=lambda ws, p: [p["model"], p["dtm"]],
                  collection_of=lambda p: p.get("collection_id")),
        Operation("classify.batch", _op_classify_batch,
                  validator=lambda p: (_need(p, "model", str), _need(p, "dtm", str),
                                       _need(p, "collection_id", str)),
                  input_hashes=lambda ws, p: [p["model"], p["dtm"]],
                  collection_of=lambda p: p.get("collection_id")),
    ]
    for op in ops:
        manager.register(op)
