"""Command-line front door mirroring the HTTP API.

Every subcommand supports --output, --format (csv|json) and --quiet.
Exit codes: 0 success, 1 user error (bad input, unknown object, failed
validation), 2 internal error. With --quiet, diagnostics are emitted as
one JSON object on stderr. Analysis commands that involve randomness
require an explicit --seed; nothing is seeded silently.

Report-style commands (freq, dict, volatility, cooc, topics ldavis)
accept --figure PATH to render a chart file alongside the delimited
output.
"""

from __future__ import annotations

import csv as _csv
import io
import json
import sys

import click

from .errors import MinerError, ValidationError
from .store import MetadataSchema, SchemaField
from .workspace import Workspace, load_config


class Context:
    def __init__(self, data_dir: str | None, quiet: bool, config_path: str | None):
        cfg = load_config(config_path)
        self.config = cfg
        self.data_dir = data_dir or cfg["data_dir"]
        self.quiet = quiet
        self._workspace: Workspace | None = None

    @property
    def workspace(self) -> Workspace:
        if self._workspace is None:
            self._workspace = Workspace(self.data_dir, workers=self.config["workers"])
        return self._workspace


pass_context = click.make_pass_decorator(Context)


def _fail(ctx: Context, message: str, code: int, fields: list[str] | None = None):
    if ctx.quiet:
        sys.stderr.write(json.dumps({"error": message, "fields": fields or []}) + "\n")
    else:
        sys.stderr.write(f"error: {message}\n")
    sys.exit(code)


def _guard(fn):
    """Map engine errors to the documented exit codes."""
    import functools

    @functools.wraps(fn)
    def wrapper(ctx, *args, **kwargs):
        try:
            return fn(ctx, *args, **kwargs)
        except ValidationError as exc:
            _fail(ctx, str(exc), 1, exc.field_paths)
        except (MinerError, ValueError, FileNotFoundError) as exc:
            _fail(ctx, str(exc), 1)
        except click.exceptions.Exit:
            raise
        except Exception as exc:  # pragma: no cover - internal failure path
            _fail(ctx, f"internal error: {exc}", 2)
    return wrapper


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _rows_for(payload: dict) -> tuple[list[str], list[dict]]:
    kind = payload.get("kind")
    if kind == "time_series":
        rows = []
        for label, series in sorted(payload["series"].items()):
            rows.extend(series)
        return ["label", "bucket", "value"], rows
    if kind == "cooccurrence":
        return ["term_a", "term_b", "joint", "score"], payload["pairs"]
    if kind == "keyterms":
        return ["term", "score"], payload["terms"]
    if kind == "kwic":
        return ["doc_id", "sentence", "left", "node", "right", "date"], payload["lines"]
    if kind == "volatility":
        rows = []
        for term, series in sorted(payload["series"].items()):
            rows.extend(series)
        return ["term", "slice", "volatility"], rows
    if kind == "predictions":
        return ["key", "label", "score"], payload["predictions"]
    if kind == "active_batch":
        return ["key", "predicted", "score", "uncertainty"], payload["candidates"]
    if kind == "hyperparameter_search":
        return ["k", "alpha", "beta", "heldout_per_token_loglik"], payload["table"]
    if kind == "collection":
        return ["doc_id"], [{"doc_id": d} for d in payload["doc_ids"]]
    rows = [{"key": k, "value": json.dumps(v, ensure_ascii=False, sort_keys=True)}
            for k, v in sorted(payload.items())]
    return ["key", "value"], rows


def _emit(ctx: Context, payload: dict, output: str | None, format: str) -> None:
    if format == "json":
        text = json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=True)
    else:
        fieldnames, rows = _rows_for(payload)
        buffer = io.StringIO()
        writer = _csv.DictWriter(buffer, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        text = buffer.getvalue()
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
        if not ctx.quiet:
            click.echo(f"wrote {output}")
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _note(ctx: Context, message: str) -> None:
    if not ctx.quiet:
        click.echo(message, err=True)


def output_options(fn):
    fn = click.option("--output", type=click.Path(), default=None,
                      help="write result to this file instead of stdout")(fn)
    fn = click.option("--format", "format_", type=click.Choice(["csv", "json"]),
                      default="json", show_default=True)(fn)
    return fn


def _run_job(ctx: Context, operation: str, parameters: dict) -> dict:
    job = ctx.workspace.run_sync(operation, parameters)
    if job.status != "done":
        raise ValidationError(job.error or f"job failed ({operation})")
    payload = ctx.workspace.results.read(job.result_hash)
    payload = dict(payload)
    payload["result_hash"] = job.result_hash
    payload["run_id"] = job.run_id
    return payload


def _maybe_figure(payload: dict, figure: str | None) -> None:
    if not figure:
        return
    from . import plotting

    kind = payload.get("kind")
    if kind == "time_series":
        plotting.plot_time_series(payload["series"], figure)
    elif kind == "volatility":
        plotting.plot_volatility(payload["series"], figure)
    elif kind == "ldavis":
        plotting.plot_topic_map(payload, figure)
    elif kind == "cooccurrence":
        plotting.plot_pair_bars(payload["pairs"], figure)


# ---------------------------------------------------------------------------
# Root group
# ---------------------------------------------------------------------------

@click.group()
@click.option("--data-dir", envvar="ILCM_DATA_DIR", default=None,
              help="workspace directory (default from config.toml or ./corpus-data)")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="path to config.toml")
@click.option("--quiet", is_flag=True, default=False,
              help="suppress progress notes; errors become JSON on stderr")
@click.pass_context
def main(click_ctx, data_dir, config_path, quiet):
    """Corpus mining from the command line."""
    click_ctx.obj = Context(data_dir, quiet, config_path)


# -- corpus management ---------------------------------------------------------

@main.command("create-corpus")
@click.option("--name", required=True)
@click.option("--language", default="en", show_default=True)
@click.option("--field", "fields", multiple=True,
              help="schema field as name:kind[:required][:facetable]")
@output_options
@pass_context
@_guard
def create_corpus(ctx, name, language, fields, output, format_):
    """Create a corpus with a typed metadata schema."""
    schema_fields = []
    for spec in fields:
        parts = spec.split(":")
        if len(parts) < 2:
            raise ValidationError(f"field spec {spec!r} must be name:kind[...]")
        schema_fields.append(SchemaField(
            name=parts[0], kind=parts[1],
            required="required" in parts[2:], facetable="facetable" in parts[2:],
        ))
    corpus = ctx.workspace.create_corpus(name, language, MetadataSchema(tuple(schema_fields)))
    _emit(ctx, {"id": corpus.id, "name": name, "language": language,
                "warnings": list(corpus.warnings)}, output, format_)


@main.command("import")
@click.option("--corpus", required=True, help="corpus id or name")
@click.option("--source", required=True, type=click.Path())
@click.option("--source-format", "source_format", required=True,
              type=click.Choice(["csv", "jsonl", "plaintext-dir", "xml"]))
@click.option("--map", "mapping", multiple=True, help="source-field=schema-field")
@click.option("--dedupe-key", default=None)
@click.option("--record-path", default=None, help="record element path for XML")
@output_options
@pass_context
@_guard
def import_cmd(ctx, corpus, source, source_format, mapping, dedupe_key,
               record_path, output, format_):
    """Bulk-import documents from CSV/JSONL/XML or a plain-text directory."""
    corpus_id = _resolve_corpus(ctx, corpus)
    mapped = dict(m.split("=", 1) for m in mapping)
    report = ctx.workspace.import_documents(
        corpus_id, source, source_format, mapped, dedupe_key, record_path,
    )
    _note(ctx, f"accepted {report.accepted}, rejected {report.rejected}")
    _emit(ctx, {"kind": "import_report", **report.to_dict()}, output, format_)


def _resolve_corpus(ctx: Context, ref: str) -> str:
    store = ctx.workspace.store
    try:
        return store.get_corpus(ref).id
    except MinerError:
        return store.find_corpus(ref).id


@main.command("index")
@click.option("--corpus", required=True)
@output_options
@pass_context
@_guard
def index_cmd(ctx, corpus, output, format_):
    """Rebuild the inverted index snapshot of a corpus."""
    corpus_id = _resolve_corpus(ctx, corpus)
    snapshot = ctx.workspace.ensure_index(corpus_id, rebuild=True)
    _emit(ctx, {"corpus_id": corpus_id, "generation": snapshot.generation,
                "documents": snapshot.doc_count}, output, format_)


@main.command("search")
@click.option("--corpus", required=True)
@click.option("--query", required=True)
@click.option("--offset", default=0, show_default=True)
@click.option("--limit", default=10, show_default=True)
@click.option("--facets", default="", help="comma-separated facet fields")
@output_options
@pass_context
@_guard
def search_cmd(ctx, corpus, query, offset, limit, facets, output, format_):
    """Run a query and print hits, scores and facet counts."""
    corpus_id = _resolve_corpus(ctx, corpus)
    page = ctx.workspace.search(
        corpus_id, query, offset, limit, [f for f in facets.split(",") if f] or None,
    )
    payload = {
        "kind": "search",
        "total_hits": page.total_hits,
        "query_echo": page.query_echo,
        "hits": [{"doc_id": h.doc_id, "score": h.score, "snippet": h.snippet}
                 for h in page.hits],
        "facets": {f: [{"value": v, "count": c} for v, c in vs]
                   for f, vs in page.facets.items()},
    }
    if format_ == "csv":
        fieldnames, rows = ["doc_id", "score", "snippet"], payload["hits"]
        buffer = io.StringIO()
        writer = _csv.DictWriter(buffer, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
        text = buffer.getvalue()
        if output:
            with open(output, "w", encoding="utf-8") as fh:
                fh.write(text)
            _note(ctx, f"wrote {output}")
        else:
            click.echo(text, nl=False)
    else:
        _emit(ctx, payload, output, format_)


@main.command("collection")
@click.option("--corpus", required=True)
@click.option("--name", required=True)
@click.option("--query", default=None, help="query-defined (frozen at creation)")
@click.option("--doc-ids", default=None, help="comma-separated explicit ids")
@output_options
@pass_context
@_guard
def collection_cmd(ctx, corpus, name, query, doc_ids, output, format_):
    """Create a frozen collection from a query or an explicit id list."""
    corpus_id = _resolve_corpus(ctx, corpus)
    ids = [d for d in doc_ids.split(",") if d] if doc_ids else None
    coll = ctx.workspace.create_collection(corpus_id, name, query=query, doc_ids=ids)
    _emit(ctx, {"kind": "collection", "collection_id": coll.id, "name": coll.name,
                "size": coll.size, "query": coll.query, "doc_ids": list(coll.doc_ids)},
          output, format_)


@main.command("export")
@click.option("--corpus", required=True)
@click.option("--collection", "collection_id", default=None)
@click.option("--output", required=True, type=click.Path())
@pass_context
@_guard
def export_cmd(ctx, corpus, collection_id, output):
    """Export a corpus or collection as JSONL."""
    corpus_id = _resolve_corpus(ctx, corpus)
    doc_ids = None
    if collection_id:
        doc_ids = ctx.workspace.store.get_collection(collection_id).doc_ids
    n = ctx.workspace.store.export_jsonl(corpus_id, output, doc_ids)
    _note(ctx, f"wrote {n} documents to {output}")


# -- preprocessing -----------------------------------------------------------------

def pipeline_options(fn):
    fn = click.option("--language", default="en", show_default=True)(fn)
    fn = click.option("--no-sentences", is_flag=True, default=False)(fn)
    fn = click.option("--lowercase/--no-lowercase", default=True, show_default=True)(fn)
    fn = click.option("--stopwords", default=None, help="stopword list id (e.g. en, de)")(fn)
    fn = click.option("--stemming", default=None, help="porter or de-light")(fn)
    fn = click.option("--lemmatization", default=None, help="lemma dictionary id")(fn)
    fn = click.option("--ngram", default=None, type=int, help="2 or 3")(fn)
    fn = click.option("--ngram-mode", default="append",
                      type=click.Choice(["append", "replace"]))(fn)
    fn = click.option("--mwe-threshold", default=None, type=float,
                      help="enable multi-word detection at this LLR threshold")(fn)
    fn = click.option("--gazetteer", default=None, help="gazetteer resource id")(fn)
    fn = click.option("--min-count", default=0, show_default=True)(fn)
    fn = click.option("--min-df", default=0.0, show_default=True)(fn)
    fn = click.option("--max-df", default=1.0, show_default=True)(fn)
    return fn


def _pipeline_dict(language, no_sentences, lowercase, stopwords, stemming,
                   lemmatization, ngram, ngram_mode, mwe_threshold, gazetteer,
                   min_count, min_df, max_df) -> dict:
    return {
        "language": language,
        "sentence_segmentation": not no_sentences,
        "lowercase": lowercase,
        "stopwords": stopwords,
        "stemming": stemming,
        "lemmatization": lemmatization,
        "ngram": {"n": ngram, "mode": ngram_mode} if ngram else None,
        "mwe": {"llr_threshold": mwe_threshold} if mwe_threshold is not None else None,
        "gazetteer": gazetteer,
        "pruning": {"min_count": min_count, "min_df_rel": min_df, "max_df_rel": max_df},
    }


@main.command("dtm")
@click.option("--collection", "collection_id", required=True)
@pipeline_options
@output_options
@pass_context
@_guard
def dtm_cmd(ctx, collection_id, output, format_, **pipeline):
    """Build a document-term matrix for a collection."""
    payload = _run_job(ctx, "dtm.build", {
        "collection_id": collection_id, "config": _pipeline_dict(**pipeline),
    })
    summary = {
        "kind": "dtm_summary",
        "result_hash": payload["result_hash"],
        "documents": len(payload["doc_ids"]),
        "terms": len(payload["terms"]),
        "entries": len(payload["entries"]),
    }
    _emit(ctx, summary if format_ == "json" else payload, output, format_)


# -- lexicometric reports -------------------------------------------------------------

@main.command("freq")
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--terms", required=True, help="comma-separated terms")
@click.option("--granularity", default="month", type=click.Choice(["day", "month", "year"]))
@click.option("--normalization", default="absolute",
              type=click.Choice(["absolute", "per_document", "per_token"]))
@click.option("--figure", type=click.Path(), default=None)
@output_options
@pass_context
@_guard
def freq_cmd(ctx, dtm_hash, terms, granularity, normalization, figure, output, format_):
    """Term frequency time series from a DTM."""
    payload = _run_job(ctx, "freq.terms", {
        "dtm": dtm_hash, "terms": [t for t in terms.split(",") if t],
        "granularity": granularity, "normalization": normalization,
    })
    _maybe_figure(payload, figure)
    _emit(ctx, payload, output, format_)


@main.command("dict")
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--dictionary", "dictionary_path", required=True, type=click.Path(),
              help="JSON file: {name, concepts: {concept: [terms]}}")
@click.option("--granularity", default="month", type=click.Choice(["day", "month", "year"]))
@click.option("--normalization", default="absolute",
              type=click.Choice(["absolute", "per_document", "per_token"]))
@click.option("--figure", type=click.Path(), default=None)
@output_options
@pass_context
@_guard
def dict_cmd(ctx, dtm_hash, dictionary_path, granularity, normalization,
             figure, output, format_):
    """Concept (dictionary) frequency time series."""
    with open(dictionary_path, encoding="utf-8") as fh:
        dictionary = json.load(fh)
    payload = _run_job(ctx, "dict.analyze", {
        "dtm": dtm_hash, "dictionary": dictionary,
        "granularity": granularity, "normalization": normalization,
    })
    _maybe_figure(payload, figure)
    _emit(ctx, payload, output, format_)


@main.command("keyterms")
@click.option("--target", required=True, help="target DTM result hash")
@click.option("--reference", default=None, help="reference DTM result hash")
@click.option("--method", default="keyness_llr",
              type=click.Choice(["keyness_llr", "tfidf", "topic_aggregate"]))
@click.option("--model", default=None, help="topic model hash for topic_aggregate")
@click.option("--limit", default=50, show_default=True)
@output_options
@pass_context
@_guard
def keyterms_cmd(ctx, target, reference, method, model, limit, output, format_):
    """Ranked key terms of a collection."""
    payload = _run_job(ctx, "keyterms.extract", {
        "target": target, "reference": reference, "method": method,
        "model": model, "limit": limit,
    })
    _emit(ctx, payload, output, format_)


@main.command("kwic")
@click.option("--collection", "collection_id", required=True)
@click.option("--term", required=True)
@click.option("--window", default=5, show_default=True)
@click.option("--max-lines", default=None, type=int)
@pipeline_options
@output_options
@pass_context
@_guard
def kwic_cmd(ctx, collection_id, term, window, max_lines, output, format_, **pipeline):
    """Keyword-in-context concordance lines."""
    payload = _run_job(ctx, "kwic.lines", {
        "collection_id": collection_id, "term": term, "window": window,
        "max_lines": max_lines, "config": _pipeline_dict(**pipeline),
    })
    _emit(ctx, payload, output, format_)


@main.command("cooc")
@click.option("--collection", "collection_id", required=True)
@click.option("--unit", default="sentence",
              type=click.Choice(["sentence", "paragraph", "document", "window"]))
@click.option("--n-left", default=0, show_default=True)
@click.option("--n-right", default=0, show_default=True)
@click.option("--ordered", is_flag=True, default=False)
@click.option("--measure", default="llr", type=click.Choice(["llr", "dice", "pmi", "raw"]))
@click.option("--min-joint", default=2, show_default=True)
@click.option("--figure", type=click.Path(), default=None)
@pipeline_options
@output_options
@pass_context
@_guard
def cooc_cmd(ctx, collection_id, unit, n_left, n_right, ordered, measure,
             min_joint, figure, output, format_, **pipeline):
    """Significant term co-occurrences within contextual units."""
    payload = _run_job(ctx, "cooc.pairs", {
        "collection_id": collection_id,
        "config": _pipeline_dict(**pipeline),
        "cooc": {"unit": unit, "n_left": n_left, "n_right": n_right,
                 "ordered": ordered, "measure": measure, "min_joint": min_joint},
    })
    _maybe_figure(payload, figure)
    _emit(ctx, payload, output, format_)


@main.command("volatility")
@click.option("--collection", "collection_id", required=True)
@click.option("--terms", required=True, help="comma-separated terms")
@click.option("--granularity", default="year", type=click.Choice(["day", "month", "year"]))
@click.option("--history", default=3, show_default=True)
@click.option("--top-m", default=10, show_default=True)
@click.option("--figure", type=click.Path(), default=None)
@pipeline_options
@output_options
@pass_context
@_guard
def volatility_cmd(ctx, collection_id, terms, granularity, history, top_m,
                   figure, output, format_, **pipeline):
    """Context volatility per time slice."""
    payload = _run_job(ctx, "volatility.compute", {
        "collection_id": collection_id,
        "terms": [t for t in terms.split(",") if t],
        "granularity": granularity, "history": history, "top_m": top_m,
        "config": _pipeline_dict(**pipeline),
    })
    _maybe_figure(payload, figure)
    _emit(ctx, payload, output, format_)


# -- topic models -----------------------------------------------------------------------

@main.group("topics")
def topics_group():
    """Topic modeling: fit, inspect, search, reliability, filter."""


@topics_group.command("fit")
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--k", required=True, type=int)
@click.option("--alpha", default=None, type=float, help="default 50/k")
@click.option("--beta", default=0.01, show_default=True, type=float)
@click.option("--iterations", default=500, show_default=True, type=int)
@click.option("--seed", required=True, type=int)
@output_options
@pass_context
@_guard
def topics_fit(ctx, dtm_hash, k, alpha, beta, iterations, seed, output, format_):
    """Fit a topic model on a DTM."""
    payload = _run_job(ctx, "topics.fit", {
        "dtm": dtm_hash,
        "config": {"k": k, "alpha": alpha, "beta": beta,
                   "iterations": iterations, "seed": seed},
    })
    summary = {
        "kind": "topic_model_summary",
        "result_hash": payload["result_hash"],
        "k": payload["config"]["k"],
        "final_loglik": payload["loglik"][-1] if payload["loglik"] else None,
    }
    _emit(ctx, summary if format_ == "json" else payload, output, format_)


@topics_group.command("top")
@click.option("--model", "model_hash", required=True)
@click.option("--topic", default=None, type=int, help="one topic (default: all)")
@click.option("--n", default=10, show_default=True)
@output_options
@pass_context
@_guard
def topics_top(ctx, model_hash, topic, n, output, format_):
    """Top terms per topic by probability."""
    from . import topics as tp

    model = ctx.workspace.get_model(model_hash)
    topic_ids = [topic] if topic is not None else list(range(model.config.k))
    payload = {
        "kind": "keyterms",
        "method": "top_terms",
        "terms": [
            {"term": term, "score": score, "topic": k}
            for k in topic_ids
            for term, score in tp.top_terms(model, k, n)
        ],
    }
    _emit(ctx, payload, output, format_)


@topics_group.command("relevance")
@click.option("--model", "model_hash", required=True)
@click.option("--lam", "--lambda", "lam", required=True, type=float)
@click.option("--n", default=10, show_default=True)
@output_options
@pass_context
@_guard
def topics_relevance(ctx, model_hash, lam, n, output, format_):
    """Relevance-ranked terms per topic for one lambda."""
    from . import topics as tp

    model = ctx.workspace.get_model(model_hash)
    rankings = tp.relevance(model, lam, n=n)
    payload = {
        "kind": "keyterms",
        "method": f"relevance@{lam}",
        "terms": [
            {"term": term, "score": score, "topic": k}
            for k, ranking in enumerate(rankings)
            for term, score in ranking
        ],
    }
    _emit(ctx, payload, output, format_)


@topics_group.command("ldavis")
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--model", "model_hash", required=True)
@click.option("--n-terms", default=30, show_default=True)
@click.option("--figure", type=click.Path(), default=None)
@output_options
@pass_context
@_guard
def topics_ldavis(ctx, dtm_hash, model_hash, n_terms, figure, output, format_):
    """Export the topic browser payload (and optionally the topic map)."""
    payload = _run_job(ctx, "topics.ldavis", {
        "dtm": dtm_hash, "model": model_hash, "n_terms": n_terms,
    })
    _maybe_figure(payload, figure)
    _emit(ctx, payload, output, format_)


@topics_group.command("search")
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--k-grid", required=True, help="comma-separated topic counts")
@click.option("--alpha-grid", default="", help="comma-separated alphas (default 50/k)")
@click.option("--heldout-fraction", default=0.1, show_default=True, type=float)
@click.option("--iterations", default=200, show_default=True, type=int)
@click.option("--seed", required=True, type=int)
@output_options
@pass_context
@_guard
def topics_search(ctx, dtm_hash, k_grid, alpha_grid, heldout_fraction,
                  iterations, seed, output, format_):
    """Grid-search topic count and prior on held-out likelihood."""
    ks = [int(x) for x in k_grid.split(",") if x]
    alphas = [float(x) for x in alpha_grid.split(",") if x] or [50.0 / max(ks)]
    payload = _run_job(ctx, "topics.search", {
        "dtm": dtm_hash, "k_grid": ks, "alpha_grid": alphas,
        "heldout_fraction": heldout_fraction, "iterations": iterations, "seed": seed,
    })
    _emit(ctx, payload, output, format_)


@topics_group.command("reliability")
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--k", required=True, type=int)
@click.option("--alpha", default=None, type=float)
@click.option("--iterations", default=200, show_default=True, type=int)
@click.option("--runs", default=5, show_default=True, type=int)
@click.option("--tau", default=0.8, show_default=True, type=float)
@click.option("--seed", required=True, type=int)
@output_options
@pass_context
@_guard
def topics_reliability(ctx, dtm_hash, k, alpha, iterations, runs, tau, seed,
                       output, format_):
    """Topic stability over repeated runs with shifted seeds."""
    payload = _run_job(ctx, "topics.reliability", {
        "dtm": dtm_hash,
        "config": {"k": k, "alpha": alpha, "iterations": iterations, "seed": seed},
        "runs": runs, "tau": tau,
    })
    _emit(ctx, payload, output, format_)


@topics_group.command("filter")
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--model", "model_hash", required=True)
@click.option("--topic", required=True, type=int)
@click.option("--theta-min", required=True, type=float)
@click.option("--name", default=None)
@output_options
@pass_context
@_guard
def topics_filter(ctx, dtm_hash, model_hash, topic, theta_min, name, output, format_):
    """Create a sub-collection of documents dominated by one topic."""
    payload = _run_job(ctx, "topics.filter", {
        "dtm": dtm_hash, "model": model_hash,
        "topic": topic, "theta_min": theta_min, "name": name,
    })
    _emit(ctx, payload, output, format_)


# -- annotation and classification ----------------------------------------------------

@main.command("annotate-export")
@click.option("--docs", required=True, help="comma-separated doc ids")
@click.option("--output", required=True, type=click.Path())
@click.option("--format", "format_", type=click.Choice(["csv", "json"]),
              default="csv", show_default=True)
@pass_context
@_guard
def annotate_export(ctx, docs, output, format_):
    """Export manual annotations for a document set."""
    n = ctx.workspace.annotations.export_annotations(
        [d for d in docs.split(",") if d], output, format_,
    )
    _note(ctx, f"wrote {n} annotations to {output}")


@main.command("agreement")
@click.option("--scheme", "scheme_id", required=True)
@click.option("--docs", required=True, help="comma-separated doc ids")
@click.option("--annotator-a", required=True)
@click.option("--annotator-b", required=True)
@output_options
@pass_context
@_guard
def agreement_cmd(ctx, scheme_id, docs, annotator_a, annotator_b, output, format_):
    """Intercoder agreement (percent agreement + kappa)."""
    payload = _run_job(ctx, "agreement.compute", {
        "scheme_id": scheme_id, "doc_ids": [d for d in docs.split(",") if d],
        "annotator_a": annotator_a, "annotator_b": annotator_b,
    })
    if format_ == "csv":
        rows = [
            {"category": cat, "percent_agreement": v["percent_agreement"],
             "kappa": v["kappa"]}
            for cat, v in sorted(payload["per_category"].items())
        ]
        rows.append({"category": "(pooled)",
                     "percent_agreement": payload["percent_agreement"],
                     "kappa": payload["kappa"]})
        buffer = io.StringIO()
        writer = _csv.DictWriter(buffer, fieldnames=["category", "percent_agreement", "kappa"])
        writer.writeheader()
        writer.writerows(rows)
        click.echo(buffer.getvalue(), nl=False)
    else:
        _emit(ctx, payload, output, format_)


@main.command("train")
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--scheme", "scheme_id", required=True)
@click.option("--target", "target_category", required=True)
@click.option("--algorithm", default="multinomial_nb",
              type=click.Choice(["multinomial_nb", "logistic"]))
@click.option("--k-folds", default=5, show_default=True, type=int)
@click.option("--seed", required=True, type=int)
@pipeline_options
@output_options
@pass_context
@_guard
def train_cmd(ctx, dtm_hash, scheme_id, target_category, algorithm, k_folds,
              seed, output, format_, **pipeline):
    """Train a category classifier from annotations."""
    payload = _run_job(ctx, "classify.train", {
        "dtm": dtm_hash, "scheme_id": scheme_id, "target_category": target_category,
        "algorithm": algorithm, "k_folds": k_folds, "seed": seed,
        "config": _pipeline_dict(**pipeline),
    })
    summary = {
        "kind": "classifier_summary",
        "result_hash": payload["result_hash"],
        "algorithm": algorithm,
        "mean_f1": payload["eval"]["mean_f1"],
        "mean_accuracy": payload["eval"]["mean_accuracy"],
        "n_examples": payload["n_examples"],
    }
    _emit(ctx, summary if format_ == "json" else payload, output, format_)


@main.command("predict")
@click.option("--model", "model_hash", required=True)
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--collection", "collection_id", required=True)
@pipeline_options
@output_options
@pass_context
@_guard
def predict_cmd(ctx, model_hash, dtm_hash, collection_id, output, format_, **pipeline):
    """Score a collection with a trained classifier."""
    payload = _run_job(ctx, "classify.predict", {
        "model": model_hash, "dtm": dtm_hash, "collection_id": collection_id,
        "config": _pipeline_dict(**pipeline),
    })
    _emit(ctx, payload, output, format_)


@main.command("active-batch")
@click.option("--model", "model_hash", required=True)
@click.option("--dtm", "dtm_hash", required=True)
@click.option("--collection", "collection_id", required=True)
@click.option("--batch-size", default=10, show_default=True, type=int)
@click.option("--exclude", default="", help="comma-separated already-labeled keys")
@click.option("--round", "round_index", default=0, show_default=True, type=int)
@pipeline_options
@output_options
@pass_context
@_guard
def active_batch_cmd(ctx, model_hash, dtm_hash, collection_id, batch_size,
                     exclude, round_index, output, format_, **pipeline):
    """Next most-uncertain items for human labeling."""
    payload = _run_job(ctx, "classify.batch", {
        "model": model_hash, "dtm": dtm_hash, "collection_id": collection_id,
        "batch_size": batch_size, "round": round_index,
        "exclude": [e for e in exclude.split(",") if e],
        "config": _pipeline_dict(**pipeline),
    })
    _emit(ctx, payload, output, format_)


# -- service and bundles -----------------------------------------------------------

@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", envvar="ILCM_PORT", default=None, type=int)
@pass_context
@_guard
def serve_cmd(ctx, host, port):
    """Start the HTTP JSON API."""
    from .api import serve

    serve(ctx.workspace, host=host, port=port or ctx.config["port"])


@main.command("export-bundle")
@click.option("--result", "result_hash", required=True)
@click.option("--output", required=True, type=click.Path())
@pass_context
@_guard
def export_bundle_cmd(ctx, result_hash, output):
    """Archive a result with its full provenance chain."""
    ctx.workspace.export_bundle(result_hash, output)
    _note(ctx, f"wrote {output}")


@main.command("import-bundle")
@click.option("--bundle", required=True, type=click.Path())
@output_options
@pass_context
@_guard
def import_bundle_cmd(ctx, bundle, output, format_):
    """Restore a bundle, re-verifying every archived hash."""
    result_hash = ctx.workspace.import_bundle(bundle)
    _emit(ctx, {"result_hash": result_hash}, output, format_)


@main.command("provenance")
@click.option("--result", "result_hash", required=True)
@output_options
@pass_context
@_guard
def provenance_cmd(ctx, result_hash, output, format_):
    """Run-record chain from corpus import to the result."""
    chain = ctx.workspace.provenance(result_hash)
    payload = {"kind": "provenance", "records": [r.to_dict() for r in chain]}
    _emit(ctx, payload, output, format_)


if __name__ == "__main__":
    main()
