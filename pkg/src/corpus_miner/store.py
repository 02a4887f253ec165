"""Corpus, document and collection storage.

Backed by an embedded SQLite database so a workspace is a single
directory that can be copied around. On-disk layout:

    <data_dir>/
        miner.db        - corpora, documents, collections, grants,
                          annotation schemes, annotations, run records
        results/        - content-addressed analysis results (see provenance)

Writes are serialized per process behind one lock; reads go through the
same connection (SQLite serializes internally). Imports run as one
transaction per batch chunk so a crash never leaves half a record.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import sqlite3
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator
from xml.etree import ElementTree

from .errors import (
    IoError,
    MappingError,
    MembershipError,
    NameConflict,
    NotFound,
    PermissionError_,
    SchemaError,
)

logger = logging.getLogger(__name__)

FIELD_KINDS = ("text", "keyword", "integer", "decimal", "date", "boolean")
FACETABLE_KINDS = ("keyword", "integer", "date", "boolean")
SUPPORTED_LANGUAGES = ("de", "en")

_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS corpora (
    id          TEXT PRIMARY KEY,
    name        TEXT NOT NULL,
    language    TEXT NOT NULL,
    schema_json TEXT NOT NULL,
    owner       TEXT NOT NULL,
    created_at  TEXT NOT NULL,
    UNIQUE(owner, name)
);

CREATE TABLE IF NOT EXISTS corpus_grants (
    corpus_id TEXT NOT NULL,
    user      TEXT NOT NULL,
    level     TEXT NOT NULL CHECK(level IN ('read','write')),
    PRIMARY KEY (corpus_id, user)
);

CREATE TABLE IF NOT EXISTS documents (
    id            TEXT PRIMARY KEY,
    corpus_id     TEXT NOT NULL,
    title         TEXT NOT NULL DEFAULT '',
    date          TEXT,
    body          TEXT NOT NULL,
    metadata_json TEXT NOT NULL DEFAULT '{}',
    source_key    TEXT,
    seq           INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_documents_corpus ON documents(corpus_id, seq);
CREATE UNIQUE INDEX IF NOT EXISTS idx_documents_source_key
    ON documents(corpus_id, source_key) WHERE source_key IS NOT NULL;

CREATE TABLE IF NOT EXISTS collections (
    id         TEXT PRIMARY KEY,
    corpus_id  TEXT NOT NULL,
    name       TEXT NOT NULL,
    query      TEXT,
    size       INTEGER NOT NULL,
    created_at TEXT NOT NULL,
    run_id     TEXT,
    seq        INTEGER NOT NULL
);

CREATE TABLE IF NOT EXISTS collection_members (
    collection_id TEXT NOT NULL,
    doc_id        TEXT NOT NULL,
    PRIMARY KEY (collection_id, doc_id)
);

CREATE TABLE IF NOT EXISTS counters (
    name  TEXT PRIMARY KEY,
    value INTEGER NOT NULL
);
"""


class Database:
    """Thin wrapper over one SQLite connection shared by the store modules."""

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._conn.row_factory = sqlite3.Row
        if self.path != ":memory:":
            self._conn.execute("PRAGMA journal_mode=WAL")
        self._conn.execute("PRAGMA foreign_keys=ON")
        self.lock = threading.RLock()

    def executescript(self, sql: str) -> None:
        with self.lock:
            self._conn.executescript(sql)
            self._conn.commit()

    def execute(self, sql: str, params: tuple = ()) -> sqlite3.Cursor:
        with self.lock:
            return self._conn.execute(sql, params)

    def query(self, sql: str, params: tuple = ()) -> list[sqlite3.Row]:
        with self.lock:
            return self._conn.execute(sql, params).fetchall()

    def transaction(self):
        return _Transaction(self)

    def next_seq(self, name: str) -> int:
        with self.lock:
            row = self._conn.execute("SELECT value FROM counters WHERE name=?", (name,)).fetchone()
            value = (row["value"] if row else 0) + 1
            self._conn.execute(
                "INSERT INTO counters(name,value) VALUES(?,?) "
                "ON CONFLICT(name) DO UPDATE SET value=excluded.value",
                (name, value),
            )
            return value

    def close(self) -> None:
        self._conn.close()


class _Transaction:
    def __init__(self, db: Database):
        self.db = db

    def __enter__(self):
        self.db.lock.acquire()
        return self.db

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.db._conn.commit()
        else:
            self.db._conn.rollback()
        self.db.lock.release()
        return False


def _new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchemaField:
    name: str
    kind: str
    required: bool = False
    facetable: bool = False


@dataclass(frozen=True)
class MetadataSchema:
    """Typed metadata layout of a corpus.

    Field names must be unique case-insensitively. ``facetable`` is only
    allowed on keyword/integer/date/boolean fields because text bodies do
    not aggregate into meaningful facet buckets.
    """

    fields: tuple[SchemaField, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for f in self.fields:
            if not f.name or not f.name.replace("_", "").isalnum():
                raise SchemaError(f"invalid field name {f.name!r}")
            low = f.name.lower()
            if low in seen:
                raise SchemaError(f"duplicate field name {f.name!r} (case-insensitive)")
            seen.add(low)
            if f.kind not in FIELD_KINDS:
                raise SchemaError(f"unknown field kind {f.kind!r} for {f.name!r}")
            if f.facetable and f.kind not in FACETABLE_KINDS:
                raise SchemaError(f"field {f.name!r} of kind {f.kind!r} cannot be facetable")

    def field(self, name: str) -> SchemaField | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    @property
    def has_date(self) -> bool:
        f = self.field("date")
        return f is not None and f.kind == "date"

    def facetable_fields(self) -> list[str]:
        return [f.name for f in self.fields if f.facetable]

    def to_dict(self) -> dict:
        return {
            "fields": [
                {"name": f.name, "kind": f.kind, "required": f.required, "facetable": f.facetable}
                for f in self.fields
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetadataSchema":
        return cls(
            fields=tuple(
                SchemaField(
                    name=f["name"],
                    kind=f["kind"],
                    required=bool(f.get("required", False)),
                    facetable=bool(f.get("facetable", False)),
                )
                for f in data["fields"]
            )
        )


@dataclass(frozen=True)
class Corpus:
    id: str
    name: str
    language: str
    schema: MetadataSchema
    owner: str
    created_at: str
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True)
class Document:
    id: str
    corpus_id: str
    title: str
    date: dt.date | None
    body: str
    metadata: dict


@dataclass(frozen=True)
class Collection:
    id: str
    corpus_id: str
    name: str
    query: str | None
    doc_ids: tuple[str, ...]
    created_at: str
    run_id: str | None = None

    @property
    def size(self) -> int:
        return len(self.doc_ids)


@dataclass
class ImportReport:
    accepted: int = 0
    rejected: int = 0
    reasons: list[tuple[str, str]] = field(default_factory=list)

    def reject(self, locator: str, message: str) -> None:
        self.rejected += 1
        self.reasons.append((locator, message))

    def to_dict(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "reasons": [{"locator": loc, "message": msg} for loc, msg in self.reasons],
        }


# ---------------------------------------------------------------------------
# Typed value coercion
# ---------------------------------------------------------------------------

def coerce_value(kind: str, raw) -> object:
    """Coerce a raw import value into the typed form stored for ``kind``.

    Raises ValueError when the value cannot be represented in the kind.
    """
    if raw is None:
        raise ValueError("missing value")
    if kind in ("text", "keyword"):
        return str(raw)
    if kind == "integer":
        if isinstance(raw, bool):
            raise ValueError("boolean is not an integer")
        return int(raw)
    if kind == "decimal":
        return float(raw)
    if kind == "boolean":
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("true", "1", "yes"):
            return True
        if s in ("false", "0", "no"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "date":
        if isinstance(raw, dt.date) and not isinstance(raw, dt.datetime):
            return raw
        return dt.date.fromisoformat(str(raw).strip()[:10])
    raise ValueError(f"unknown kind {kind!r}")


def _metadata_to_json(metadata: dict) -> str:
    out = {}
    for k, v in metadata.items():
        out[k] = v.isoformat() if isinstance(v, dt.date) else v
    return json.dumps(out, sort_keys=True, ensure_ascii=False)


def _metadata_from_json(schema: MetadataSchema, text: str) -> dict:
    raw = json.loads(text)
    out = {}
    for k, v in raw.items():
        f = schema.field(k)
        if f is not None and f.kind == "date" and v is not None:
            out[k] = dt.date.fromisoformat(v)
        else:
            out[k] = v
    return out


# ---------------------------------------------------------------------------
# Store
# ---------------------------------------------------------------------------

class CorpusStore:
    """Lifecycle of corpora, documents, metadata schemes and collections."""

    def __init__(self, db: Database, chunk_size: int = 500):
        self.db = db
        self.chunk_size = chunk_size
        db.executescript(_SCHEMA_SQL)

    # -- corpora ------------------------------------------------------------

    def create_corpus(
        self, name: str, language: str, schema: MetadataSchema, owner: str = "local"
    ) -> Corpus:
        if not isinstance(schema, MetadataSchema):
            schema = MetadataSchema.from_dict(schema)
        warnings: tuple[str, ...] = ()
        if language not in SUPPORTED_LANGUAGES:
            warnings = (
                f"language {language!r} has no bundled stopword/lemma resources; "
                "defaults are disabled, import proceeds",
            )
            logger.warning(warnings[0])
        corpus_id = _new_id("corpus")
        created = _now()
        try:
            with self.db.transaction() as db:
                db.execute(
                    "INSERT INTO corpora(id,name,language,schema_json,owner,created_at) "
                    "VALUES(?,?,?,?,?,?)",
                    (corpus_id, name, language, json.dumps(schema.to_dict()), owner, created),
                )
        except sqlite3.IntegrityError:
            raise NameConflict(f"corpus {name!r} already exists for owner {owner!r}")
        return Corpus(corpus_id, name, language, schema, owner, created, warnings)

    def get_corpus(self, corpus_id: str) -> Corpus:
        rows = self.db.query("SELECT * FROM corpora WHERE id=?", (corpus_id,))
        if not rows:
            raise NotFound(f"corpus {corpus_id!r}")
        r = rows[0]
        return Corpus(
            r["id"], r["name"], r["language"],
            MetadataSchema.from_dict(json.loads(r["schema_json"])),
            r["owner"], r["created_at"],
        )

    def find_corpus(self, name: str) -> Corpus:
        rows = self.db.query("SELECT id FROM corpora WHERE name=?", (name,))
        if not rows:
            raise NotFound(f"corpus named {name!r}")
        return self.get_corpus(rows[0]["id"])

    def list_corpora(self) -> list[Corpus]:
        rows = self.db.query("SELECT id FROM corpora ORDER BY created_at")
        return [self.get_corpus(r["id"]) for r in rows]

    # -- sharing ------------------------------------------------------------

    def share_corpus(self, corpus_id: str, user: str, level: str = "read") -> None:
        if level not in ("read", "write"):
            raise ValueError("grant level must be 'read' or 'write'")
        self.get_corpus(corpus_id)
        with self.db.transaction() as db:
            db.execute(
                "INSERT INTO corpus_grants(corpus_id,user,level) VALUES(?,?,?) "
                "ON CONFLICT(corpus_id,user) DO UPDATE SET level=excluded.level",
                (corpus_id, user, level),
            )

    def access_level(self, corpus_id: str, user: str) -> str | None:
        corpus = self.get_corpus(corpus_id)
        if user == corpus.owner:
            return "write"
        rows = self.db.query(
            "SELECT level FROM corpus_grants WHERE corpus_id=? AND user=?", (corpus_id, user)
        )
        return rows[0]["level"] if rows else None

    def check_access(self, corpus_id: str, user: str, level: str) -> None:
        got = self.access_level(corpus_id, user)
        if got is None or (level == "write" and got != "write"):
            raise PermissionError_(f"user {user!r} lacks {level} access to corpus {corpus_id!r}")

    # -- documents ----------------------------------------------------------

    def add_document(
        self,
        corpus_id: str,
        title: str,
        body: str,
        metadata: dict | None = None,
        source_key: str | None = None,
    ) -> Document:
        """Validate one document against the corpus schema and persist it."""
        corpus = self.get_corpus(corpus_id)
        doc = self._validated(corpus, title, body, metadata or {})
        with self.db.transaction() as db:
            self._insert(db, corpus_id, doc, source_key)
        return self.get_document(doc["id"])

    def _validated(self, corpus: Corpus, title: str, body: str, metadata: dict) -> dict:
        if not body:
            raise ValueError("document body is empty")
        schema = corpus.schema
        typed: dict = {}
        for key, raw in metadata.items():
            f = schema.field(key)
            if f is None:
                raise ValueError(f"field {key!r} not in schema")
            try:
                typed[key] = coerce_value(f.kind, raw)
            except ValueError as exc:
                raise ValueError(f"field {key!r}: {exc}")
        for f in schema.fields:
            if f.required and typed.get(f.name) is None:
                raise ValueError(f"required field {f.name!r} missing")
        date = typed.get("date") if schema.has_date else None
        return {
            "id": _new_id("doc"),
            "title": title,
            "date": date,
            "body": body,
            "metadata": typed,
        }

    def _insert(self, db: Database, corpus_id: str, doc: dict, source_key: str | None) -> None:
        db.execute(
            "INSERT INTO documents(id,corpus_id,title,date,body,metadata_json,source_key,seq) "
            "VALUES(?,?,?,?,?,?,?,?)",
            (
                doc["id"], corpus_id, doc["title"],
                doc["date"].isoformat() if doc["date"] else None,
                doc["body"], _metadata_to_json(doc["metadata"]),
                source_key, db.next_seq("documents"),
            ),
        )

    def get_document(self, doc_id: str) -> Document:
        rows = self.db.query("SELECT * FROM documents WHERE id=?", (doc_id,))
        if not rows:
            raise NotFound(f"document {doc_id!r}")
        r = rows[0]
        corpus = self.get_corpus(r["corpus_id"])
        return Document(
            id=r["id"],
            corpus_id=r["corpus_id"],
            title=r["title"],
            date=dt.date.fromisoformat(r["date"]) if r["date"] else None,
            body=r["body"],
            metadata=_metadata_from_json(corpus.schema, r["metadata_json"]),
        )

    def iter_documents(self, corpus_id: str) -> Iterator[Document]:
        corpus = self.get_corpus(corpus_id)
        rows = self.db.query(
            "SELECT * FROM documents WHERE corpus_id=? ORDER BY seq", (corpus_id,)
        )
        for r in rows:
            yield Document(
                id=r["id"],
                corpus_id=r["corpus_id"],
                title=r["title"],
                date=dt.date.fromisoformat(r["date"]) if r["date"] else None,
                body=r["body"],
                metadata=_metadata_from_json(corpus.schema, r["metadata_json"]),
            )

    def document_count(self, corpus_id: str) -> int:
        return self.db.query(
            "SELECT COUNT(*) AS n FROM documents WHERE corpus_id=?", (corpus_id,)
        )[0]["n"]

    def get_documents(self, doc_ids: Iterable[str]) -> list[Document]:
        return [self.get_document(d) for d in doc_ids]

    # -- import -------------------------------------------------------------

    def import_documents(
        self,
        corpus_id: str,
        source: str | Path,
        format: str,
        mapping: dict[str, str] | None = None,
        dedupe_key: str | None = None,
        record_path: str | None = None,
    ) -> ImportReport:
        """Bulk-import documents from ``source``.

        ``mapping`` maps source field names (CSV column, JSON key, XML
        attribute ``@name`` or child element name) onto schema fields; the
        pseudo-targets ``body`` and ``title`` address the document itself.
        Rejected records are reported with a locator, never aborting the
        batch. ``dedupe_key`` names a schema field whose value must be
        unique inside the corpus.
        """
        corpus = self.get_corpus(corpus_id)
        mapping = dict(mapping or {})
        for target in mapping.values():
            if target in ("body", "title"):
                continue
            if corpus.schema.field(target) is None:
                raise MappingError(f"mapping targets unknown schema field {target!r}")
        if format in ("csv", "jsonl", "xml") and "body" not in mapping.values():
            raise MappingError("no source field mapped to the document body")
        if dedupe_key and corpus.schema.field(dedupe_key) is None:
            raise MappingError(f"dedupe key {dedupe_key!r} not in schema")

        readers: dict[str, Callable] = {
            "csv": self._read_csv,
            "jsonl": self._read_jsonl,
            "plaintext-dir": self._read_plaintext_dir,
            "xml": lambda p: self._read_xml(p, record_path),
        }
        if format not in readers:
            raise ValueError(f"unknown import format {format!r}")

        report = ImportReport()
        pending: list[tuple[dict, str | None]] = []

        def flush():
            if not pending:
                return
            with self.db.transaction() as db:
                for doc, skey in pending:
                    self._insert(db, corpus_id, doc, skey)
            pending.clear()

        try:
            records = readers[format](Path(source))
            for locator, record in records:
                try:
                    if "__parse_error__" in record:
                        raise ValueError(record["__parse_error__"])
                    doc_fields = self._map_record(corpus, mapping, record, format)
                    doc = self._validated(corpus, doc_fields["title"], doc_fields["body"],
                                          doc_fields["metadata"])
                    skey = None
                    if dedupe_key:
                        value = doc["metadata"].get(dedupe_key)
                        if value is None:
                            raise ValueError(f"dedupe key {dedupe_key!r} missing")
                        skey = str(value)
                        if self._source_key_exists(corpus_id, skey) or any(
                            p[1] == skey for p in pending
                        ):
                            raise ValueError(f"duplicate {dedupe_key}={skey!r}")
                    pending.append((doc, skey))
                    report.accepted += 1
                    if len(pending) >= self.chunk_size:
                        flush()
                except ValueError as exc:
                    report.reject(locator, str(exc))
            flush()
        except OSError as exc:
            raise IoError(f"cannot read {source}: {exc}")
        except ElementTree.ParseError as exc:
            raise IoError(f"malformed XML in {source}: {exc}")
        return report

    def _source_key_exists(self, corpus_id: str, skey: str) -> bool:
        rows = self.db.query(
            "SELECT 1 FROM documents WHERE corpus_id=? AND source_key=? LIMIT 1",
            (corpus_id, skey),
        )
        return bool(rows)

    def _map_record(self, corpus: Corpus, mapping: dict, record: dict, format: str) -> dict:
        body = ""
        title = ""
        metadata: dict = {}
        if format == "plaintext-dir":
            body = record.get("body", "")
            title = record.get("title", "")
        for src, target in mapping.items():
            raw = record.get(src)
            if target == "body":
                body = raw or ""
            elif target == "title":
                title = str(raw) if raw is not None else ""
            elif raw is not None and raw != "":
                metadata[target] = raw
        return {"body": body, "title": title, "metadata": metadata}

    @staticmethod
    def _read_csv(path: Path):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise IoError(f"{path} has no header row")
            for i, row in enumerate(reader, start=2):  # header is line 1
                yield f"line {i}", dict(row)

    @staticmethod
    def _read_jsonl(path: Path):
        with open(path, encoding="utf-8") as fh:
            for i, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    yield f"line {i}", json.loads(line)
                except json.JSONDecodeError as exc:
                    yield f"line {i}", {"__parse_error__": str(exc)}

    @staticmethod
    def _read_plaintext_dir(path: Path):
        if not path.is_dir():
            raise IoError(f"{path} is not a directory")
        for p in sorted(path.glob("*.txt")):
            yield p.name, {"body": p.read_text(encoding="utf-8"), "title": p.stem}

    @staticmethod
    def _read_xml(path: Path, record_path: str | None):
        tree = ElementTree.parse(path)
        root = tree.getroot()
        tag = record_path or "doc"
        elements = root.findall(f".//{tag}") if "/" not in tag else root.findall(tag)
        for i, el in enumerate(elements, start=1):
            record: dict = {}
            for name, value in el.attrib.items():
                record[f"@{name}"] = value
            for child in el:
                record[child.tag] = (child.text or "").strip()
            if el.text and el.text.strip() and "body" not in record:
                record["body"] = el.text.strip()
            yield f"record {i}", record

    # -- collections ----------------------------------------------------------

    def create_collection(
        self,
        corpus_id: str,
        name: str,
        doc_ids: Iterable[str] | None = None,
        query: str | None = None,
        resolver: Callable[[str, str], Iterable[str]] | None = None,
        run_id: str | None = None,
    ) -> Collection:
        """Persist a frozen document set.

        Query-defined collections are materialized immediately: ``resolver``
        (typically the query engine) is called once and the resulting id set
        is frozen, so later corpus appends never change membership.
        """
        self.get_corpus(corpus_id)
        if query is not None:
            if resolver is None:
                raise ValueError("query-defined collection requires a resolver")
            ids = list(resolver(corpus_id, query))
        elif doc_ids is not None:
            ids = list(doc_ids)
        else:
            raise ValueError("definition requires either doc_ids or query")

        ids = list(dict.fromkeys(ids))
        placeholders = ",".join("?" for _ in ids) or "''"
        if ids:
            known = {
                r["id"]
                for r in self.db.query(
                    f"SELECT id FROM documents WHERE corpus_id=? AND id IN ({placeholders})",
                    (corpus_id, *ids),
                )
            }
            foreign = [d for d in ids if d not in known]
            if foreign:
                raise MembershipError(
                    f"document {foreign[0]!r} does not belong to corpus {corpus_id!r}"
                )

        coll_id = _new_id("coll")
        created = _now()
        with self.db.transaction() as db:
            db.execute(
                "INSERT INTO collections(id,corpus_id,name,query,size,created_at,run_id,seq) "
                "VALUES(?,?,?,?,?,?,?,?)",
                (coll_id, corpus_id, name, query, len(ids), created, run_id,
                 db.next_seq("collections")),
            )
            for d in ids:
                db.execute(
                    "INSERT INTO collection_members(collection_id,doc_id) VALUES(?,?)",
                    (coll_id, d),
                )
        return Collection(coll_id, corpus_id, name, query, tuple(ids), created, run_id)

    def get_collection(self, collection_id: str) -> Collection:
        rows = self.db.query("SELECT * FROM collections WHERE id=?", (collection_id,))
        if not rows:
            raise NotFound(f"collection {collection_id!r}")
        r = rows[0]
        members = self.db.query(
            "SELECT m.doc_id FROM collection_members m JOIN documents d ON d.id=m.doc_id "
            "WHERE m.collection_id=? ORDER BY d.seq",
            (collection_id,),
        )
        return Collection(
            r["id"], r["corpus_id"], r["name"], r["query"],
            tuple(m["doc_id"] for m in members), r["created_at"], r["run_id"],
        )

    def list_collections(self, corpus_id: str) -> list[Collection]:
        rows = self.db.query(
            "SELECT id FROM collections WHERE corpus_id=? ORDER BY seq DESC", (corpus_id,)
        )
        return [self.get_collection(r["id"]) for r in rows]

    def collection_documents(self, collection_id: str) -> list[Document]:
        coll = self.get_collection(collection_id)
        return [self.get_document(d) for d in coll.doc_ids]

    # -- export ---------------------------------------------------------------

    def export_jsonl(self, corpus_id: str, out_path: str | Path,
                     doc_ids: Iterable[str] | None = None) -> int:
        """Write documents as JSONL, one object per line, ISO-8601 dates."""
        docs = (
            [self.get_document(d) for d in doc_ids]
            if doc_ids is not None
            else list(self.iter_documents(corpus_id))
        )
        with open(out_path, "w", encoding="utf-8") as fh:
            for doc in docs:
                fh.write(json.dumps({
                    "id": doc.id,
                    "corpus_id": doc.corpus_id,
                    "title": doc.title,
                    "date": doc.date.isoformat() if doc.date else None,
                    "body": doc.body,
                    "metadata": json.loads(_metadata_to_json(doc.metadata)),
                }, ensure_ascii=False, sort_keys=True) + "\n")
        return len(docs)
