"""Hierarchical category schemes, manual annotation and intercoder agreement.

Schemes are versioned: edits create a new version and existing
annotations keep the version they were made under, so old agreement
reports stay reproducible. Agreement is unitized at document x category
level (binary coded/not coded); span-overlap coefficients are out of
scope.
"""

from __future__ import annotations

import datetime as dt
import json
import uuid
from dataclasses import dataclass, field

from .errors import EmptyInput, NotFound, SchemeError, SpanError
from .store import CorpusStore, Database

_SCHEMA_SQL = """
CREATE TABLE IF NOT EXISTS schemes (
    id         TEXT NOT NULL,
    version    INTEGER NOT NULL,
    name       TEXT NOT NULL,
    tree_json  TEXT NOT NULL,
    created_at TEXT NOT NULL,
    PRIMARY KEY (id, version)
);

CREATE TABLE IF NOT EXISTS annotations (
    id             TEXT PRIMARY KEY,
    scheme_id      TEXT NOT NULL,
    scheme_version INTEGER NOT NULL,
    doc_id         TEXT NOT NULL,
    start          INTEGER,
    end            INTEGER,
    whole_doc      INTEGER NOT NULL DEFAULT 0,
    category_id    TEXT NOT NULL,
    annotator      TEXT NOT NULL,
    created_at     TEXT NOT NULL,
    note           TEXT,
    UNIQUE (doc_id, start, end, whole_doc, category_id, annotator)
);
CREATE INDEX IF NOT EXISTS idx_annotations_doc ON annotations(doc_id);
"""


@dataclass(frozen=True)
class Category:
    id: str
    label: str
    parent: str | None = None
    color: str | None = None
    description: str = ""


@dataclass(frozen=True)
class CategoryScheme:
    id: str
    name: str
    version: int
    categories: tuple[Category, ...]

    def __post_init__(self):
        by_id = {c.id: c for c in self.categories}
        if len(by_id) != len(self.categories):
            raise SchemeError("duplicate category ids")
        siblings: dict[str | None, set[str]] = {}
        for c in self.categories:
            if c.parent is not None and c.parent not in by_id:
                raise SchemeError(f"category {c.id!r} has unknown parent {c.parent!r}")
            labels = siblings.setdefault(c.parent, set())
            if c.label in labels:
                raise SchemeError(f"duplicate sibling label {c.label!r}")
            labels.add(c.label)
        # cycle check by walking every parent chain
        for c in self.categories:
            seen = {c.id}
            p = c.parent
            while p is not None:
                if p in seen:
                    raise SchemeError(f"cycle through category {p!r}")
                seen.add(p)
                p = by_id[p].parent

    def category(self, category_id: str) -> Category:
        for c in self.categories:
            if c.id == category_id:
                return c
        raise SchemeError(f"unknown category {category_id!r}")

    def descendants(self, category_id: str) -> set[str]:
        """The category itself plus everything below it."""
        self.category(category_id)
        children: dict[str, list[str]] = {}
        for c in self.categories:
            if c.parent is not None:
                children.setdefault(c.parent, []).append(c.id)
        out = set()
        stack = [category_id]
        while stack:
            current = stack.pop()
            out.add(current)
            stack.extend(children.get(current, []))
        return out

    def path(self, category_id: str) -> str:
        """Slash-joined label path from root to the category."""
        by_id = {c.id: c for c in self.categories}
        parts = []
        current: str | None = category_id
        while current is not None:
            c = by_id.get(current)
            if c is None:
                raise SchemeError(f"unknown category {category_id!r}")
            parts.append(c.label)
            current = c.parent
        return "/".join(reversed(parts))

    def to_dict(self) -> dict:
        return {
            "id": self.id, "name": self.name, "version": self.version,
            "categories": [
                {"id": c.id, "label": c.label, "parent": c.parent,
                 "color": c.color, "description": c.description}
                for c in self.categories
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CategoryScheme":
        return cls(
            id=data["id"], name=data["name"], version=int(data["version"]),
            categories=tuple(
                Category(
                    id=c["id"], label=c["label"], parent=c.get("parent"),
                    color=c.get("color"), description=c.get("description", ""),
                )
                for c in data["categories"]
            ),
        )


@dataclass(frozen=True)
class Annotation:
    id: str
    scheme_id: str
    scheme_version: int
    doc_id: str
    start: int | None
    end: int | None
    whole_doc: bool
    category_id: str
    annotator: str
    created_at: str
    note: str | None = None

    def to_dict(self, scheme: CategoryScheme | None = None) -> dict:
        out = {
            "id": self.id,
            "scheme_id": self.scheme_id,
            "scheme_version": self.scheme_version,
            "doc_id": self.doc_id,
            "start": self.start,
            "end": self.end,
            "whole_doc": self.whole_doc,
            "category_id": self.category_id,
            "annotator": self.annotator,
            "created_at": self.created_at,
            "note": self.note,
        }
        if scheme is not None:
            out["category_path"] = scheme.path(self.category_id)
        return out


@dataclass
class AgreementReport:
    annotator_a: str
    annotator_b: str
    n_units: int
    per_category: dict[str, dict]
    percent_agreement: float
    kappa: float | None
    kappa_note: str | None = None

    def to_dict(self) -> dict:
        return {
            "annotator_a": self.annotator_a,
            "annotator_b": self.annotator_b,
            "n_units": self.n_units,
            "per_category": self.per_category,
            "percent_agreement": self.percent_agreement,
            "kappa": self.kappa,
            "kappa_note": self.kappa_note,
        }


def kappa_from_table(both: int, a_only: int, b_only: int, neither: int) -> tuple[float, float | None, str | None]:
    """(percent agreement, kappa or None, note) from a 2x2 coded table."""
    n = both + a_only + b_only + neither
    if n == 0:
        return 0.0, None, "no units"
    p_o = (both + neither) / n
    p_a = (both + a_only) / n
    p_b = (both + b_only) / n
    p_e = p_a * p_b + (1 - p_a) * (1 - p_b)
    if p_e >= 1.0:
        return p_o, None, "degenerate marginals: expected agreement is 1"
    return p_o, (p_o - p_e) / (1 - p_e), None


class AnnotationStore:
    def __init__(self, db: Database, corpus_store: CorpusStore):
        self.db = db
        self.corpus_store = corpus_store
        db.executescript(_SCHEMA_SQL)

    # -- schemes -------------------------------------------------------------

    def define_scheme(self, name: str, categories: list[dict],
                      scheme_id: str | None = None) -> CategoryScheme:
        """Create version 1 of a scheme, or a new version of an existing id."""
        version = 1
        if scheme_id is None:
            scheme_id = f"scheme-{uuid.uuid4().hex[:12]}"
        else:
            rows = self.db.query(
                "SELECT MAX(version) AS v FROM schemes WHERE id=?", (scheme_id,)
            )
            if rows and rows[0]["v"] is not None:
                version = rows[0]["v"] + 1
        cats = tuple(
            Category(
                id=c.get("id") or f"cat-{uuid.uuid4().hex[:8]}",
                label=c["label"],
                parent=c.get("parent"),
                color=c.get("color"),
                description=c.get("description", ""),
            )
            for c in categories
        )
        scheme = CategoryScheme(id=scheme_id, name=name, version=version, categories=cats)
        with self.db.transaction() as db:
            db.execute(
                "INSERT INTO schemes(id,version,name,tree_json,created_at) VALUES(?,?,?,?,?)",
                (scheme.id, version, name, json.dumps(scheme.to_dict()),
                 dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")),
            )
        return scheme

    def get_scheme(self, scheme_id: str, version: int | None = None) -> CategoryScheme:
        if version is None:
            rows = self.db.query(
                "SELECT tree_json FROM schemes WHERE id=? ORDER BY version DESC LIMIT 1",
                (scheme_id,),
            )
        else:
            rows = self.db.query(
                "SELECT tree_json FROM schemes WHERE id=? AND version=?",
                (scheme_id, version),
            )
        if not rows:
            raise NotFound(f"scheme {scheme_id!r}")
        return CategoryScheme.from_dict(json.loads(rows[0]["tree_json"]))

    def list_schemes(self) -> list[CategoryScheme]:
        rows = self.db.query(
            "SELECT id, MAX(version) AS v FROM schemes GROUP BY id ORDER BY id"
        )
        return [self.get_scheme(r["id"], r["v"]) for r in rows]

    # -- annotations -----------------------------------------------------------

    def annotate(
        self,
        doc_id: str,
        category_id: str,
        annotator: str,
        scheme_id: str,
        span: tuple[int, int] | None = None,
        note: str | None = None,
    ) -> Annotation:
        """Store one annotation; identical repeats return the existing row."""
        scheme = self.get_scheme(scheme_id)
        scheme.category(category_id)  # raises SchemeError when unknown
        doc = self.corpus_store.get_document(doc_id)
        whole_doc = span is None
        start = end = None
        if span is not None:
            start, end = span
            if start < 0 or end > len(doc.body) or start >= end:
                raise SpanError(
                    f"span ({start}, {end}) outside document bounds 0..{len(doc.body)}"
                )
        existing = self.db.query(
            "SELECT id FROM annotations WHERE doc_id=? AND start IS ? AND end IS ? "
            "AND whole_doc=? AND category_id=? AND annotator=?",
            (doc_id, start, end, int(whole_doc), category_id, annotator),
        )
        if existing:
            return self.get_annotation(existing[0]["id"])
        ann_id = f"ann-{uuid.uuid4().hex[:12]}"
        created = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
        with self.db.transaction() as db:
            db.execute(
                "INSERT INTO annotations(id,scheme_id,scheme_version,doc_id,start,end,"
                "whole_doc,category_id,annotator,created_at,note) VALUES(?,?,?,?,?,?,?,?,?,?,?)",
                (ann_id, scheme.id, scheme.version, doc_id, start, end,
                 int(whole_doc), category_id, annotator, created, note),
            )
        return self.get_annotation(ann_id)

    def get_annotation(self, ann_id: str) -> Annotation:
        rows = self.db.query("SELECT * FROM annotations WHERE id=?", (ann_id,))
        if not rows:
            raise NotFound(f"annotation {ann_id!r}")
        return self._row_to_annotation(rows[0])

    @staticmethod
    def _row_to_annotation(r) -> Annotation:
        return Annotation(
            id=r["id"], scheme_id=r["scheme_id"], scheme_version=r["scheme_version"],
            doc_id=r["doc_id"], start=r["start"], end=r["end"],
            whole_doc=bool(r["whole_doc"]), category_id=r["category_id"],
            annotator=r["annotator"], created_at=r["created_at"], note=r["note"],
        )

    def annotations_for(
        self,
        doc_ids: list[str] | None = None,
        annotator: str | None = None,
        scheme_id: str | None = None,
    ) -> list[Annotation]:
        sql = "SELECT * FROM annotations WHERE 1=1"
        params: list = []
        if doc_ids is not None:
            sql += f" AND doc_id IN ({','.join('?' for _ in doc_ids)})"
            params.extend(doc_ids)
        if annotator is not None:
            sql += " AND annotator=?"
            params.append(annotator)
        if scheme_id is not None:
            sql += " AND scheme_id=?"
            params.append(scheme_id)
        sql += " ORDER BY created_at, id"
        return [self._row_to_annotation(r) for r in self.db.query(sql, tuple(params))]

    # -- agreement ---------------------------------------------------------------

    def agreement(
        self,
        scheme_id: str,
        doc_ids: list[str],
        annotator_a: str,
        annotator_b: str,
    ) -> AgreementReport:
        """Document-level binary agreement per category, plus pooled kappa."""
        scheme = self.get_scheme(scheme_id)
        anns = self.annotations_for(doc_ids=doc_ids, scheme_id=scheme_id)
        coded: dict[str, set[tuple[str, str]]] = {annotator_a: set(), annotator_b: set()}
        for ann in anns:
            if ann.annotator in coded:
                coded[ann.annotator].add((ann.doc_id, ann.category_id))
        if not coded[annotator_a] or not coded[annotator_b]:
            raise EmptyInput("both annotators must have coded at least one document in the set")

        per_category: dict[str, dict] = {}
        pooled = [0, 0, 0, 0]  # both, a_only, b_only, neither
        for cat in scheme.categories:
            table = [0, 0, 0, 0]
            for doc_id in doc_ids:
                a = (doc_id, cat.id) in coded[annotator_a]
                b = (doc_id, cat.id) in coded[annotator_b]
                idx = 0 if (a and b) else 1 if a else 2 if b else 3
                table[idx] += 1
                pooled[idx] += 1
            p_o, kappa, note = kappa_from_table(*table)
            per_category[cat.id] = {
                "label": cat.label,
                "table": {"both": table[0], "a_only": table[1],
                          "b_only": table[2], "neither": table[3]},
                "percent_agreement": p_o,
                "kappa": kappa,
                "note": note,
            }
        p_o, kappa, note = kappa_from_table(*pooled)
        return AgreementReport(
            annotator_a=annotator_a,
            annotator_b=annotator_b,
            n_units=sum(pooled),
            per_category=per_category,
            percent_agreement=p_o,
            kappa=kappa,
            kappa_note=note,
        )

    # -- export / import ------------------------------------------------------

    EXPORT_COLUMNS = ("doc_id", "start", "end", "category_path", "annotator",
                      "created_at", "note")

    def export_annotations(self, doc_ids: list[str], path, format: str = "csv") -> int:
        anns = self.annotations_for(doc_ids=doc_ids)
        schemes = {a.scheme_id: self.get_scheme(a.scheme_id, a.scheme_version) for a in anns}
        if format == "csv":
            import csv as _csv
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = _csv.writer(fh)
                writer.writerow(self.EXPORT_COLUMNS)
                for a in anns:
                    writer.writerow([
                        a.doc_id,
                        "" if a.start is None else a.start,
                        "" if a.end is None else a.end,
                        schemes[a.scheme_id].path(a.category_id),
                        a.annotator, a.created_at, a.note or "",
                    ])
        elif format == "json":
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(
                    [a.to_dict(schemes[a.scheme_id]) for a in anns],
                    fh, indent=2, ensure_ascii=False,
                )
        else:
            raise ValueError(f"unknown export format {format!r}")
        return len(anns)

    def import_annotations(self, path) -> list[Annotation]:
        """Restore annotations from a JSON export (idempotent per unique key)."""
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        out = []
        for record in data:
            span = None
            if not record.get("whole_doc", record.get("start") is None):
                span = (record["start"], record["end"])
            out.append(self.annotate(
                doc_id=record["doc_id"],
                category_id=record["category_id"],
                annotator=record["annotator"],
                scheme_id=record["scheme_id"],
                span=span,
                note=record.get("note"),
            ))
        return out
