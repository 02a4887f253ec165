"""Inverted index snapshots.

A snapshot is immutable once published: rebuilds produce a fresh object
with a higher generation while in-flight readers keep the old one.
Index-time analysis is lowercasing plus Unicode word segmentation only;
stemming and stopword removal belong to the analysis pipelines, never to
retrieval, so that search hits stay predictable.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field

from ..nlp.tokenize import word_terms
from ..store import CorpusStore, Document


@dataclass(frozen=True)
class IndexSnapshot:
    corpus_id: str
    generation: int
    doc_ids: tuple[str, ...]                       # corpus order
    postings: dict                                 # term -> {doc_id: [positions]}
    facets: dict                                   # field -> {value: set(doc_id)}
    field_kinds: dict                              # schema field -> kind
    facetable: tuple[str, ...]
    metadata: dict                                 # doc_id -> {field: typed value}
    dates: dict                                    # doc_id -> date or None
    bodies: dict                                   # doc_id -> body text
    doc_lengths: dict = field(default_factory=dict)

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)


def build_index_from_documents(
    documents: list[Document],
    corpus_id: str,
    field_kinds: dict[str, str],
    facetable: list[str],
    generation: int = 1,
) -> IndexSnapshot:
    postings: dict[str, dict[str, list[int]]] = {}
    facets: dict[str, dict[str, set]] = {f: {} for f in facetable}
    metadata: dict[str, dict] = {}
    dates: dict[str, dt.date | None] = {}
    bodies: dict[str, str] = {}
    doc_lengths: dict[str, int] = {}
    doc_ids = []

    for doc in documents:
        doc_ids.append(doc.id)
        terms = word_terms(doc.body)
        doc_lengths[doc.id] = len(terms)
        for position, term in enumerate(terms):
            postings.setdefault(term, {}).setdefault(doc.id, []).append(position)
        metadata[doc.id] = dict(doc.metadata)
        dates[doc.id] = doc.date
        bodies[doc.id] = doc.body
        for f in facetable:
            value = doc.metadata.get(f)
            if value is not None:
                key = value.isoformat() if isinstance(value, dt.date) else str(value)
                facets[f].setdefault(key, set()).add(doc.id)

    return IndexSnapshot(
        corpus_id=corpus_id,
        generation=generation,
        doc_ids=tuple(doc_ids),
        postings=postings,
        facets=facets,
        field_kinds=field_kinds,
        facetable=tuple(facetable),
        metadata=metadata,
        dates=dates,
        bodies=bodies,
        doc_lengths=doc_lengths,
    )


def build_index(store: CorpusStore, corpus_id: str, generation: int | None = None) -> IndexSnapshot:
    """Snapshot covering every document present at the time of the call."""
    corpus = store.get_corpus(corpus_id)
    if generation is None:
        generation = store.db.next_seq(f"index-generation:{corpus_id}")
    documents = list(store.iter_documents(corpus_id))
    field_kinds = {f.name: f.kind for f in corpus.schema.fields}
    return build_index_from_documents(
        documents, corpus_id, field_kinds, corpus.schema.facetable_fields(), generation
    )
