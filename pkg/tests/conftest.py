"""Shared fixtures: workspaces, corpora and synthetic data builders."""

from __future__ import annotations

import datetime as dt

import numpy as np
import pytest

from corpus_miner.nlp.pipeline import DocumentTermMatrix, Vocabulary
from corpus_miner.store import MetadataSchema, SchemaField
from corpus_miner.workspace import Workspace


@pytest.fixture
def workspace(tmp_path):
    ws = Workspace(tmp_path / "ws", workers=2)
    yield ws
    ws.close()


def press_schema() -> MetadataSchema:
    return MetadataSchema((
        SchemaField("date", "date", required=True, facetable=True),
        SchemaField("source", "keyword", required=False, facetable=True),
        SchemaField("year", "integer", required=False, facetable=True),
        SchemaField("url", "keyword", required=False),
    ))


@pytest.fixture
def press_corpus(workspace):
    corpus = workspace.create_corpus("press", "de", press_schema())
    docs = [
        ("Klimapolitik", "1998-02-03", "spiegel",
         "Das Klima ist wichtig. Die Politik reagiert auf den Klimawandel."),
        ("Steuern", "1998-02-10", "faz",
         "Die Steuer steigt. Die Politik diskutiert die Steuer heftig."),
        ("Wirtschaft", "1998-07-01", "spiegel",
         "Die Wirtschaft wächst. Der Preis für Öl steigt weiter an."),
        ("Klima und Steuer", "1999-01-15", "taz",
         "Klima und Steuer zugleich. Eine neue Politik beginnt heute."),
    ]
    for title, date, source, body in docs:
        workspace.store.add_document(
            corpus.id, title, body,
            {"date": date, "source": source, "year": int(date[:4])},
        )
    return corpus


WORDS = [
    "climate", "policy", "politics", "tax", "economy", "growth", "energy",
    "oil", "price", "market", "summit", "treaty", "carbon", "emission",
    "industry", "labor", "wage", "minimum", "reform", "debate",
]


def synthetic_corpus(workspace, n_docs=50, seed=11, name="synthetic"):
    """Random word-salad corpus with dates and a keyword facet."""
    rng = np.random.default_rng(seed)
    corpus = workspace.create_corpus(name, "en", press_schema())
    sources = ["alpha", "beta", "gamma"]
    base = dt.date(1998, 1, 1)
    for i in range(n_docs):
        n_words = int(rng.integers(5, 30))
        words = [WORDS[int(rng.integers(0, len(WORDS)))] for _ in range(n_words)]
        body = " ".join(words) + "."
        date = base + dt.timedelta(days=int(rng.integers(0, 720)))
        workspace.store.add_document(
            corpus.id, f"doc {i}", body,
            {"date": date.isoformat(), "source": sources[i % 3], "year": date.year},
        )
    return corpus


def lda_synthetic_dtm(k=3, v=60, n_docs=500, doc_len=80, alpha=0.1, seed=42):
    """Corpus drawn from known disjoint topic-word distributions.

    Returns (dtm, phi_true). Each topic owns v/k words uniformly.
    """
    rng = np.random.default_rng(seed)
    words_per_topic = v // k
    phi_true = np.zeros((k, v))
    for topic in range(k):
        phi_true[topic, topic * words_per_topic : (topic + 1) * words_per_topic] = (
            1.0 / words_per_topic
        )
    entries = []
    dates = []
    base = dt.date(1998, 1, 1)
    for d in range(n_docs):
        theta = rng.dirichlet([alpha] * k)
        z = rng.choice(k, size=doc_len, p=theta)
        counts: dict[int, int] = {}
        for zi in z:
            w = int(rng.choice(v, p=phi_true[zi]))
            counts[w] = counts.get(w, 0) + 1
        for w in sorted(counts):
            entries.append((d, w, counts[w]))
        dates.append(base + dt.timedelta(days=d % 365))
    terms = [f"term{i:03d}" for i in range(v)]
    tf = [0] * v
    df = [0] * v
    for _, t, c in entries:
        tf[t] += c
        df[t] += 1
    dtm = DocumentTermMatrix(
        collection_id="synthetic",
        config_hash="none",
        vocabulary=Vocabulary(terms=terms, tf=tf, df=df),
        entries=entries,
        doc_ids=[f"d{i:04d}" for i in range(n_docs)],
        dates=dates,
    )
    return dtm, phi_true
