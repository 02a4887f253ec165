"""Configured preprocessing from raw documents to sparse term matrices.

Steps always run in one fixed order regardless of how the config lists
them: sentence segmentation, multi-word merge, entity merge, lowercase,
stopword removal, lemmatization or stemming, n-grams, counting, pruning.
A config hashes canonically, and equal (collection, config) inputs yield
bit-identical matrices.
"""

from __future__ import annotations

import datetime as dt
import logging
from dataclasses import dataclass, field

from ..errors import ConfigError, EmptyVocabulary
from ..hashing import content_hash
from .mwe import detect_mwe, merge_mwes
from .ner import AnnotationLayer, gazetteer_ner
from .resources import Resources
from .segment import paragraph_ranges, segment_sentences
from .stem import stemmer_for
from .tokenize import Token, tokenize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MweConfig:
    llr_threshold: float = 10.83  # chi-square(1) critical value at 99.9%
    max_len: int = 3


@dataclass(frozen=True)
class NgramConfig:
    n: int = 2
    mode: str = "append"  # append = unigrams + n-grams, replace = n-grams only


@dataclass(frozen=True)
class PruningConfig:
    min_count: int = 0
    min_df_rel: float = 0.0
    max_df_rel: float = 1.0


@dataclass(frozen=True)
class PipelineConfig:
    language: str = "en"
    sentence_segmentation: bool = True
    mwe: MweConfig | None = None
    gazetteer: str | None = None
    lowercase: bool = True
    stopwords: str | None = None
    stemming: str | None = None
    lemmatization: str | None = None
    ngram: NgramConfig | None = None
    pruning: PruningConfig = field(default_factory=PruningConfig)
    seed: int = 0

    def __post_init__(self):
        p = self.pruning
        if p.min_count < 0:
            raise ConfigError("pruning.min_count must be >= 0")
        if not (0.0 <= p.min_df_rel <= 1.0) or not (0.0 < p.max_df_rel <= 1.0):
            raise ConfigError("pruning df bounds must lie in [0,1]")
        if p.min_df_rel > p.max_df_rel:
            raise ConfigError("pruning.min_df_rel must not exceed max_df_rel")
        if self.ngram is not None:
            if self.ngram.n not in (1, 2, 3):
                raise ConfigError("ngram.n must be 1, 2 or 3")
            if self.ngram.mode not in ("append", "replace"):
                raise ConfigError("ngram.mode must be 'append' or 'replace'")
        if self.stemming is not None and self.lemmatization is not None:
            logger.warning(
                "both stemming and lemmatization configured; lemmatization wins"
            )

    def to_dict(self) -> dict:
        return {
            "language": self.language,
            "sentence_segmentation": self.sentence_segmentation,
            "mwe": None if self.mwe is None else {
                "llr_threshold": self.mwe.llr_threshold, "max_len": self.mwe.max_len,
            },
            "gazetteer": self.gazetteer,
            "lowercase": self.lowercase,
            "stopwords": self.stopwords,
            "stemming": self.stemming,
            "lemmatization": self.lemmatization,
            "ngram": None if self.ngram is None else {
                "n": self.ngram.n, "mode": self.ngram.mode,
            },
            "pruning": {
                "min_count": self.pruning.min_count,
                "min_df_rel": self.pruning.min_df_rel,
                "max_df_rel": self.pruning.max_df_rel,
            },
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        mwe = data.get("mwe")
        ngram = data.get("ngram")
        pruning = data.get("pruning") or {}
        return cls(
            language=data.get("language", "en"),
            sentence_segmentation=bool(data.get("sentence_segmentation", True)),
            mwe=None if not mwe else MweConfig(
                llr_threshold=float(mwe.get("llr_threshold", 10.83)),
                max_len=int(mwe.get("max_len", 3)),
            ),
            gazetteer=data.get("gazetteer"),
            lowercase=bool(data.get("lowercase", True)),
            stopwords=data.get("stopwords"),
            stemming=data.get("stemming"),
            lemmatization=data.get("lemmatization"),
            ngram=None if not ngram else NgramConfig(
                n=int(ngram.get("n", 2)), mode=ngram.get("mode", "append"),
            ),
            pruning=PruningConfig(
                min_count=int(pruning.get("min_count", 0)),
                min_df_rel=float(pruning.get("min_df_rel", 0.0)),
                max_df_rel=float(pruning.get("max_df_rel", 1.0)),
            ),
            seed=int(data.get("seed", 0)),
        )

    @property
    def hash(self) -> str:
        return content_hash(self.to_dict())


@dataclass(frozen=True)
class ProcToken:
    """One countable term after all normalization steps."""

    term: str
    surface: str
    sentence: int
    paragraph: int
    position: int
    start: int
    end: int
    entity: str | None = None


@dataclass
class ProcessedDocument:
    doc_id: str
    date: dt.date | None
    tokens: list[ProcToken]

    def sentences(self) -> list[list[ProcToken]]:
        out: dict[int, list[ProcToken]] = {}
        for t in self.tokens:
            out.setdefault(t.sentence, []).append(t)
        return [out[k] for k in sorted(out)]

    def paragraphs(self) -> list[list[ProcToken]]:
        out: dict[int, list[ProcToken]] = {}
        for t in self.tokens:
            out.setdefault(t.paragraph, []).append(t)
        return [out[k] for k in sorted(out)]


@dataclass
class Vocabulary:
    terms: list[str]
    tf: list[int]
    df: list[int]
    index: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def id_of(self, term: str) -> int | None:
        return self.index.get(term)


@dataclass
class DocumentTermMatrix:
    collection_id: str
    config_hash: str
    vocabulary: Vocabulary
    entries: list[tuple[int, int, int]]  # (doc index, term id, count), count > 0
    doc_ids: list[str]
    dates: list[dt.date | None]

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def n_terms(self) -> int:
        return len(self.vocabulary)

    def doc_vectors(self) -> list[dict[int, int]]:
        vecs: list[dict[int, int]] = [dict() for _ in self.doc_ids]
        for d, t, c in self.entries:
            vecs[d][t] = c
        return vecs

    def doc_lengths(self) -> list[int]:
        lengths = [0] * self.n_docs
        for d, _, c in self.entries:
            lengths[d] += c
        return lengths

    @property
    def total_tokens(self) -> int:
        return sum(c for _, _, c in self.entries)

    @property
    def hash(self) -> str:
        """Equals the content hash of to_payload(), so a stored matrix and
        its in-memory object share one identity."""
        return content_hash(self.to_payload())

    def to_payload(self) -> dict:
        return {
            "kind": "dtm",
            "collection_id": self.collection_id,
            "config_hash": self.config_hash,
            "terms": list(self.vocabulary.terms),
            "tf": list(self.vocabulary.tf),
            "df": list(self.vocabulary.df),
            "entries": [[d, t, c] for d, t, c in self.entries],
            "doc_ids": list(self.doc_ids),
            "dates": [d.isoformat() if d else None for d in self.dates],
        }

    @classmethod
    def from_payload(cls, data: dict) -> "DocumentTermMatrix":
        return cls(
            collection_id=data["collection_id"],
            config_hash=data["config_hash"],
            vocabulary=Vocabulary(
                terms=list(data["terms"]), tf=list(data["tf"]), df=list(data["df"]),
            ),
            entries=[(d, t, c) for d, t, c in data["entries"]],
            doc_ids=list(data["doc_ids"]),
            dates=[dt.date.fromisoformat(x) if x else None for x in data["dates"]],
        )

    def export_triplets(self, matrix_path, vocab_path) -> None:
        """Triplet text (doc term count per line) plus vocabulary CSV."""
        with open(matrix_path, "w", encoding="utf-8") as fh:
            fh.write(f"%% {self.n_docs} {self.n_terms} {len(self.entries)}\n")
            for d, t, c in self.entries:
                fh.write(f"{d} {t} {c}\n")
        with open(vocab_path, "w", encoding="utf-8") as fh:
            fh.write("term,id,tf,df\n")
            for i, term in enumerate(self.vocabulary.terms):
                safe = term.replace('"', '""')
                fh.write(f'"{safe}",{i},{self.vocabulary.tf[i]},{self.vocabulary.df[i]}\n')


# ---------------------------------------------------------------------------
# Processing
# ---------------------------------------------------------------------------

def _word_streams_per_sentence(docs) -> list[list[str]]:
    streams = []
    for tokens in docs:
        current: list[str] = []
        last_sentence = None
        for t in tokens:
            if t.is_punct:
                continue
            if last_sentence is not None and t.sentence != last_sentence:
                streams.append(current)
                current = []
            current.append(t.surface)
            last_sentence = t.sentence
        if current:
            streams.append(current)
    return streams


def process_collection(
    documents,
    config: PipelineConfig,
    resources: Resources | None = None,
    annotation_layers: dict[str, AnnotationLayer] | None = None,
) -> list[ProcessedDocument]:
    """Run every step before counting; returns one token stream per document.

    ``documents`` is any iterable of objects with id, date and body
    attributes. Steps are pure functions of (documents, config, resources),
    so the result is deterministic for a fixed config hash.
    """
    resources = resources or Resources()
    annotation_layers = annotation_layers or {}
    docs = sorted(documents, key=lambda d: d.id)

    abbreviations = resources.abbreviations(config.language)
    stop = resources.stopwords(config.stopwords) if config.stopwords else frozenset()
    lemma_table: dict[str, str] = {}
    if config.lemmatization and config.lemmatization != "imported":
        lemma_table = resources.lemma_dictionary(config.lemmatization)
    stem = stemmer_for(config.stemming) if config.stemming else None
    gazetteer = resources.gazetteer(config.gazetteer) if config.gazetteer else None

    # tokenize everything first; MWE detection needs the whole collection
    tokenized: list[tuple[object, list[Token], list[tuple[int, int]]]] = []
    for doc in docs:
        paragraphs = paragraph_ranges(doc.body)
        sentences = (
            segment_sentences(doc.body, abbreviations)
            if config.sentence_segmentation
            else [(0, len(doc.body))]
        )
        tokens = tokenize(doc.body, sentence_ranges=sentences)
        tokenized.append((doc, tokens, paragraphs))

    mwes: list[tuple[tuple[str, ...], float]] = []
    if config.mwe is not None:
        streams = _word_streams_per_sentence([t for _, t, _ in tokenized])
        if any(streams):
            mwes = detect_mwe(streams, config.mwe.llr_threshold, config.mwe.max_len)

    processed: list[ProcessedDocument] = []
    for doc, tokens, paragraphs in tokenized:
        words = [t for t in tokens if not t.is_punct]

        groups = merge_mwes(words, mwes, key=lambda t: t.surface) if mwes else [[t] for t in words]

        if gazetteer:
            groups = _merge_entities(groups, gazetteer)

        layer = annotation_layers.get(doc.id)
        out: list[ProcToken] = []
        for group in groups:
            entity = None
            if isinstance(group, tuple):  # (tokens, entity type, canonical)
                members, entity, canonical = group
                term = canonical
                surface = " ".join(t.surface for t in members)
            else:
                members = group
                surface = " ".join(t.surface for t in members)
                term = "_".join(t.surface for t in members) if len(members) > 1 else members[0].surface

            if config.lowercase and entity is None:
                term = term.lower()

            if stop and term in stop:
                continue

            if config.lemmatization is not None:
                if config.lemmatization == "imported":
                    if layer is not None and len(members) == 1:
                        term = layer.lemmas.get(members[0].position) or term
                        if config.lowercase and entity is None:
                            term = term.lower()
                else:
                    term = lemma_table.get(term, term)
            elif stem is not None and entity is None and len(members) == 1:
                term = stem(term)

            first, last = members[0], members[-1]
            out.append(ProcToken(
                term=term,
                surface=surface,
                sentence=first.sentence,
                paragraph=_paragraph_of(paragraphs, first.start),
                position=len(out),
                start=first.start,
                end=last.end,
                entity=entity,
            ))

        if config.ngram is not None:
            out = _apply_ngrams(out, config.ngram)

        processed.append(ProcessedDocument(doc_id=doc.id, date=doc.date, tokens=out))
    return processed


def _paragraph_of(ranges: list[tuple[int, int]], offset: int) -> int:
    for i, (s, e) in enumerate(ranges):
        if s <= offset < e:
            return i
    return max(0, len(ranges) - 1)


def _merge_entities(groups, gazetteer):
    """Longest-match entity merge over already-grouped tokens.

    A span is applied only when it covers whole groups, so a multi-word
    expression is never split in half by an overlapping gazetteer entry.
    """
    flat: list[Token] = []
    group_of: list[int] = []
    for gi, g in enumerate(groups):
        members = g[0] if isinstance(g, tuple) else g
        flat.extend(members)
        group_of.extend([gi] * len(members))
    spans = gazetteer_ner(flat, gazetteer)
    group_start: dict[int, int] = {}
    group_end: dict[int, int] = {}
    for fi, gi in enumerate(group_of):
        group_start.setdefault(gi, fi)
        group_end[gi] = fi
    span_at: dict[int, tuple] = {}
    for s in spans:
        gi0 = group_of[s.start_token]
        gi1 = group_of[s.end_token - 1]
        if group_start[gi0] == s.start_token and group_end[gi1] == s.end_token - 1:
            span_at[gi0] = (s, gi1)
    merged = []
    gi = 0
    while gi < len(groups):
        hit = span_at.get(gi)
        if hit is not None:
            s, gi1 = hit
            merged.append((flat[s.start_token : s.end_token], s.type, s.canonical))
            gi = gi1 + 1
        else:
            merged.append(groups[gi])
            gi += 1
    return merged


def _apply_ngrams(tokens: list[ProcToken], cfg: NgramConfig) -> list[ProcToken]:
    if cfg.n == 1:
        return tokens
    grams: list[ProcToken] = []
    by_sentence: dict[int, list[ProcToken]] = {}
    for t in tokens:
        by_sentence.setdefault(t.sentence, []).append(t)
    for sent in sorted(by_sentence):
        run = by_sentence[sent]
        for i in range(len(run) - cfg.n + 1):
            window = run[i : i + cfg.n]
            grams.append(ProcToken(
                term="_".join(w.term for w in window),
                surface=" ".join(w.surface for w in window),
                sentence=sent,
                paragraph=window[0].paragraph,
                position=0,
                start=window[0].start,
                end=window[-1].end,
            ))
    combined = tokens + grams if cfg.mode == "append" else grams
    combined.sort(key=lambda t: (t.start, t.end))
    return [
        ProcToken(t.term, t.surface, t.sentence, t.paragraph, i, t.start, t.end, t.entity)
        for i, t in enumerate(combined)
    ]


def build_dtm(
    documents,
    config: PipelineConfig,
    resources: Resources | None = None,
    collection_id: str = "",
    annotation_layers: dict[str, AnnotationLayer] | None = None,
    processed: list[ProcessedDocument] | None = None,
) -> DocumentTermMatrix:
    """Count processed terms into a sparse matrix and prune the vocabulary."""
    if processed is None:
        processed = process_collection(documents, config, resources, annotation_layers)

    counts: list[dict[str, int]] = []
    for pdoc in processed:
        c: dict[str, int] = {}
        for t in pdoc.tokens:
            c[t.term] = c.get(t.term, 0) + 1
        counts.append(c)

    tf: dict[str, int] = {}
    df: dict[str, int] = {}
    for c in counts:
        for term, k in c.items():
            tf[term] = tf.get(term, 0) + k
            df[term] = df.get(term, 0) + 1

    n_docs = len(processed)
    p = config.pruning
    kept = sorted(
        term for term in tf
        if tf[term] >= p.min_count
        and (df[term] / n_docs) >= p.min_df_rel
        and (df[term] / n_docs) <= p.max_df_rel
    )
    if not kept:
        raise EmptyVocabulary("pruning removed every term")

    vocab = Vocabulary(
        terms=kept,
        tf=[tf[t] for t in kept],
        df=[df[t] for t in kept],
    )
    entries: list[tuple[int, int, int]] = []
    for d, c in enumerate(counts):
        for term in sorted(c):
            tid = vocab.id_of(term)
            if tid is not None:
                entries.append((d, tid, c[term]))

    return DocumentTermMatrix(
        collection_id=collection_id,
        config_hash=config.hash,
        vocabulary=vocab,
        entries=entries,
        doc_ids=[p_.doc_id for p_ in processed],
        dates=[p_.date for p_ in processed],
    )
