"""Lexicometric statistics over term matrices and token streams.

Significance scoring uses Dunning's G squared log-likelihood ratio;
Dice and pointwise mutual information (base-2) are offered alongside so
results can be compared across measures. Context volatility is a
rank-based measure of how much a term's co-occurrence profile moves
between consecutive time slices.
"""

from __future__ import annotations

import datetime as dt
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable

from .errors import DomainError, EmptyInput, FieldError, InsufficientData

if TYPE_CHECKING:  # pragma: no cover
    from .nlp.pipeline import DocumentTermMatrix, ProcessedDocument

logger = logging.getLogger(__name__)

GRANULARITIES = ("day", "month", "year")
NORMALIZATIONS = ("absolute", "per_document", "per_token")
COOC_MEASURES = ("llr", "dice", "pmi", "raw")


# ---------------------------------------------------------------------------
# Time bucketing
# ---------------------------------------------------------------------------

def bucket_start(date: dt.date, granularity: str) -> dt.date:
    if granularity == "day":
        return date
    if granularity == "month":
        return date.replace(day=1)
    if granularity == "year":
        return date.replace(month=1, day=1)
    raise ValueError(f"unknown granularity {granularity!r}")


def next_bucket(bucket: dt.date, granularity: str) -> dt.date:
    if granularity == "day":
        return bucket + dt.timedelta(days=1)
    if granularity == "month":
        if bucket.month == 12:
            return bucket.replace(year=bucket.year + 1, month=1)
        return bucket.replace(month=bucket.month + 1)
    return bucket.replace(year=bucket.year + 1)


def bucket_span(lo: dt.date, hi: dt.date, granularity: str) -> list[dt.date]:
    """All contiguous buckets from lo to hi inclusive."""
    buckets = []
    b = bucket_start(lo, granularity)
    last = bucket_start(hi, granularity)
    while b <= last:
        buckets.append(b)
        b = next_bucket(b, granularity)
    return buckets


@dataclass
class TimeSeries:
    granularity: str
    points: list[tuple[dt.date, float]]
    normalization: str = "absolute"
    label: str = ""

    def values(self) -> list[float]:
        return [v for _, v in self.points]

    def to_rows(self) -> list[dict]:
        return [
            {"bucket": b.isoformat(), "value": v, "label": self.label}
            for b, v in self.points
        ]


@dataclass
class Dictionary:
    """Named groups of terms representing related concepts."""

    name: str
    concepts: dict[str, set[str]]

    def __post_init__(self):
        for concept, terms in self.concepts.items():
            if not terms:
                raise ValueError(f"concept {concept!r} has no terms")


# ---------------------------------------------------------------------------
# Shared significance primitive
# ---------------------------------------------------------------------------

def llr(k11: float, k12: float, k21: float, k22: float) -> float:
    """Dunning's G squared over a 2x2 contingency table.

    G2 = 2 * sum k_ij * ln(k_ij * N / (R_i * C_j)) with 0*ln(0) := 0.
    Clamped at zero to absorb negative rounding residue.
    """
    for k in (k11, k12, k21, k22):
        if k < 0:
            raise DomainError(f"negative count {k}")
    n = k11 + k12 + k21 + k22
    if n <= 0:
        raise DomainError("empty table")
    r1, r2 = k11 + k12, k21 + k22
    c1, c2 = k11 + k21, k12 + k22
    total = 0.0
    for k, r, c in ((k11, r1, c1), (k12, r1, c2), (k21, r2, c1), (k22, r2, c2)):
        if k > 0:
            total += k * math.log(k * n / (r * c))
    return max(2.0 * total, 0.0)


def dice(k11: float, k12: float, k21: float) -> float:
    denom = (k11 + k12) + (k11 + k21)
    return 2.0 * k11 / denom if denom > 0 else 0.0


def pmi(k11: float, k12: float, k21: float, n: float) -> float:
    """Base-2 pointwise mutual information; defined only for k11 > 0."""
    if k11 <= 0:
        raise DomainError("pmi undefined for zero joint count")
    return math.log2(k11 * n / ((k11 + k12) * (k11 + k21)))


# ---------------------------------------------------------------------------
# Frequency time series
# ---------------------------------------------------------------------------

def _require_dates(dates: list[dt.date | None]) -> list[dt.date]:
    known = [d for d in dates if d is not None]
    if not known:
        raise FieldError("collection has no document dates")
    return known


def term_frequencies(
    dtm: "DocumentTermMatrix",
    terms: list[str],
    granularity: str = "month",
    normalization: str = "absolute",
) -> dict[str, TimeSeries]:
    """Per-term counts over publication-date buckets.

    absolute: raw counts. per_document: counts divided by documents in the
    bucket. per_token: counts divided by tokens in the bucket. Terms not in
    the vocabulary yield an all-zero series and a warning.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"unknown granularity {granularity!r}")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    known = _require_dates(dtm.dates)
    buckets = bucket_span(min(known), max(known), granularity)
    bucket_index = {b: i for i, b in enumerate(buckets)}

    doc_bucket = [
        bucket_index[bucket_start(d, granularity)] if d is not None else None
        for d in dtm.dates
    ]
    docs_per_bucket = [0.0] * len(buckets)
    tokens_per_bucket = [0.0] * len(buckets)
    for d, b in enumerate(doc_bucket):
        if b is not None:
            docs_per_bucket[b] += 1
    for d, _, c in dtm.entries:
        b = doc_bucket[d]
        if b is not None:
            tokens_per_bucket[b] += c

    result: dict[str, TimeSeries] = {}
    vectors_by_term: dict[int, list[float]] = {}
    wanted_ids = {}
    for term in terms:
        tid = dtm.vocabulary.id_of(term)
        if tid is None:
            logger.warning("term %r not in vocabulary; zero series returned", term)
        else:
            wanted_ids[tid] = term
            vectors_by_term[tid] = [0.0] * len(buckets)
    for d, t, c in dtm.entries:
        if t in vectors_by_term and doc_bucket[d] is not None:
            vectors_by_term[t][doc_bucket[d]] += c

    for term in terms:
        tid = dtm.vocabulary.id_of(term)
        raw = vectors_by_term.get(tid, [0.0] * len(buckets)) if tid is not None else [0.0] * len(buckets)
        values = list(raw)
        if normalization == "per_document":
            values = [v / docs_per_bucket[i] if docs_per_bucket[i] else 0.0 for i, v in enumerate(values)]
        elif normalization == "per_token":
            values = [v / tokens_per_bucket[i] if tokens_per_bucket[i] else 0.0 for i, v in enumerate(values)]
        result[term] = TimeSeries(
            granularity=granularity,
            points=list(zip(buckets, values)),
            normalization=normalization,
            label=term,
        )
    return result


def dictionary_analysis(
    dtm: "DocumentTermMatrix",
    dictionary: Dictionary,
    granularity: str = "month",
    normalization: str = "absolute",
) -> dict[str, TimeSeries]:
    """Concept series as the pointwise sum of member-term series."""
    out: dict[str, TimeSeries] = {}
    for concept, members in dictionary.concepts.items():
        member_series = term_frequencies(dtm, sorted(members), granularity, normalization)
        known = [s for s in member_series.values()]
        if all(all(v == 0.0 for v in s.values()) for s in known):
            logger.warning("concept %r has no member in the vocabulary", concept)
        buckets = known[0].points
        summed = [0.0] * len(buckets)
        for s in known:
            for i, (_, v) in enumerate(s.points):
                summed[i] += v
        out[concept] = TimeSeries(
            granularity=granularity,
            points=[(b, summed[i]) for i, (b, _) in enumerate(buckets)],
            normalization=normalization,
            label=concept,
        )
    return out


# ---------------------------------------------------------------------------
# Co-occurrence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoocConfig:
    unit: str = "sentence"  # sentence | paragraph | document | window
    n_left: int = 0
    n_right: int = 0
    ordered: bool = False
    measure: str = "llr"
    min_joint: int = 2


@dataclass
class CooccurrenceResult:
    config: CoocConfig
    n_units: int
    marginals: dict[str, int]
    pairs: list[tuple[str, str, int, float]]  # (a, b, joint, score)

    def to_rows(self) -> list[dict]:
        return [
            {"term_a": a, "term_b": b, "joint": j, "score": s}
            for a, b, j, s in self.pairs
        ]


def collection_units(processed: Iterable["ProcessedDocument"], config: CoocConfig) -> list[list[str]]:
    """Contextual units as term lists, per the configured unit type.

    For the window unit, every token position forms one unit spanning
    n_left tokens before and n_right after it (document bounds clipped).
    """
    units: list[list[str]] = []
    for doc in processed:
        if config.unit == "sentence":
            units.extend([[t.term for t in s] for s in doc.sentences()])
        elif config.unit == "paragraph":
            units.extend([[t.term for t in p] for p in doc.paragraphs()])
        elif config.unit == "document":
            units.append([t.term for t in doc.tokens])
        elif config.unit == "window":
            terms = [t.term for t in doc.tokens]
            for i in range(len(terms)):
                lo = max(0, i - config.n_left)
                hi = min(len(terms), i + config.n_right + 1)
                units.append(terms[lo:hi])
        else:
            raise ValueError(f"unknown unit {config.unit!r}")
    return units


def cooccurrences_from_units(units: list[list[str]], config: CoocConfig) -> CooccurrenceResult:
    if not units:
        raise EmptyInput("no contextual units")
    if config.unit == "window" and config.n_left + config.n_right < 1:
        raise ValueError("window unit requires n_left + n_right >= 1")
    if config.measure not in COOC_MEASURES:
        raise ValueError(f"unknown measure {config.measure!r}")

    n = len(units)
    marginals: Counter = Counter()
    joint: Counter = Counter()
    for unit in units:
        present = sorted(set(unit))
        for term in present:
            marginals[term] += 1
        if config.ordered:
            # the unit counts once per pair, oriented by first occurrence,
            # so unordered joints are the exact sum of both orientations
            firsts: dict[str, int] = {}
            for i, term in enumerate(unit):
                if term not in firsts:
                    firsts[term] = i
            for i, a in enumerate(present):
                for b in present[i + 1 :]:
                    if firsts[a] < firsts[b]:
                        joint[(a, b)] += 1
                    else:
                        joint[(b, a)] += 1
        else:
            for i, a in enumerate(present):
                for b in present[i + 1 :]:
                    joint[(a, b)] += 1

    pairs: list[tuple[str, str, int, float]] = []
    for (a, b), k11 in joint.items():
        if k11 < config.min_joint:
            continue
        k12 = marginals[a] - k11
        k21 = marginals[b] - k11
        k22 = n - k11 - k12 - k21
        if config.measure == "llr":
            score = llr(k11, k12, k21, k22)
        elif config.measure == "dice":
            score = dice(k11, k12, k21)
        elif config.measure == "pmi":
            score = pmi(k11, k12, k21, n)
        else:
            score = float(k11)
        pairs.append((a, b, k11, score))

    pairs.sort(key=lambda p: (-p[3], p[0], p[1]))
    return CooccurrenceResult(config=config, n_units=n, marginals=dict(marginals), pairs=pairs)


def cooccurrences(processed: Iterable["ProcessedDocument"], config: CoocConfig) -> CooccurrenceResult:
    return cooccurrences_from_units(collection_units(processed, config), config)


# ---------------------------------------------------------------------------
# Key terms
# ---------------------------------------------------------------------------

@dataclass
class KeytermResult:
    method: str
    terms: list[tuple[str, float]]  # descending score

    def to_rows(self) -> list[dict]:
        return [{"term": t, "score": s} for t, s in self.terms]


def extract_keyterms(
    target: "DocumentTermMatrix",
    reference: "DocumentTermMatrix" = None,
    method: str = "keyness_llr",
    model=None,
    limit: int | None = None,
) -> KeytermResult:
    """Ranked terms characterizing the target collection.

    keyness_llr scores overrepresentation of each target term against the
    reference corpus; tfidf needs no reference; topic_aggregate sums
    topic-word probabilities weighted by the corpus topic shares of a
    fitted model.
    """
    if method == "keyness_llr":
        if reference is None:
            raise ValueError("keyness_llr requires a reference matrix")
        size_t = target.total_tokens
        size_r = reference.total_tokens
        scored = []
        for i, term in enumerate(target.vocabulary.terms):
            tf_t = target.vocabulary.tf[i]
            rid = reference.vocabulary.id_of(term)
            tf_r = reference.vocabulary.tf[rid] if rid is not None else 0
            # keep only terms overrepresented in the target
            if tf_t / size_t <= (tf_r / size_r if size_r else 0.0):
                continue
            score = llr(tf_t, size_t - tf_t, tf_r, size_r - tf_r)
            scored.append((term, score))
    elif method == "tfidf":
        n_docs = target.n_docs
        scored_map: dict[str, float] = {}
        for d, t, c in target.entries:
            term = target.vocabulary.terms[t]
            idf = math.log(n_docs / target.vocabulary.df[t])
            scored_map[term] = scored_map.get(term, 0.0) + (1.0 + math.log(c)) * idf
        scored = list(scored_map.items())
    elif method == "topic_aggregate":
        if model is None:
            raise ValueError("topic_aggregate requires a fitted topic model")
        shares = model.topic_shares()
        scored = []
        for w, term in enumerate(target.vocabulary.terms):
            scored.append((term, float(sum(shares[k] * model.phi[k][w] for k in range(model.config.k)))))
    else:
        raise ValueError(f"unknown keyterm method {method!r}")

    scored.sort(key=lambda p: (-p[1], p[0]))
    if limit is not None:
        scored = scored[:limit]
    return KeytermResult(method=method, terms=scored)


# ---------------------------------------------------------------------------
# Keyword in context
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConcordanceLine:
    doc_id: str
    sentence: int
    left: tuple[str, ...]
    node: str
    right: tuple[str, ...]
    date: dt.date | None

    def to_row(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sentence": self.sentence,
            "left": " ".join(self.left),
            "node": self.node,
            "right": " ".join(self.right),
            "date": self.date.isoformat() if self.date else None,
        }


def kwic(
    processed: Iterable["ProcessedDocument"],
    term: str,
    window: int = 5,
    max_lines: int | None = None,
) -> list[ConcordanceLine]:
    """One concordance line per occurrence, sentence-bounded contexts."""
    lines: list[ConcordanceLine] = []
    for doc in sorted(processed, key=lambda d: d.doc_id):
        tokens = doc.tokens
        for i, tok in enumerate(tokens):
            if tok.term != term:
                continue
            left = []
            j = i - 1
            while j >= 0 and len(left) < window and tokens[j].sentence == tok.sentence:
                left.append(tokens[j].surface)
                j -= 1
            left.reverse()
            right = []
            j = i + 1
            while j < len(tokens) and len(right) < window and tokens[j].sentence == tok.sentence:
                right.append(tokens[j].surface)
                j += 1
            lines.append(ConcordanceLine(
                doc_id=doc.doc_id,
                sentence=tok.sentence,
                left=tuple(left),
                node=tok.surface,
                right=tuple(right),
                date=doc.date,
            ))
            if max_lines is not None and len(lines) >= max_lines:
                return lines
    return lines


# ---------------------------------------------------------------------------
# Context volatility
# ---------------------------------------------------------------------------

@dataclass
class VolatilityResult:
    term: str
    granularity: str
    history: int
    series: list[tuple[dt.date, float]]
    profiles: dict[dt.date, list[str]]  # slice -> top-m context terms, strongest first

    def to_rows(self) -> list[dict]:
        return [
            {"slice": s.isoformat(), "volatility": v, "term": self.term}
            for s, v in self.series
        ]


def _slice_collection(
    processed: list["ProcessedDocument"], granularity: str
) -> list[tuple[dt.date, list["ProcessedDocument"]]]:
    dated = [d for d in processed if d.date is not None]
    if not dated:
        raise FieldError("collection has no document dates")
    slices: dict[dt.date, list] = {}
    for doc in dated:
        slices.setdefault(bucket_start(doc.date, granularity), []).append(doc)
    return [(b, slices[b]) for b in sorted(slices)]


def _context_profile(docs: list["ProcessedDocument"], term: str, top_m: int) -> list[str]:
    """Top-m context terms of ``term`` by sentence-level LLR, strongest first."""
    units = [[t.term for t in s] for doc in docs for s in doc.sentences()]
    n = len(units)
    if n == 0:
        return []
    marginals: Counter = Counter()
    joint: Counter = Counter()
    for unit in units:
        present = set(unit)
        for u in present:
            marginals[u] += 1
        if term in present:
            for u in present:
                if u != term:
                    joint[u] += 1
    scored = []
    for ctx, k11 in joint.items():
        k12 = marginals[term] - k11
        k21 = marginals[ctx] - k11
        k22 = n - k11 - k12 - k21
        scored.append((ctx, llr(k11, k12, k21, k22)))
    scored.sort(key=lambda p: (-p[1], p[0]))
    return [ctx for ctx, _ in scored[:top_m]]


def context_volatility(
    processed: list["ProcessedDocument"],
    terms: list[str],
    granularity: str = "year",
    history: int = 3,
    top_m: int = 10,
) -> dict[str, VolatilityResult]:
    """Mean successive rank displacement of each term's context profile.

    For every slice t with at least ``history`` slices available, the
    term's sentence-level LLR profile is ranked in each of the h most
    recent slices (absent context terms get the capped rank m+1). Each
    context term in the union of the h top-m sets contributes its mean
    absolute successive rank difference normalized by (h-1)*m; the slice
    volatility is the mean over the union, which stays inside [0, 1].
    """
    if history < 2:
        raise ValueError("history must span at least 2 slices")
    slices = _slice_collection(processed, granularity)
    if len(slices) < history + 1:
        raise InsufficientData(
            f"need at least {history + 1} non-empty slices, got {len(slices)}"
        )

    results: dict[str, VolatilityResult] = {}
    for term in terms:
        seen = any(
            any(t.term == term for t in doc.tokens) for _, docs in slices for doc in docs
        )
        if not seen:
            raise InsufficientData(f"term {term!r} absent from every slice")
        profiles = [
            ( bucket, _context_profile(docs, term, top_m) )
            for bucket, docs in slices
        ]
        series: list[tuple[dt.date, float]] = []
        for t in range(history - 1, len(profiles)):
            window = profiles[t - history + 1 : t + 1]
            union: set[str] = set()
            for _, prof in window:
                union.update(prof)
            if not union:
                series.append((profiles[t][0], 0.0))
                continue
            ranks_per_slice = []
            for _, prof in window:
                rank = {ctx: i + 1 for i, ctx in enumerate(prof)}
                ranks_per_slice.append(rank)
            total = 0.0
            for ctx in union:
                diffs = 0.0
                prev = None
                for rank in ranks_per_slice:
                    r = min(rank.get(ctx, top_m + 1), top_m + 1)
                    if prev is not None:
                        diffs += abs(r - prev)
                    prev = r
                total += diffs / ((history - 1) * top_m)
            series.append((profiles[t][0], total / len(union)))
        results[term] = VolatilityResult(
            term=term,
            granularity=granularity,
            history=history,
            series=series,
            profiles={b: p for b, p in profiles},
        )
    return results
