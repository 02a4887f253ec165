"""Boolean search with TF-IDF ranking, facets, time series and highlighting.

Membership is exact boolean semantics over the snapshot; the TF-IDF
score only orders hits and never decides membership. Negated branches
are complements within the corpus and contribute nothing to scores or
highlights.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field

from ..errors import FieldError
from ..lexicostats import bucket_span, bucket_start, TimeSeries
from ..nlp.tokenize import word_tokens_with_offsets, word_terms
from .index import IndexSnapshot
from .parser import (
    And, FieldEq, MatchAll, Not, Or, Phrase, Proximity, QueryAst, Range, Term,
)


@dataclass(frozen=True)
class Hit:
    doc_id: str
    score: float
    snippet: str


@dataclass(frozen=True)
class HighlightSpan:
    doc_id: str
    start: int
    end: int
    leaf: str


@dataclass
class ResultPage:
    total_hits: int
    hits: list[Hit]
    facets: dict[str, list[tuple[str, int]]]
    query_echo: str


# ---------------------------------------------------------------------------
# Typed metadata comparison
# ---------------------------------------------------------------------------

def _typed(kind: str, raw: str):
    if kind == "integer":
        return int(raw)
    if kind == "decimal":
        return float(raw)
    if kind == "date":
        return dt.date.fromisoformat(raw)
    if kind == "boolean":
        return str(raw).strip().lower() in ("true", "1", "yes")
    return str(raw)


def _field_eq(snapshot: IndexSnapshot, node: FieldEq) -> set[str]:
    kind = snapshot.field_kinds.get(node.field)
    if kind is None:
        raise FieldError(f"unknown field {node.field!r}")
    try:
        wanted = _typed(kind, node.value)
    except ValueError:
        return set()
    out = set()
    for doc_id in snapshot.doc_ids:
        if snapshot.metadata[doc_id].get(node.field) == wanted:
            out.add(doc_id)
    return out


def _field_range(snapshot: IndexSnapshot, node: Range) -> set[str]:
    kind = snapshot.field_kinds.get(node.field)
    if kind is None:
        raise FieldError(f"unknown field {node.field!r}")
    try:
        lo = _typed(kind, node.lo)
        hi = _typed(kind, node.hi)
    except ValueError as exc:
        raise FieldError(f"range bound does not fit field kind {kind!r}: {exc}")
    out = set()
    for doc_id in snapshot.doc_ids:
        value = snapshot.metadata[doc_id].get(node.field)
        if value is not None and lo <= value <= hi:
            out.add(doc_id)
    return out


# ---------------------------------------------------------------------------
# Positional matching
# ---------------------------------------------------------------------------

def _phrase_occurrences(positions_per_term: list[list[int]]) -> list[int]:
    """Start positions where the terms occur consecutively."""
    if any(not p for p in positions_per_term):
        return []
    first = positions_per_term[0]
    starts = []
    rest = [set(p) for p in positions_per_term[1:]]
    for p in first:
        if all((p + i + 1) in s for i, s in enumerate(rest)):
            starts.append(p)
    return starts


def _proximity_windows(
    positions_per_term: list[list[int]], max_distance: int, ordered: bool
) -> list[tuple[int, int]]:
    """(min, max) position pairs of windows covering all terms within range."""
    if any(not p for p in positions_per_term):
        return []
    if len(positions_per_term) == 1:
        return [(p, p) for p in positions_per_term[0]]
    n_terms = len(positions_per_term)
    windows: list[tuple[int, int]] = []
    if ordered:
        # chain the smallest admissible position of each later term; greedy
        # minimizes the window end for a fixed start
        for p0 in positions_per_term[0]:
            cur = p0
            ok = True
            for positions in positions_per_term[1:]:
                nxt = next((q for q in positions if q > cur), None)
                if nxt is None:
                    ok = False
                    break
                cur = nxt
            if ok and cur - p0 <= max_distance:
                windows.append((p0, cur))
        return windows
    labeled = sorted(
        (p, idx) for idx, positions in enumerate(positions_per_term) for p in positions
    )
    counts = [0] * n_terms
    covered = 0
    left = 0
    for right in range(len(labeled)):
        idx = labeled[right][1]
        counts[idx] += 1
        if counts[idx] == 1:
            covered += 1
        while covered == n_terms:
            if labeled[right][0] - labeled[left][0] <= max_distance:
                windows.append((labeled[left][0], labeled[right][0]))
            lidx = labeled[left][1]
            counts[lidx] -= 1
            if counts[lidx] == 0:
                covered -= 1
            left += 1
    return windows


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _leaf_matches(snapshot: IndexSnapshot, node: QueryAst) -> dict[str, list]:
    """Positive leaf evaluation: doc id -> occurrences (positions/windows)."""
    if isinstance(node, Term):
        return {d: list(p) for d, p in snapshot.postings.get(node.text, {}).items()}
    if isinstance(node, Phrase):
        return _positional(snapshot, node.terms,
                           lambda per_term: _phrase_occurrences(per_term))
    if isinstance(node, Proximity):
        return _positional(
            snapshot, node.terms,
            lambda per_term: _proximity_windows(per_term, node.max_distance, node.ordered),
        )
    raise TypeError(f"not a positional leaf: {node!r}")


def _positional(snapshot: IndexSnapshot, terms: tuple[str, ...], fn) -> dict[str, list]:
    candidates: set[str] | None = None
    for term in terms:
        docs = set(snapshot.postings.get(term, {}))
        candidates = docs if candidates is None else candidates & docs
        if not candidates:
            return {}
    out = {}
    for doc_id in candidates or set():
        per_term = [snapshot.postings[t][doc_id] for t in terms]
        occurrences = fn(per_term)
        if occurrences:
            out[doc_id] = occurrences
    return out


def evaluate_membership(
    snapshot: IndexSnapshot, node: QueryAst, collect: list | None = None
) -> set[str]:
    """Doc ids matching the node; positive leaves go into ``collect``."""
    if isinstance(node, (Term, Phrase, Proximity)):
        matches = _leaf_matches(snapshot, node)
        if collect is not None:
            collect.append((node, matches))
        return set(matches)
    if isinstance(node, MatchAll):
        return set(snapshot.doc_ids)
    if isinstance(node, FieldEq):
        return _field_eq(snapshot, node)
    if isinstance(node, Range):
        return _field_range(snapshot, node)
    if isinstance(node, And):
        result: set[str] | None = None
        for child in node.children:
            got = evaluate_membership(snapshot, child, collect)
            result = got if result is None else result & got
        return result or set()
    if isinstance(node, Or):
        result: set[str] = set()
        for child in node.children:
            result |= evaluate_membership(snapshot, child, collect)
        return result
    if isinstance(node, Not):
        # negated branches never contribute scores or highlights
        inner = evaluate_membership(snapshot, node.child, None)
        return set(snapshot.doc_ids) - inner
    raise TypeError(f"unknown node {node!r}")


def search(
    snapshot: IndexSnapshot,
    ast: QueryAst,
    page: tuple[int, int] = (0, 10),
    facet_fields: list[str] | None = None,
) -> ResultPage:
    facet_fields = facet_fields or []
    for f in facet_fields:
        if f not in snapshot.facetable:
            raise FieldError(f"field {f!r} is not facetable")

    leaves: list = []
    members = evaluate_membership(snapshot, ast, leaves)
    n = snapshot.doc_count

    scores = {d: 0.0 for d in members}
    for leaf, matches in leaves:
        df = len(matches)
        if df == 0:
            continue
        idf = math.log(n / df) if n else 0.0
        for doc_id, occurrences in matches.items():
            if doc_id in scores:
                tf = len(occurrences)
                scores[doc_id] += (1.0 + math.log(tf)) * idf

    ordered = sorted(members, key=lambda d: (-scores[d], d))
    offset, limit = page
    hits = [
        Hit(doc_id=d, score=scores[d], snippet=_snippet(snapshot, d, leaves))
        for d in ordered[offset : offset + limit]
    ]

    facets: dict[str, list[tuple[str, int]]] = {}
    for f in facet_fields:
        counts: dict[str, int] = {}
        for value, docs in snapshot.facets.get(f, {}).items():
            c = len(docs & members)
            if c:
                counts[value] = c
        facets[f] = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))

    return ResultPage(
        total_hits=len(members),
        hits=hits,
        facets=facets,
        query_echo=ast.to_string(),
    )


def _snippet(snapshot: IndexSnapshot, doc_id: str, leaves: list, width: int = 40) -> str:
    body = snapshot.bodies.get(doc_id, "")
    spans = highlight_from_body(body, doc_id, leaves)
    if not spans:
        return body[: 2 * width].strip()
    s = spans[0]
    lo = max(0, s.start - width)
    hi = min(len(body), s.end + width)
    return body[lo:hi].strip()


# ---------------------------------------------------------------------------
# Time series over hits
# ---------------------------------------------------------------------------

def facet_time_series(
    snapshot: IndexSnapshot, ast: QueryAst, granularity: str = "month"
) -> TimeSeries:
    """Hit counts per date bucket over the corpus date span; gaps are 0."""
    if snapshot.field_kinds.get("date") != "date":
        raise FieldError("corpus schema has no date field")
    corpus_dates = [d for d in snapshot.dates.values() if d is not None]
    if not corpus_dates:
        raise FieldError("no document dates available")
    members = evaluate_membership(snapshot, ast)
    buckets = bucket_span(min(corpus_dates), max(corpus_dates), granularity)
    index = {b: i for i, b in enumerate(buckets)}
    values = [0.0] * len(buckets)
    for doc_id in members:
        d = snapshot.dates.get(doc_id)
        if d is not None:
            values[index[bucket_start(d, granularity)]] += 1
    return TimeSeries(
        granularity=granularity,
        points=list(zip(buckets, values)),
        normalization="absolute",
        label=ast.to_string(),
    )


# ---------------------------------------------------------------------------
# Highlighting
# ---------------------------------------------------------------------------

def matches_document(
    ast: QueryAst,
    terms: list[str],
    metadata: dict,
    field_kinds: dict[str, str],
) -> bool:
    """Evaluate the query against a single document's analyzed tokens."""
    if isinstance(ast, Term):
        return ast.text in terms
    if isinstance(ast, MatchAll):
        return True
    if isinstance(ast, Phrase):
        per_term = [[i for i, t in enumerate(terms) if t == w] for w in ast.terms]
        return bool(_phrase_occurrences(per_term))
    if isinstance(ast, Proximity):
        per_term = [[i for i, t in enumerate(terms) if t == w] for w in ast.terms]
        return bool(_proximity_windows(per_term, ast.max_distance, ast.ordered))
    if isinstance(ast, FieldEq):
        kind = field_kinds.get(ast.field)
        if kind is None:
            raise FieldError(f"unknown field {ast.field!r}")
        try:
            return metadata.get(ast.field) == _typed(kind, ast.value)
        except ValueError:
            return False
    if isinstance(ast, Range):
        kind = field_kinds.get(ast.field)
        if kind is None:
            raise FieldError(f"unknown field {ast.field!r}")
        value = metadata.get(ast.field)
        if value is None:
            return False
        return _typed(kind, ast.lo) <= value <= _typed(kind, ast.hi)
    if isinstance(ast, And):
        return all(matches_document(c, terms, metadata, field_kinds) for c in ast.children)
    if isinstance(ast, Or):
        return any(matches_document(c, terms, metadata, field_kinds) for c in ast.children)
    if isinstance(ast, Not):
        return not matches_document(ast.child, terms, metadata, field_kinds)
    raise TypeError(f"unknown node {ast!r}")


def _positive_leaves(ast: QueryAst) -> list[QueryAst]:
    if isinstance(ast, (Term, Phrase, Proximity)):
        return [ast]
    if isinstance(ast, (And, Or)):
        out = []
        for c in ast.children:
            out.extend(_positive_leaves(c))
        return out
    return []  # Not subtrees and field leaves yield no highlights


def highlight_from_body(body: str, doc_id: str, leaves: list) -> list[HighlightSpan]:
    tokens = word_tokens_with_offsets(body)
    terms = [t for t, _, _ in tokens]
    spans: list[HighlightSpan] = []
    for leaf, matches in leaves:
        if doc_id not in matches:
            continue
        spans.extend(_leaf_spans(leaf, tokens, terms))
    spans.sort(key=lambda s: (s.start, s.end))
    return spans


def _leaf_spans(leaf: QueryAst, tokens, terms) -> list[HighlightSpan]:
    spans = []
    if isinstance(leaf, Term):
        for term, start, end in tokens:
            if term == leaf.text:
                spans.append(HighlightSpan("", start, end, leaf.to_string()))
    elif isinstance(leaf, Phrase):
        per_term = [[i for i, t in enumerate(terms) if t == w] for w in leaf.terms]
        for p in _phrase_occurrences(per_term):
            spans.append(HighlightSpan(
                "", tokens[p][1], tokens[p + len(leaf.terms) - 1][2], leaf.to_string()
            ))
    elif isinstance(leaf, Proximity):
        per_term = [[i for i, t in enumerate(terms) if t == w] for w in leaf.terms]
        for lo, hi in _proximity_windows(per_term, leaf.max_distance, leaf.ordered):
            spans.append(HighlightSpan("", tokens[lo][1], tokens[hi][2], leaf.to_string()))
    return spans


def highlight(body: str, doc_id: str, ast: QueryAst,
              metadata: dict | None = None,
              field_kinds: dict[str, str] | None = None) -> list[HighlightSpan]:
    """Character spans of every positive-leaf occurrence in ``body``.

    Returns [] when the document does not match the query; negated
    leaves never produce spans.
    """
    tokens = word_tokens_with_offsets(body)
    terms = [t for t, _, _ in tokens]
    if not matches_document(ast, terms, metadata or {}, field_kinds or {}):
        return []
    spans: list[HighlightSpan] = []
    for leaf in _positive_leaves(ast):
        for s in _leaf_spans(leaf, tokens, terms):
            spans.append(HighlightSpan(doc_id, s.start, s.end, s.leaf))
    spans.sort(key=lambda s: (s.start, s.end))
    return spans
