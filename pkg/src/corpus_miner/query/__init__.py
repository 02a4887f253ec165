"""Query language, inverted index and faceted search."""

from .parser import (
    And, FieldEq, MatchAll, Not, Or, Phrase, Proximity, QueryAst, Range, Term,
    parse_query,
)
from .index import IndexSnapshot, build_index
from .search import (
    Hit, HighlightSpan, ResultPage,
    search, evaluate_membership, facet_time_series, highlight, matches_document,
)

__all__ = [
    "And", "FieldEq", "MatchAll", "Not", "Or", "Phrase", "Proximity",
    "QueryAst", "Range", "Term", "parse_query",
    "IndexSnapshot", "build_index",
    "Hit", "HighlightSpan", "ResultPage",
    "search", "evaluate_membership", "facet_time_series", "highlight",
    "matches_document",
]
