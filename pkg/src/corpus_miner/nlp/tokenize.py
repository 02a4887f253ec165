"""Unicode tokenization with exact character offsets.

Hyphenated compounds and words with internal apostrophes stay single
tokens; punctuation is kept as one token per character so offsets always
re-slice the source text to the surface form.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

_WORD = r"\w+(?:[-'’]\w+)*"
_TOKEN_RE = re.compile(rf"(?P<word>{_WORD})|(?P<punct>[^\w\s])", re.UNICODE)


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    sentence: int
    position: int
    start: int
    end: int
    is_punct: bool = False
    entity: str | None = None

    def with_normalized(self, normalized: str) -> "Token":
        return replace(self, normalized=normalized)


def _index_for(ranges: list[tuple[int, int]] | None, offset: int) -> int:
    if not ranges:
        return 0
    # ranges are ordered and non-overlapping; linear scan with memo is
    # avoided here because callers tokenize each document once
    lo, hi = 0, len(ranges) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ranges[mid][1] <= offset:
            lo = mid + 1
        else:
            hi = mid
    return lo


def tokenize(
    text: str,
    sentence_ranges: list[tuple[int, int]] | None = None,
    paragraph_ranges_: list[tuple[int, int]] | None = None,
) -> list[Token]:
    """Split ``text`` on Unicode word boundaries.

    ``sentence_ranges`` (from :func:`segment_sentences`) assigns each
    token its sentence index; without them every token is sentence 0.
    """
    tokens: list[Token] = []
    for i, m in enumerate(_TOKEN_RE.finditer(text)):
        surface = m.group(0)
        tokens.append(Token(
            surface=surface,
            normalized=surface,
            sentence=_index_for(sentence_ranges, m.start()),
            position=i,
            start=m.start(),
            end=m.end(),
            is_punct=m.lastgroup == "punct",
        ))
    return tokens


def word_terms(text: str, lowercase: bool = True) -> list[str]:
    """Word tokens only, optionally lowercased.

    This is the index-time analyzer of the search engine: no stemming, no
    stopword removal, so retrieval behavior stays predictable and
    independent of any analysis pipeline configuration.
    """
    terms = [m.group(0) for m in re.finditer(_WORD, text, re.UNICODE)]
    return [t.lower() for t in terms] if lowercase else terms


def word_tokens_with_offsets(text: str, lowercase: bool = True) -> list[tuple[str, int, int]]:
    """(term, start, end) triples under the index-time analyzer."""
    out = []
    for m in re.finditer(_WORD, text, re.UNICODE):
        term = m.group(0).lower() if lowercase else m.group(0)
        out.append((term, m.start(), m.end()))
    return out
