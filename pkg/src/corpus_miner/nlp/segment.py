"""Rule-based sentence segmentation and paragraph detection.

A sentence ends at a run of terminal punctuation (. ! ?) unless the token
carrying the period is on the language's abbreviation list or the next
non-space character does not look like a sentence start. Statistical
segmentation is out of scope; the abbreviation lists are plain editable
resource files.
"""

from __future__ import annotations

import re

_TERMINALS = ".!?"
_CLOSERS = "\"'»“”’)]"
_PARAGRAPH_RE = re.compile(r"\n[ \t]*\n")


def _token_ending_at(text: str, idx: int) -> str:
    """The whitespace-delimited token whose last character is ``text[idx]``."""
    start = idx
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    return text[start : idx + 1]


def segment_sentences(text: str, abbreviations: frozenset[str] = frozenset()) -> list[tuple[int, int]]:
    """Character ranges of sentences, covering all non-whitespace text."""
    ranges: list[tuple[int, int]] = []
    n = len(text)
    start: int | None = None
    i = 0
    while i < n:
        ch = text[i]
        if start is None:
            if not ch.isspace():
                start = i
            i += 1
            continue
        if ch in _TERMINALS:
            j = i
            while j + 1 < n and text[j + 1] in _TERMINALS + _CLOSERS:
                j += 1
            k = j + 1
            newline = False
            while k < n and text[k].isspace():
                newline = newline or text[k] == "\n"
                k += 1
            token = _token_ending_at(text, i)
            abbreviated = ch == "." and token in abbreviations
            starts_new = k >= n or newline or text[k].isupper() or text[k].isdigit() or text[k] in "\"'»“(„"
            if not abbreviated and starts_new:
                ranges.append((start, j + 1))
                start = None
            i = j + 1
            continue
        i += 1
    if start is not None:
        end = n
        while end > start and text[end - 1].isspace():
            end -= 1
        ranges.append((start, end))
    return ranges


def paragraph_ranges(text: str) -> list[tuple[int, int]]:
    """Blank-line-delimited blocks as character ranges."""
    ranges = []
    pos = 0
    for m in _PARAGRAPH_RE.finditer(text):
        if text[pos : m.start()].strip():
            ranges.append((pos, m.start()))
        pos = m.end()
    if text[pos:].strip():
        ranges.append((pos, len(text)))
    if not ranges and text.strip():
        ranges.append((0, len(text)))
    return ranges
