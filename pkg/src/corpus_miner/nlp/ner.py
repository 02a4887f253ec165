"""Gazetteer-based entity tagging and external token-annotation import.

Statistical taggers are deliberately not part of the engine; entity
recognition is longest-match lookup against editable gazetteer files
with alias unification (several surfaces map to one canonical name),
and richer layers (lemma/POS/NER from an external tool) can be attached
through a CoNLL-style TSV import.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import AlignmentError
from .tokenize import Token

ENTITY_TYPES = ("PER", "ORG", "LOC", "MISC")


@dataclass(frozen=True)
class EntitySpan:
    doc_id: str
    start_token: int
    end_token: int  # exclusive
    type: str
    canonical: str
    surface: str


def _compile_gazetteer(gazetteer: dict[str, tuple[str, str]]):
    table: dict[tuple[str, ...], tuple[str, str]] = {}
    max_len = 1
    for surface, (etype, canonical) in gazetteer.items():
        words = tuple(surface.split())
        if not words or not canonical:
            continue
        table[words] = (etype, canonical)
        max_len = max(max_len, len(words))
    return table, max_len


def gazetteer_ner(
    tokens: list[Token],
    gazetteer: dict[str, tuple[str, str]],
    doc_id: str = "",
) -> list[EntitySpan]:
    """Longest-match left-to-right entity spans over the token stream."""
    table, max_len = _compile_gazetteer(gazetteer)
    words = [(i, t.surface) for i, t in enumerate(tokens) if not t.is_punct]
    spans: list[EntitySpan] = []
    i = 0
    while i < len(words):
        matched = False
        for length in range(min(max_len, len(words) - i), 0, -1):
            window = tuple(w for _, w in words[i : i + length])
            hit = table.get(window)
            if hit is not None:
                etype, canonical = hit
                spans.append(EntitySpan(
                    doc_id=doc_id,
                    start_token=words[i][0],
                    end_token=words[i + length - 1][0] + 1,
                    type=etype,
                    canonical=canonical,
                    surface=" ".join(window),
                ))
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return spans


@dataclass
class AnnotationLayer:
    """Per-token lemma/POS/NER attached from an external file."""

    doc_id: str
    lemmas: dict[int, str] = field(default_factory=dict)   # token position -> lemma
    pos: dict[int, str] = field(default_factory=dict)
    ner: dict[int, str] = field(default_factory=dict)
    skips: int = 0


def import_token_annotations(
    tokens: list[Token],
    rows: list[tuple[str, str, str, str]],
    doc_id: str = "",
    tolerance: float = 0.02,
) -> AnnotationLayer:
    """Align (token, lemma, pos, ner) rows with our tokenization.

    Alignment is greedy surface matching; a bounded lookahead skips extra
    tokens on either side. When skips exceed ``tolerance`` of the token
    count the file is considered misaligned and rejected, reporting the
    first mismatching pair.
    """
    layer = AnnotationLayer(doc_id=doc_id)
    ours = tokens
    n, m = len(ours), len(rows)
    budget = max(1, int(tolerance * max(n, m)))
    first_mismatch: str | None = None
    i = j = 0
    while i < n and j < m:
        surface = ours[i].surface
        ext = rows[j][0]
        if surface == ext:
            layer.lemmas[ours[i].position] = rows[j][1]
            layer.pos[ours[i].position] = rows[j][2]
            layer.ner[ours[i].position] = rows[j][3]
            i += 1
            j += 1
            continue
        if first_mismatch is None:
            first_mismatch = f"token {i}: ours {surface!r} vs file {ext!r}"
        # try skipping one external token, then one of ours
        if j + 1 < m and rows[j + 1][0] == surface:
            j += 1
        elif i + 1 < n and ours[i + 1].surface == ext:
            i += 1
        else:
            i += 1
            j += 1
        layer.skips += 1
        if layer.skips > budget:
            raise AlignmentError(
                f"annotation file misaligned beyond {tolerance:.0%}: {first_mismatch}"
            )
    layer.skips += (n - i) + (m - j)
    if layer.skips > budget and (n - i) + (m - j) > 0:
        raise AlignmentError(
            f"annotation file misaligned beyond {tolerance:.0%}: "
            f"{first_mismatch or 'length mismatch'}"
        )
    return layer


def read_conll_tsv(path) -> list[tuple[str, str, str, str]]:
    """Rows of a token<TAB>lemma<TAB>pos<TAB>ner file (blank lines skipped)."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            while len(parts) < 4:
                parts.append("")
            rows.append((parts[0], parts[1], parts[2], parts[3]))
    return rows
