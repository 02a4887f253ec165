"""Multi-word expression detection over adjacent token pairs.

Bigrams are scored with the log-likelihood ratio of their adjacency
contingency table; trigrams are built greedily on top of accepted
bigrams. Accepted expressions can be merged into single tokens by the
preprocessing pipeline.
"""

from __future__ import annotations

from collections import Counter

from ..errors import EmptyInput
from ..lexicostats import llr


def detect_mwe(
    token_streams: list[list[str]],
    llr_threshold: float,
    max_len: int = 3,
) -> list[tuple[tuple[str, ...], float]]:
    """Score adjacent n-grams; keep those with LLR >= threshold.

    ``token_streams`` holds one list of word tokens per sentence (or per
    document when sentence segmentation is off). N-grams never cross
    stream boundaries.
    """
    if not any(token_streams):
        raise EmptyInput("no tokens to scan for multi-word expressions")

    bigram = Counter()
    first = Counter()   # token at slot 1 of any bigram
    second = Counter()  # token at slot 2 of any bigram
    n_slots = 0
    for stream in token_streams:
        for a, b in zip(stream, stream[1:]):
            bigram[(a, b)] += 1
            first[a] += 1
            second[b] += 1
            n_slots += 1

    accepted: list[tuple[tuple[str, ...], float]] = []
    accepted_bigrams: set[tuple[str, str]] = set()
    for (a, b), k11 in bigram.items():
        k12 = first[a] - k11
        k21 = second[b] - k11
        k22 = n_slots - k11 - k12 - k21
        score = llr(k11, k12, k21, k22)
        if score >= llr_threshold:
            accepted.append(((a, b), score))
            accepted_bigrams.add((a, b))

    if max_len >= 3 and accepted_bigrams:
        trigram = Counter()
        tri_first = Counter()   # leading bigram of a trigram slot
        tri_second = Counter()  # trailing token of a trigram slot
        n_tri = 0
        for stream in token_streams:
            for a, b, c in zip(stream, stream[1:], stream[2:]):
                if (a, b) in accepted_bigrams:
                    trigram[(a, b, c)] += 1
                    tri_first[(a, b)] += 1
                    tri_second[c] += 1
                    n_tri += 1
        for (a, b, c), k11 in trigram.items():
            k12 = tri_first[(a, b)] - k11
            k21 = tri_second[c] - k11
            k22 = n_tri - k11 - k12 - k21
            score = llr(k11, k12, k21, k22)
            if score >= llr_threshold:
                accepted.append(((a, b, c), score))

    accepted.sort(key=lambda item: (-item[1], item[0]))
    return accepted


def merge_mwes(stream: list, mwes: list[tuple[tuple[str, ...], float]], key=lambda t: t):
    """Merge accepted expressions into single items, longest match first.

    ``stream`` is any list of items; ``key`` extracts the comparable word.
    Returns a list of lists: each output element groups the input items
    it was merged from (singletons stay singleton groups).
    """
    by_len = sorted({words for words, _ in mwes}, key=len, reverse=True)
    if not by_len:
        return [[item] for item in stream]
    max_len = len(by_len[0])
    lookup = {words for words in by_len}
    out: list[list] = []
    i = 0
    n = len(stream)
    while i < n:
        merged = False
        for length in range(min(max_len, n - i), 1, -1):
            window = tuple(key(stream[i + k]) for k in range(length))
            if window in lookup:
                out.append([stream[i + k] for k in range(length)])
                i += length
                merged = True
                break
        if not merged:
            out.append([stream[i]])
            i += 1
    return out
