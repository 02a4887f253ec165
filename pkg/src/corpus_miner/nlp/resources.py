"""Loading of pluggable language resources.

All resources are UTF-8 text or TSV files resolved by id against a
search path: user-supplied directories first, then the bundled package
resources. Adding support for another language means dropping files like
``stopwords_xx.txt`` or ``lemma_xx.tsv`` into a resource directory; no
code changes are required.

File formats (lines starting with ``#`` are comments):
    stopwords_<id>.txt      one lowercase word per line
    abbreviations_<id>.txt  one abbreviation (with trailing dot) per line
    lemma_<id>.tsv          surface<TAB>lemma
    gazetteer_<id>.tsv      surface<TAB>type<TAB>canonical
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path

_BUNDLED = Path(__file__).resolve().parent.parent / "resources"


class Resources:
    def __init__(self, extra_dirs: list[str | Path] | None = None):
        self.dirs = [Path(d) for d in (extra_dirs or [])] + [_BUNDLED]

    def _find(self, filename: str) -> Path:
        for d in self.dirs:
            p = d / filename
            if p.is_file():
                return p
        raise FileNotFoundError(f"resource file {filename!r} not found in {self.dirs}")

    def _lines(self, filename: str) -> list[str]:
        out = []
        for line in self._find(filename).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                out.append(line)
        return out

    @lru_cache(maxsize=None)
    def stopwords(self, list_id: str) -> frozenset[str]:
        return frozenset(self._lines(f"stopwords_{list_id}.txt"))

    @lru_cache(maxsize=None)
    def abbreviations(self, lang: str) -> frozenset[str]:
        try:
            return frozenset(self._lines(f"abbreviations_{lang}.txt"))
        except FileNotFoundError:
            return frozenset()

    @lru_cache(maxsize=None)
    def lemma_dictionary(self, dict_id: str) -> dict[str, str]:
        table = {}
        for line in self._lines(f"lemma_{dict_id}.tsv"):
            parts = line.split("\t")
            if len(parts) >= 2:
                table[parts[0]] = parts[1]
        return table

    @lru_cache(maxsize=None)
    def gazetteer(self, gaz_id: str) -> dict[str, tuple[str, str]]:
        table = {}
        for line in self._lines(f"gazetteer_{gaz_id}.tsv"):
            parts = line.split("\t")
            if len(parts) >= 3:
                table[parts[0]] = (parts[1], parts[2])
        return table
