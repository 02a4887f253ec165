"""Canonical JSON serialization and content hashing.

Every parameter set, result payload and intermediate object (DTM, model)
is hashed through the same canonical form so that run records stay
comparable across process boundaries and export/import round trips.

Canonical form: keys sorted, no insignificant whitespace, floats rendered
as their shortest round-trip decimal string. Floats never enter a hash as
binary; the decimal string is what gets hashed.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any


def _canonicalize(obj: Any) -> Any:
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise ValueError("non-finite float cannot be hashed canonically")
        if obj == int(obj) and abs(obj) < 1e15:
            return f"{int(obj)}.0"
        return repr(obj)
    if isinstance(obj, dict):
        return {str(k): _canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonicalize(v) for v in obj]
    if isinstance(obj, (str, int, bool)) or obj is None:
        return obj
    if hasattr(obj, "isoformat"):
        return obj.isoformat()
    raise TypeError(f"object of type {type(obj).__name__} is not canonically serializable")


def canonical_json(obj: Any) -> str:
    """Render ``obj`` as canonical JSON text (stable across runs)."""
    return json.dumps(_canonicalize(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def content_hash(obj: Any) -> str:
    """sha256 hex digest of the canonical JSON form of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def file_hash(path) -> str:
    """sha256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
