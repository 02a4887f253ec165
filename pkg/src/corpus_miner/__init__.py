"""Corpus mining engine.

Document management with typed metadata, a boolean query language over
an inverted index with facets, deterministic linguistic preprocessing,
lexicometric statistics, Gibbs-sampled topic models, manual annotation
with agreement measures, active-learning classification, and a
provenance ledger that ties every result to its inputs. Served through
a CLI and an HTTP JSON API sharing one code path.
"""

from .workspace import Workspace, load_config

__version__ = "0.1.0"
__all__ = ["Workspace", "load_config", "__version__"]
