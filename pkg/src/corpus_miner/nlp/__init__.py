"""Deterministic linguistic preprocessing: tokens, entities, sparse matrices."""

from .tokenize import Token, tokenize, word_terms
from .segment import segment_sentences, paragraph_ranges
from .stem import porter_stem, german_light_stem, stemmer_for
from .resources import Resources
from .ner import EntitySpan, gazetteer_ner, import_token_annotations, AnnotationLayer
from .mwe import detect_mwe
from .pipeline import (
    PipelineConfig,
    MweConfig,
    NgramConfig,
    PruningConfig,
    ProcToken,
    ProcessedDocument,
    Vocabulary,
    DocumentTermMatrix,
    process_collection,
    build_dtm,
)

__all__ = [
    "Token", "tokenize", "word_terms",
    "segment_sentences", "paragraph_ranges",
    "porter_stem", "german_light_stem", "stemmer_for",
    "Resources",
    "EntitySpan", "gazetteer_ner", "import_token_annotations", "AnnotationLayer",
    "detect_mwe",
    "PipelineConfig", "MweConfig", "NgramConfig", "PruningConfig",
    "ProcToken", "ProcessedDocument", "Vocabulary", "DocumentTermMatrix",
    "process_collection", "build_dtm",
]
