"""Exception hierarchy shared by all engine modules."""


class MinerError(Exception):
    """Base class for every error raised by the engine."""


class SchemaError(MinerError):
    """Invalid metadata schema definition."""


class NameConflict(MinerError):
    """An object with this name already exists for the owner."""


class IoError(MinerError):
    """A source file or directory could not be read."""


class MappingError(MinerError):
    """An import mapping targets a field that does not exist in the schema."""


class MembershipError(MinerError):
    """A document id does not belong to the expected corpus."""


class NotFound(MinerError):
    """The requested object does not exist."""


class PermissionError_(MinerError):
    """The user lacks the required grant on the corpus."""


class QueryParseError(MinerError):
    """Query text does not conform to the query grammar."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class FieldError(MinerError):
    """Unknown or unsuitable metadata field for this operation."""


class EmptyInput(MinerError):
    """The operation received an empty collection or token stream."""


class AlignmentError(MinerError):
    """External token annotations do not align with our tokenization."""


class EmptyVocabulary(MinerError):
    """Pruning removed every term from the vocabulary."""


class DomainError(MinerError):
    """Numeric argument outside the valid domain (e.g. negative count)."""


class InsufficientData(MinerError):
    """Not enough time slices or observations for the requested analysis."""


class ConfigError(MinerError):
    """Invalid analysis configuration."""


class SplitError(MinerError):
    """Train/held-out split would be degenerate."""


class ProvenanceError(MinerError):
    """Input hashes do not match; the objects were not produced together."""


class SchemeError(MinerError):
    """Invalid category scheme or unknown category."""


class SpanError(MinerError):
    """Annotation span exceeds document bounds."""


class InsufficientLabels(MinerError):
    """No positive training examples for the target category."""


class FoldError(MinerError):
    """A class has fewer examples than the requested fold count."""


class PoolExhausted(MinerError):
    """The unlabeled pool is empty; active learning cannot continue."""


class ValidationError(MinerError):
    """Operation parameters failed validation.

    ``field_paths`` names the offending parameters (dotted paths such as
    ``config.K``) so API clients can surface them next to the input.
    """

    def __init__(self, message: str, field_paths: list[str] | None = None):
        self.field_paths = field_paths or []
        super().__init__(message)
