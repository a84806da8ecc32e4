"""Exception types raised across the toolkit."""

from __future__ import annotations


class DocmillError(Exception):
    """Base class for all toolkit errors."""


class EncryptedPdfError(DocmillError):
    """The PDF is encrypted and cannot be read."""


class MalformedPdfError(DocmillError):
    """The PDF's cross-reference table or content cannot be parsed."""


class SchemaViolation(DocmillError):
    """A fixture file does not match the expected JSON schema.

    Carries the dotted path of the offending field.
    """

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class InvariantViolation(DocmillError):
    """A document value violates a structural invariant (e.g. x0 > x1)."""


class EmptyDocumentError(DocmillError):
    """An operation that needs at least one span received none."""


class RangeOutOfBounds(DocmillError):
    """A line range points outside the markdown document."""


class DimensionMismatch(DocmillError):
    """Embedding vectors of different dimensions were mixed."""


class EmbedderUnreachable(DocmillError):
    """The remote embedding endpoint kept failing after retries."""


class DomainError(DocmillError):
    """An argument is outside its documented domain."""


class MissingPages(DocmillError):
    """A page-level relevance judgment needs page metadata the chunk lacks."""
