"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: usage errors exit 1, DataError exits 2,
ExternalServiceError exits 3.
"""


class RadsAuditError(Exception):
    """Base class for all toolkit errors."""


class DataError(RadsAuditError):
    """Input data is malformed, inconsistent, or empty."""


class ExternalServiceError(RadsAuditError):
    """A remote or out-of-process dependency failed (HTTP, subprocess, LLM)."""


class LlmParseError(DataError):
    """The model reply could not be turned into a structured answer.

    Carries the raw reply so failed responses can be audited by hand.
    """

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class ClassifierError(ExternalServiceError):
    """An external classifier backend failed; carries the paragraph index."""

    def __init__(self, message: str, paragraph_index: int | None = None):
        super().__init__(message)
        self.paragraph_index = paragraph_index


class TransportError(ExternalServiceError):
    """Transient failure talking to an LLM endpoint; retryable."""
