"""Exception hierarchy shared across the pipeline."""


class CiteweaveError(Exception):
    """Base class for all domain errors raised by this package."""


class ValidationError(CiteweaveError):
    """A corpus or document violates a structural invariant."""


class CorpusFormatError(CiteweaveError):
    """Corpus file is missing, truncated, or not valid corpus JSON."""


class ParagraphNotFoundError(CiteweaveError):
    def __init__(self, para_id: str):
        super().__init__(f"unknown paragraph id: {para_id}")
        self.para_id = para_id


class EmptyDocumentError(CiteweaveError):
    """No text spans to analyze."""


class UnsupportedDocumentError(CiteweaveError):
    """PDF cannot be processed (encrypted, no text layer, unparseable)."""


class BudgetExceededError(CiteweaveError):
    """A prompt would not fit the model context window. Caller bug."""


class BackendUnavailableError(CiteweaveError):
    """Backend kept failing after retries."""


class TransientBackendError(CiteweaveError):
    """Retryable backend failure (rate limit, timeout)."""


class AuthMissingError(CiteweaveError):
    """Credentials environment variable is not set."""


class EmptyCorpusError(CiteweaveError):
    """Operation requires a corpus with at least one summarized paragraph."""


class AlignmentParseError(CiteweaveError):
    """Line-alignment reply could not be parsed at all."""

    def __init__(self, message: str, raw_reply: str):
        super().__init__(message)
        self.raw_reply = raw_reply


class MetricDomainError(CiteweaveError):
    """Metric input outside its documented domain."""


class UndefinedScoreError(CiteweaveError):
    """Score is undefined for this item (e.g. zero statements)."""


class DatasetGenerationError(CiteweaveError):
    """Dataset generation aborted after repeated parse failures."""


class EmptyReportError(CiteweaveError):
    """evaluate_run called with no items."""
