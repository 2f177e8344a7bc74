"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: validation-type failures exit 1,
backend failures (protocol or transport) exit 2.
"""

from __future__ import annotations


class RetrogenError(Exception):
    """Base class for all package-specific errors."""


class ContractViolation(RetrogenError):
    """An operation was called with arguments that violate its contract."""


class ValidationError(RetrogenError):
    """User-supplied input (config, CLI flags, template slots) is invalid."""


class ConfigurationError(ValidationError):
    """The run setup is unusable (empty corpus, missing model, ...)."""


class IngestionError(ValidationError):
    """A response/record file contains rows that cannot be accepted.

    ``rows`` lists the offending (line_number, reason) pairs.
    """

    def __init__(self, message: str, rows: list[tuple[int, str]] | None = None):
        super().__init__(message)
        self.rows = rows or []


class BackendError(RetrogenError):
    """Base for failures talking to an inference backend."""


class ProtocolError(BackendError):
    """The backend rejected the request (well-formed error response).

    ``kind`` is the machine-readable error type from the wire
    (``unknown_model``, ``context_overflow``, ...).
    """

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind

    def __reduce__(self):
        return (type(self), (self.kind, str(self).split(": ", 1)[1]))


class TransportError(BackendError):
    """The backend could not be reached at all (network-level failure)."""


class StepStarvationError(RetrogenError):
    """Every candidate token was blocked at a beam-search step."""

    def __init__(self, step: int):
        super().__init__(f"all beams banned at decode step {step}")
        self.step = step


class PipelineAborted(RetrogenError):
    """A generation run died mid-way; carries the partial trace for persistence."""

    def __init__(self, cause: Exception, trace):
        super().__init__(f"pipeline aborted: {cause}")
        self.cause = cause
        self.trace = trace
