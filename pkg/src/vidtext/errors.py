"""Exception hierarchy shared across the package.

Errors are split into families so the CLI can map them to distinct exit
codes: configuration problems, contract violations (caller bugs or broken
backends), transport faults (remote backend unreachable), and capability
gaps (backend cannot do what was asked).
"""


class VidtextError(Exception):
    """Base class for all package errors."""


class ContractViolation(VidtextError, ValueError):
    """An operation precondition was violated (bad shapes, bad ranges, ...)."""


class ConfigError(VidtextError):
    """Run configuration is invalid or references missing files."""


class IngestError(VidtextError):
    """A raw dataset file failed validation; carries offending records."""

    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = list(records or [])


class CapabilityError(VidtextError):
    """The backend does not support the requested operation."""


class TransportError(VidtextError):
    """Remote backend could not be reached after retries."""

    def __init__(self, message, attempts=0, last_status=None):
        super().__init__(message)
        self.attempts = attempts
        self.last_status = last_status


class RerankInterrupted(VidtextError):
    """Scoring failed mid-rerank; progress up to the failure was checkpointed."""

    def __init__(self, message, progress_path=None, completed=0):
        super().__init__(message)
        self.progress_path = progress_path
        self.completed = completed


class CacheError(VidtextError):
    """Base class for embedding-cache file problems."""


class CacheVersionError(CacheError):
    """Cache file carries an unsupported format version."""


class CacheTruncatedError(CacheError):
    """Cache file ended before the declared record count was read."""


class CacheChecksumError(CacheError):
    """Cache payload does not match its trailing CRC32."""
