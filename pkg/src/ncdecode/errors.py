"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
anything else -> 3.
"""


class NcdecodeError(Exception):
    """Base class for all package errors."""


class ConfigError(NcdecodeError):
    """Invalid configuration: bad spec values, guard violations, bad flags."""


class DataError(NcdecodeError):
    """Malformed or missing input data (datasets, model files, collections)."""


class RemoteScorerError(NcdecodeError):
    """Base class for scorer wire-protocol failures; carries the request id."""

    def __init__(self, message, request_id=None, retriable=False):
        super().__init__(message)
        self.request_id = request_id
        self.retriable = retriable


class TransportError(RemoteScorerError):
    """Connection or timeout failure; safe to retry."""

    def __init__(self, message, request_id=None):
        super().__init__(message, request_id=request_id, retriable=True)


class ProtocolError(RemoteScorerError):
    """Malformed reply or id mismatch."""


class NormalizationError(RemoteScorerError):
    """Remote distribution failed the normalization check."""
