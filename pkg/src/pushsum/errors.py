"""Exception types shared across the package."""


class PushSumError(Exception):
    """Base class for all package errors."""


class DimensionError(PushSumError, ValueError):
    """Mismatched or invalid array/graph dimensions."""


class RangeError(PushSumError, ValueError):
    """Invalid time range (e.g. t < s in a product request)."""


class DomainError(PushSumError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class CapabilityError(PushSumError, ValueError):
    """Request exceeds a guarded capability (size caps, underflow caps)."""


class ProtocolError(PushSumError, ValueError):
    """Violation of a protocol precondition (e.g. missing self-loop)."""


class ConsistencyError(PushSumError, ValueError):
    """Mutually inconsistent inputs (e.g. product vs. weight vector)."""


class ConfigError(PushSumError, ValueError):
    """Malformed or semantically invalid configuration input."""
