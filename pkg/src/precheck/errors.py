"""Exception hierarchy shared across the simulator."""


class PrecheckError(Exception):
    """Base class for all simulator errors."""


class ConfigError(PrecheckError, ValueError):
    """Invalid scenario or object configuration."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class FramingError(PrecheckError, ValueError):
    """Bit or symbol stream does not split into whole symbols/blocks."""


class ChannelError(PrecheckError, ValueError):
    """Channel is numerically unusable (e.g. rank-deficient convolution matrix)."""


class SelectionError(PrecheckError, ValueError):
    """Precheck selection falls outside the doubled table."""


class ComparisonError(PrecheckError, ValueError):
    """Bit vectors cannot be compared (empty or length mismatch)."""


class ProtocolError(PrecheckError):
    """A message arrived in a phase where it is not defined."""


class TrialError(PrecheckError):
    """A Monte Carlo trial did not reach a terminal state."""
