class ReszonoError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInputError(ReszonoError, ValueError):
    """Malformed numeric input: non-finite entries, dimension mismatch, bad bounds."""


class ConfigError(ReszonoError, ValueError):
    """Scenario or policy configuration is invalid.

    ``path`` names the offending field, e.g. ``sensors[2].V.generators``.
    """

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class EmptySetError(ReszonoError, ValueError):
    """Operation needs a non-empty set but received an empty one."""


class InvariantViolation(ReszonoError, RuntimeError):
    """A runtime guarantee failed, which certifies that an assumption was breached."""


class EmptyEstimateError(InvariantViolation):
    """The measurement update produced no non-empty member."""
