"""Set-based resilient state estimation for LTI systems under sensor attacks."""

from .errors import (
    ConfigError,
    EmptyEstimateError,
    EmptySetError,
    InvalidInputError,
    InvariantViolation,
    ReszonoError,
)
from .setops import ConstrainedZonotope, IntervalBox, Zonotope

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EmptyEstimateError",
    "EmptySetError",
    "InvalidInputError",
    "InvariantViolation",
    "ReszonoError",
    "ConstrainedZonotope",
    "IntervalBox",
    "Zonotope",
]
