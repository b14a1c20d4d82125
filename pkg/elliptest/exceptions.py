"""
Exceptions raised by elliptest.

All domain errors derive from ``ElliptestError``, itself a ``ValueError`` so
callers that only guard against bad input keep working.
"""

from typing import Sequence, Tuple


class ElliptestError(ValueError):
    """Base class for every error raised by the package."""


class InvalidInput(ElliptestError):
    """Input data or arguments outside the documented domain."""


class InvalidK(ElliptestError):
    """Neighbor depth k incompatible with the sample size."""


class DuplicatePoints(ElliptestError):
    """Two or more observations coincide, so a log nearest-neighbor distance is undefined."""

    def __init__(self, indices: Sequence[int], message: str = ''):
        self.indices: Tuple[int, ...] = tuple(int(i) for i in indices)
        shown = ', '.join(str(i) for i in self.indices[:10])
        if len(self.indices) > 10:
            shown += ', ...'
        super().__init__(
            message or f"duplicate points at rows [{shown}] ({len(self.indices)} affected); "
                       "remove them or pass a jitter"
        )


class NotPositiveDefinite(ElliptestError):
    """A covariance matrix is singular or numerically indefinite."""


class WeightInfeasible(ElliptestError):
    """The weight constraint system has no solution on the allowed support."""


class DegenerateDirection(ElliptestError):
    """An observation sits exactly at the center, so its direction is undefined."""


class ConfigError(ElliptestError):
    """A configuration file or option set is malformed."""
