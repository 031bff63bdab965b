"""Exception hierarchy.

Everything derives from :class:`PigeonsimError`; the input-validation
errors also derive from :class:`ValueError` so callers that only care about
bad arguments can catch that.
"""


class PigeonsimError(Exception):
    pass


class InvalidShapeError(PigeonsimError, ValueError):
    """Register shape outside N >= 1, M >= 2."""


class ShapeMismatchError(PigeonsimError, ValueError):
    """Operands live on different registers."""


class DimensionCapError(PigeonsimError, ValueError):
    """M**N exceeds the configured dense-dimension cap."""


class InvalidMeasurementError(PigeonsimError, ValueError):
    """Projectors are not a complete orthogonal decomposition."""


class ImpossiblePostselectionError(PigeonsimError):
    """The post-selected state cannot be reached."""


class UndefinedWeakValueError(PigeonsimError):
    """Pre- and post-selected states are orthogonal."""


class InsufficientPointsError(PigeonsimError, ValueError):
    """Too few usable points for a fit."""
