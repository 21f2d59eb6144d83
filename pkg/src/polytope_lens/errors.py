"""Exception types shared across the package.

Everything that signals bad caller input derives from ``ValueError`` so the
CLI can map it to exit status 2; runtime failures (diverged training) do not.
"""


class PolytopeError(Exception):
    pass


class InvalidInputError(PolytopeError, ValueError):
    """Rejected argument: wrong dimension, bad parameter, malformed span."""


class NetworkFormatError(InvalidInputError):
    """A network file could not be parsed or failed validation."""


class DegenerateInputError(InvalidInputError):
    """Input geometry makes the quantity undefined (coincident points, collinear anchors)."""


class UnsupportedError(InvalidInputError):
    pass


class TrainingDivergedError(PolytopeError, RuntimeError):
    pass
