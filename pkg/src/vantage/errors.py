"""Exception hierarchy for the vantage package."""


class VantageError(Exception):
    """Base class for all vantage errors."""


class DegenerateInputError(VantageError):
    """Input is geometrically degenerate (coincident points, empty mesh, ...)."""


class DegenerateLogarithmError(VantageError):
    """Principal matrix logarithm is not unique (rotation angle at pi)."""


class UnderdeterminedInputError(VantageError):
    """Not enough (or collinear) correspondences to determine a transform."""


class ConvergenceError(VantageError):
    """Iterative solver failed to converge.

    Carries the best iterate found so far in ``best`` when available.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class InvalidMeshError(VantageError):
    """Mesh violates a structural requirement (e.g. non-manifold edges)."""

    def __init__(self, message, edges=None):
        super().__init__(message)
        self.edges = edges or []


class ParseError(VantageError):
    """A file could not be parsed; carries a line number when known."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line
