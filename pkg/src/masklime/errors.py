"""Exception types shared across the package."""


class MasklimeError(Exception):
    """Base class for all package-specific errors."""


class UnreadableImage(MasklimeError):
    """File missing, not an image, or not a format we decode."""


class ZeroDimension(MasklimeError):
    """An image or requested size has a zero-length side."""


class DegeneratePolygon(MasklimeError):
    """Polygon has fewer than 3 distinct vertices."""


class ShapeMismatch(MasklimeError):
    """Arrays that must share dimensions do not."""


class PredictorUnavailable(MasklimeError):
    """External predictor could not be reached after bounded retries."""


class ProtocolViolation(MasklimeError):
    """External predictor answered, but the response breaks the protocol."""


class SingularSystem(MasklimeError):
    """Unregularized surrogate fit on a rank-deficient design."""


class UniformImage(MasklimeError):
    """Single-valued image: Otsu's between-class variance is undefined."""


class EmptyAnnotation(MasklimeError):
    """Tumor annotation mask has zero area."""


class EmptyMask(MasklimeError):
    """Brain mask has zero area where a coverage denominator is needed."""


class InsufficientClassMembers(MasklimeError):
    """A class has fewer members than the requested number of folds."""
