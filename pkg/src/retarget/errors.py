"""Exception types shared across the retargeting engine."""


class RetargetError(Exception):
    """Base class for all engine errors."""


class DecodeError(RetargetError):
    """File is corrupt or in an unsupported format."""


class ZeroDimension(RetargetError):
    """An image or map has a zero-sized axis."""


class DimensionMismatch(RetargetError):
    """Two rasters that must agree in size do not."""


class DegenerateTarget(RetargetError):
    """The requested target size would leave an empty axis."""


class InvalidSeam(RetargetError):
    """A seam is out of bounds or violates 8-connectivity."""


class ProviderFailure(RetargetError):
    """An external energy provider failed or produced a bad map."""


class DegenerateMesh(RetargetError):
    """Mesh construction got an unusable cell size."""


class Foldover(RetargetError):
    """A solved quad has negative signed area (self-intersecting warp)."""


class NonConvergence(RetargetError):
    """The warp solver did not reach the required residual."""


class FrameDimensionMismatch(RetargetError):
    """Frames of one video sequence differ in size."""


class CoverageError(RetargetError):
    """A deformation field does not cover the queried source point."""


class KindMismatch(RetargetError):
    """A deformation field of the wrong kind was passed to a metric."""
