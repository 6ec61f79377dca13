"""Exception types raised across the pipeline."""


class RadarBevError(Exception):
    """Base class for all pipeline errors."""


class InvalidPoseError(RadarBevError):
    """Pose has a non-finite field or a negative timestamp."""


class FrameMismatchError(RadarBevError):
    """Point clouds from different coordinate frames were mixed."""


class EmptyInputError(RadarBevError):
    """An operation that requires at least one element got none."""


class BoundsError(RadarBevError):
    """A point violates the raster bounds precondition."""


class ShapeError(RadarBevError):
    """Image dimensions do not match."""


class GapExceededError(RadarBevError):
    """No pose lies within the allowed timestamp gap of a query."""


class IngestionError(RadarBevError):
    """A data file is missing, malformed, or contains invalid values."""


class PoseInsideObjectError(RadarBevError):
    """A sensor pose lies inside a scene object; rays would start occluded."""
