"""Exception types raised by the library."""


class TrafficLabError(Exception):
    """Base class for all library-specific errors."""


class ConfigError(TrafficLabError):
    """A configuration value is missing, malformed, or out of range."""


class GeometryError(TrafficLabError):
    """Invalid geometric input (degenerate polyline, bad box dims, ...)."""


class MapError(TrafficLabError):
    """Map generation parameters violate a documented constraint."""


class LogFormatError(TrafficLabError):
    """A serialized scene log is malformed.

    Attributes:
        offset: byte offset of the first bad region, or -1 if unknown.
    """

    def __init__(self, message, offset=-1):
        super().__init__(message)
        self.offset = offset


class CheckpointError(TrafficLabError):
    """A model checkpoint is missing, corrupt, or of the wrong kind."""


class TrainingError(TrafficLabError):
    """Training diverged or was fed an unusable dataset."""


class MetricInputError(TrafficLabError):
    """Metric inputs violate a precondition (unnormalized mass, shape mismatch)."""
