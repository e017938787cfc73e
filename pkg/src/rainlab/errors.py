"""Exception hierarchy shared by every rainlab module."""


class RainlabError(Exception):
    """Base class for all errors raised deliberately by rainlab."""


class InputError(RainlabError):
    """Missing or unusable input data (e.g. an empty image folder)."""


class FormatError(RainlabError):
    """Image file has an unsupported layout or bit depth."""


class CapacityError(RainlabError):
    """More patches were requested than a folder or pool can provide."""

    def __init__(self, message, available=None):
        super().__init__(message)
        self.available = available


class ConfigError(RainlabError):
    """Invalid rain spec, experiment config or CLI option."""


class ShapeError(RainlabError):
    """Array dimensions do not agree."""


class MetricError(RainlabError):
    """A metric is undefined for the given input (e.g. an empty mask)."""


class DegenerateCurveError(MetricError):
    """Curve normalization over values with zero span."""


class NumericError(RainlabError):
    """NaN or Inf appeared in a forward or backward computation."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class StateError(RainlabError):
    """Operation called in the wrong order (e.g. backward with no graph)."""
