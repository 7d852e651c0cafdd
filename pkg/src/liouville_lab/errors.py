"""Exception hierarchy shared by all modules."""


class LabError(Exception):
    """Base class for every error raised by liouville_lab."""


class ConfigurationError(LabError, ValueError):
    """Unsupported surface kind, resolution, variant or parameter combination."""


class ProjectionDomainError(LabError):
    """Ambient point lies outside the tubular neighbourhood of the surface."""


class ThresholdError(LabError):
    """The thresholded set S(f) = {T >= tau} is empty.

    Carries the largest T value observed so the caller can pick a smaller tau.
    """

    def __init__(self, message, max_T):
        super().__init__(message)
        self.max_T = max_T


class PreconditionError(LabError):
    """An operation was called outside its domain of definition."""


class ResolutionError(LabError):
    """A bubble core is not resolved by the grid (fewer than 4 nodes inside)."""


class NumericalBlowupError(LabError, FloatingPointError):
    """A solver iterate became non-finite."""
