"""Exception types raised by locdens."""


class LocdensError(Exception):
    """Base class for all library errors."""


class ConfigurationError(LocdensError, ValueError):
    """A state, grid or scenario cannot be built as requested."""


class IncompatibleStatesError(LocdensError, ValueError):
    """States with different mass/dimension or grids were combined."""


class SingularWeightError(LocdensError, ValueError):
    """A massless state is not suppressed at p = 0 where the weights blow up."""


class ResolutionError(LocdensError, ValueError):
    """The momentum grid cannot resolve the requested spatial points."""


class DomainError(LocdensError, RuntimeError):
    """Spatial domain extension or cumulative inversion failed."""


class TailFitError(LocdensError, ValueError):
    """The density is not usable for a log-linear tail fit on the window."""
