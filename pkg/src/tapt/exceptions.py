"""Exception hierarchy shared by every tapt module."""


class TaptError(Exception):
    """Base class for all errors raised by tapt."""


class DimensionError(TaptError, ValueError):
    """A spin vector or array has the wrong length or shape."""


class ClampedSiteError(TaptError, ValueError):
    """An operation that requires a free spin was given a clamped one."""


class SizeError(TaptError, ValueError):
    """A problem is too large for an exact method."""


class DomainError(TaptError, ValueError):
    """An argument lies outside its mathematical domain."""


class GeometryError(TaptError, ValueError):
    """A planar embedding could not be constructed."""


class NumericError(TaptError, ArithmeticError):
    """A numerical evaluation failed (singular matrix, overflow, ...)."""


class FormatError(TaptError, ValueError):
    """A file does not follow its declared format."""


class LayoutError(TaptError, ValueError):
    """A token layout does not match the problem it is applied to."""


class TrainingDivergedError(TaptError, RuntimeError):
    """Training produced a non-finite loss."""


class ConfigError(TaptError, ValueError):
    """An experiment configuration is invalid."""
