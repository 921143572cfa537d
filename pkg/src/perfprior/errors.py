"""Exception hierarchy shared across the package."""


class PerfPriorError(Exception):
    """Base class for all perfprior errors."""


class ValidationError(PerfPriorError, ValueError):
    """A value or data structure violates an invariant."""


class ParseError(PerfPriorError, ValueError):
    """A file does not conform to its expected format."""


class InsufficientDataError(PerfPriorError, ValueError):
    """Too few data points for the requested fit or score."""


class IrregularSpacingError(PerfPriorError, ValueError):
    """Parameter values follow neither a geometric nor an arithmetic rule."""


class ModelingError(PerfPriorError, RuntimeError):
    """Model construction failed for a call path."""
