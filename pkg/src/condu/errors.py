"""Exception types shared across the package."""


class ConduError(Exception):
    """Base class for all package-specific errors."""


class InvalidBandwidth(ConduError, ValueError):
    pass


class BandwidthOutOfRange(ConduError, ValueError):
    pass


class DimensionMismatch(ConduError, ValueError):
    pass


class DegenerateSample(ConduError, ValueError):
    pass


class BruteForceBudgetExceeded(ConduError, RuntimeError):
    """Complete enumeration would exceed the tuple budget; use the windowed
    or incomplete modes instead."""


class BudgetExceedsPopulation(ConduError, ValueError):
    pass


class MeasureTooLarge(ConduError, RuntimeError):
    pass


class InvalidProjectionOrder(ConduError, ValueError):
    pass


class NoClosedFormConditional(ConduError, ValueError):
    pass


class ZeroDensityWindow(ConduError, ValueError):
    pass


class SampleTooSmall(ConduError, ValueError):
    pass


class EmptyBandwidthRange(ConduError, ValueError):
    pass


class BoundedClassHasNoRemainder(ConduError, ValueError):
    pass


class SchemaError(ConduError, ValueError):
    """Malformed input file or config; message carries the offending row
    or field."""


class IoError(ConduError, OSError):
    pass
