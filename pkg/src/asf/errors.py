"""Shared exception types."""


class AsfError(Exception):
    """Base class for all package errors."""


class InsufficientPrecision(AsfError):
    """A truncated Laurent computation cannot certify the requested quantity."""


class TruncationUnstable(AsfError):
    """A result failed to stabilize under repeated precision doubling."""


class RankDeficient(AsfError):
    pass


class DegenerateForm(AsfError):
    pass


class NotRegularSemisimple(AsfError):
    pass


class NotNilpotent(AsfError):
    pass


class NonStandardForm(AsfError):
    pass


class UnsupportedCentralizer(AsfError):
    pass


class UnsupportedGroup(AsfError):
    pass


class UnsupportedWeylGroup(AsfError):
    pass


class UnsupportedComponentGroup(AsfError):
    pass


class RegionNotMeasurable(AsfError):
    pass


class NotInvariant(AsfError):
    pass


class NotStabilized(AsfError):
    """A count changed between the last two cell budgets."""


class SingularSystem(AsfError):
    pass


class DepthTooSmall(AsfError):
    pass


class PoorFit(AsfError):
    pass


class ParseError(AsfError):
    pass


class NotInLieAlgebra(AsfError):
    pass


class BadCharacteristic(AsfError):
    pass
