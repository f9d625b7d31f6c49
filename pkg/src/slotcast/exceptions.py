"""Exception and warning types raised across the package."""


class SlotcastError(Exception):
    """Base class for all package errors."""


# market data
class MalformedRow(SlotcastError, ValueError):
    pass


class InvariantViolation(SlotcastError, ValueError):
    pass


class DuplicateTimestamp(SlotcastError, ValueError):
    pass


class BadParams(SlotcastError, ValueError):
    pass


class EmptySeries(SlotcastError, ValueError):
    pass


# features / models
class EmptyTrain(SlotcastError, ValueError):
    pass


class RankDeficient(SlotcastError, ValueError):
    pass


class SingleClass(SlotcastError, ValueError):
    pass


class TooFewRows(SlotcastError, ValueError):
    pass


class ShapeMismatch(SlotcastError, ValueError):
    pass


class TooFewWeeks(SlotcastError, ValueError):
    pass


class AllZeroResiduals(SlotcastError, ValueError):
    pass


# evaluation
class LengthMismatch(SlotcastError, ValueError):
    pass


class UndefinedMetric(SlotcastError, ValueError):
    pass


# orchestration
class ConfigError(SlotcastError, ValueError):
    pass


class DivisionDegenerateWarning(UserWarning):
    """A feature row was dropped because a percent-change denominator was zero."""


class NonConvergenceWarning(UserWarning):
    """An iterative fit stopped at its iteration cap before meeting tolerance."""


class SeparationWarning(UserWarning):
    """Logistic coefficients diverged, indicating (quasi-)perfect separation."""


class IoError(SlotcastError, OSError):
    """A report or bundle file could not be read or written."""
