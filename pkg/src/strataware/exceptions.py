"""Exception types raised by the strataware library.

Validation failures subclass ValueError so callers that only know the
standard library can still catch them; semantic failures that are not a
caller mistake (e.g. no cost-reducing perturbation exists) subclass the
bare package error.
"""


class StratawareError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(StratawareError, ValueError):
    """Array shapes disagree with the taxonomy or with each other."""


class NotSymmetric(StratawareError, ValueError):
    """A matrix that must be symmetric is not, beyond tolerance."""


class NotPositiveDefinite(StratawareError, ValueError):
    """A matrix that must be positive definite failed its Cholesky check."""


class ImmutableViolation(StratawareError, ValueError):
    """A candidate adaptation changed a feature that cannot change."""


class UnknownFeature(StratawareError, ValueError):
    """A feature name does not appear in the taxonomy."""


class OrderingViolation(StratawareError, ValueError):
    """Two cost models are not ordered in the positive-definite sense."""


class NoValidPerturbation(StratawareError):
    """No same-block off-diagonal perturbation raises adaptation cost."""


class SingleClassData(StratawareError, ValueError):
    """Training data contains only one label value."""


class NonFiniteLoss(StratawareError, ArithmeticError):
    """An objective evaluation produced a non-finite loss or gradient."""


class MissingColumn(StratawareError, ValueError):
    """A CSV file lacks a column required by the taxonomy or label spec."""


class NonNumericCell(StratawareError, ValueError):
    """A CSV feature cell could not be parsed as a number."""


class UnknownLabelValue(StratawareError, ValueError):
    """The label column does not match the declared positive/negative values."""


class TooFewRows(StratawareError, ValueError):
    """Not enough rows for the requested operation (e.g. k-fold split)."""


class NoOracle(StratawareError, ValueError):
    """The dataset carries no ground-truth label probability function."""
