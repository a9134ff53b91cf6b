"""Exception hierarchy.

Every model or numeric failure raised by the lab derives from :class:`LabError`
(itself a ``ValueError``), so callers can catch one type. The CLI maps
``LabError`` to exit code 2.
"""

from __future__ import annotations


class LabError(ValueError):
    """Base class for model, numeric and input-contract failures."""


class NotSymmetric(LabError):
    pass


class NotPositiveSemiDefinite(LabError):
    pass


class NotPositiveDefinite(LabError):
    pass


class BadIndexSet(LabError):
    pass


class BadCoefficients(LabError):
    pass


class BadInnovation(LabError):
    pass


class OddLengthUnsupported(LabError):
    pass


class BadLength(LabError):
    pass


class TooLarge(LabError):
    pass


class ShapeMismatch(LabError):
    pass


class DimMismatch(LabError):
    pass


class DimTooLarge(LabError):
    pass


class TwoSidedDimTooLarge(LabError):
    pass


class MissingCovariance(LabError):
    pass


class BadNesting(LabError):
    pass


class NonpositiveVariance(LabError):
    pass


class BadQ(LabError):
    pass


class BadM(LabError):
    pass


class BadObservation(LabError):
    pass


class EmptyObservations(LabError):
    pass


class DegenerateDesign(LabError):
    pass


class BadBatchFile(LabError):
    pass


class ConfigError(LabError):
    pass
