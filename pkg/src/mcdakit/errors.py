"""Exception hierarchy.

Two families matter to callers: :class:`ValidationError` covers bad input
(CLI exit code 2), :class:`NumericalError` covers internal numerical trouble
(CLI exit code 3).
"""

from __future__ import annotations


class McdaError(Exception):
    """Base class for all package errors."""


class ValidationError(McdaError):
    """Input or configuration rejected before computation."""


class NumericalError(McdaError):
    """Computation failed or produced an inconsistent result."""


class MalformedRow(ValidationError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ScoreOutOfRange(ValidationError):
    pass


class DuplicateTriple(ValidationError):
    pass


class MissingCell(ValidationError):
    def __init__(self, pairs):
        listed = ", ".join(f"({c}, {q})" for c, q in pairs)
        super().__init__(f"missing (concept, criterion) cells: {listed}")
        self.pairs = tuple(pairs)


class NonPermutation(ValidationError):
    pass


class UnknownItem(ValidationError):
    pass


class UnknownCriterion(ValidationError):
    pass


class InconsistentProfiles(ValidationError):
    pass


class EmptyMatrix(ValidationError):
    pass


class DegenerateDesign(ValidationError):
    pass


class InvalidDegrees(ValidationError):
    pass


class RaterCountTooSmall(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class KTooLarge(ValidationError):
    pass


class DimsTooLarge(ValidationError):
    pass


class InsufficientPanel(ValidationError):
    pass


class SectionAbsent(ValidationError):
    pass


class NumericalBreakdown(NumericalError):
    pass
