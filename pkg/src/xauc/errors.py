"""Exception types raised by the audit library.

Every validation failure derives from :class:`XaucError` (itself a
``ValueError``) so callers can catch the whole family at once; the CLI maps
these to exit code 1.
"""


class XaucError(ValueError):
    """Base class for input/validation errors."""


class EmptyInput(XaucError):
    pass


class NonFiniteScore(XaucError):
    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"non-finite score {value!r} at index {index}")


class EmptyClass(XaucError):
    pass


class MissingCell(XaucError):
    def __init__(self, group, outcome, context: str = ""):
        self.group = group
        self.outcome = outcome
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}no samples in cell (group={group!r}, outcome={outcome})")


class MissingGroup(XaucError):
    pass


class LengthMismatch(XaucError):
    pass


class ScoreOutOfRange(XaucError):
    pass


class InsufficientSamples(XaucError):
    pass


class SingleClassData(XaucError):
    pass


class DimensionMismatch(XaucError):
    pass


class InfeasibleBounds(XaucError):
    pass


class DegenerateSplit(XaucError):
    pass


class MissingColumn(XaucError):
    pass


class NonNumericFeature(XaucError):
    def __init__(self, row, column, value):
        self.row = row
        self.column = column
        super().__init__(f"non-numeric value {value!r} in column {column!r} at row {row}")


class ConvergenceWarning(UserWarning):
    """An iterative fit stopped at ``max_iter`` before meeting its tolerance."""
