"""Exception hierarchy.

Errors fall in two families so the CLI can map them to exit codes:
``DataError`` (bad or unusable input, exit 1) and ``FitError`` (the
estimation itself failed, exit 2).
"""

from __future__ import annotations


class SegtrendError(Exception):
    """Base class for every error raised by this package."""


class DataError(SegtrendError):
    pass


class FitError(SegtrendError):
    pass


# --- model / design ---------------------------------------------------------


class InvalidBreakpoints(DataError):
    """Breakpoints are unsorted or contain duplicates."""


class BreakOutOfRange(DataError):
    """A breakpoint lies outside the open interval (1, n)."""


class SingularDesign(FitError):
    """The design matrix is rank deficient."""


# --- structural-change search -----------------------------------------------


class TooManyBreaks(DataError):
    """Not enough observations for the requested number of breaks."""


# --- segmented refinement -----------------------------------------------------


class DegenerateSlopeChange(FitError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(
            f"slope change at breakpoint {index + 1} vanished ({value:.3g}); "
            "breakpoint is not identifiable"
        )


class BreakEscaped(FitError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(
            f"breakpoint {index + 1} left the admissible range twice (last proposal {value:.4f})"
        )


class BreaksCollided(FitError):
    def __init__(self, positions):
        self.positions = list(positions)
        pretty = ", ".join(f"{p:.3f}" for p in self.positions)
        super().__init__(f"breakpoints collided or crossed: [{pretty}]; retry with fewer breaks")


class NotConverged(FitError):
    """Raised only in strict mode when the refinement hit ``max_iter``."""


# --- trend metrics ------------------------------------------------------------


class NonPositiveValue(DataError):
    def __init__(self, message: str, where=None):
        self.where = where
        super().__init__(message)


class InvalidWeights(DataError):
    pass


# --- data pipeline ------------------------------------------------------------


class ParseError(DataError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class DateOrderError(DataError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class SchemaError(DataError):
    def __init__(self, message: str, column: str | None = None):
        self.column = column
        super().__init__(message)


class GapError(DataError):
    def __init__(self, missing):
        self.missing = missing
        super().__init__(f"date gap: {missing.isoformat()} is missing (use --fill-gaps)")


class MissingPopulation(DataError):
    pass


class ThresholdNotReached(DataError):
    pass


class FetchError(DataError):
    pass
