"""Exception types raised across the pipeline."""


class FusemineError(Exception):
    """Base class for all pipeline errors."""


class SchemaMismatchError(FusemineError):
    """CSV header or instance layout disagrees with the declared schema."""


class ParseError(FusemineError):
    """A cell could not be parsed under its attribute kind.

    ``row`` is the 1-based data row (header excluded), ``column`` the
    attribute name.
    """

    def __init__(self, row: int, column: str, message: str):
        super().__init__(f"row {row}, column {column!r}: {message}")
        self.row = row
        self.column = column


class DuplicateIdError(FusemineError):
    """The same id value occurs in more than one row of a table."""


class IdMismatchError(FusemineError):
    """Tables of a bundle do not share an identical id set."""

    def __init__(self, message: str, offending_ids=()):
        super().__init__(message)
        self.offending_ids = tuple(offending_ids)


class EmptyColumnError(FusemineError):
    """A column operation needs at least one non-missing value."""


class OutOfRangeScoreError(FusemineError):
    """An exam score lies outside the 0-10 grading scale."""


class MixedKindGroupError(FusemineError):
    """Session columns of one base attribute disagree on kind or labels."""


class LengthMismatchError(FusemineError):
    """Two paired sequences differ in length."""


class EmptySubsetError(FusemineError):
    """Subset merit is undefined for an empty attribute subset."""


class UnknownAttributeError(FusemineError):
    """A named attribute does not exist in the table."""


class InvalidParamsError(FusemineError):
    """Learner parameters are out of range or inconsistent."""


class RuleSyntaxError(FusemineError):
    """Rule text does not follow the IF/THEN display dialect."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SingleClassTruthError(FusemineError):
    """Ranking quality is undefined when no class has both kinds of instances."""


class TooFewRowsError(FusemineError):
    """Fold construction is impossible for the requested configuration."""


class InfeasibleRulesetError(FusemineError):
    """The planted ruleset cannot generate every requested class."""
