"""Exception hierarchy shared by every stage of the pipeline."""


class DualCausalError(Exception):
    """Base class for all errors raised by this package."""


# ingestion / schema
class SchemaError(DualCausalError):
    pass


class UnknownColumn(SchemaError):
    pass


class UnparseableCell(DualCausalError):
    def __init__(self, column, row, value):
        self.column = column
        self.row = row
        self.value = value
        super().__init__(f"row {row}: cannot parse {value!r} for column {column!r}")


class EmptyTable(DualCausalError):
    pass


class NotCategorical(DualCausalError):
    pass


# discretization / encoding
class DegenerateInput(DualCausalError):
    pass


class SpecMismatch(DualCausalError):
    pass


class MissingData(DualCausalError):
    pass


class EmptyCategory(DualCausalError):
    pass


# statistics
class TooFewSamples(DualCausalError):
    pass


class ZeroVariance(DualCausalError):
    pass


class SingularCovariance(DualCausalError):
    def __init__(self, x, y, cond_set, message=None):
        self.x = x
        self.y = y
        self.cond_set = tuple(cond_set)
        super().__init__(message or f"singular covariance for ({x}, {y} | {sorted(self.cond_set)})")


# discovery
class SingularityAbort(DualCausalError):
    """Raised when a CI test hits a singular covariance submatrix during search.

    ``names`` holds the column names of the offending (x, y, S) triple.
    """

    def __init__(self, x, y, cond_set, names=None):
        self.x = x
        self.y = y
        self.cond_set = tuple(cond_set)
        self.names = names
        if names is not None:
            nx, ny, ns = names
            detail = f"{nx!r} vs {ny!r} given {list(ns)}"
        else:
            detail = f"({x}, {y} | {list(self.cond_set)})"
        super().__init__(
            "singular covariance submatrix for "
            + detail
            + "; check for constant, duplicate or exhaustive (full one-hot) category columns"
        )


# graphs / pipeline
class ParseError(DualCausalError):
    def __init__(self, message, position=None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class NameCollision(DualCausalError):
    pass


class NodeMismatch(DualCausalError):
    pass
