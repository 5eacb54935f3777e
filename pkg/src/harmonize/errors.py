"""Exception hierarchy shared by every harmonize module."""

from __future__ import annotations


class HarmonizeError(Exception):
    """Base class for all errors raised by the library."""


class NotFound(HarmonizeError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "not found"


class InvalidParams(HarmonizeError, ValueError):
    """A primitive was constructed with incomplete or inconsistent parameters."""


class ParseError(HarmonizeError, ValueError):
    """A serialized document could not be parsed."""


class UnknownPrimitive(ParseError):
    pass


class SchemaError(HarmonizeError, ValueError):
    """A document parsed but does not match the expected structure."""


class StorageFailure(HarmonizeError, OSError):
    pass


# Run-time errors raised while applying a primitive to a single value.


class PrimitiveError(HarmonizeError):
    """Raised by a primitive for a value it cannot transform.

    ``op_index`` (1-based) and ``primitive`` are filled in when the error
    surfaces through a rule's operation chain.
    """

    op_index: int | None = None
    primitive: str | None = None

    def __str__(self) -> str:
        msg = super().__str__()
        if self.op_index is not None:
            return f"operation {self.op_index} ({self.primitive}): {msg}"
        return msg


class CastError(PrimitiveError):
    pass


class UnmappedCode(PrimitiveError):
    pass


class UnbinnedValue(PrimitiveError):
    pass


class BadVector(PrimitiveError):
    pass


class DateParseError(PrimitiveError):
    pass


class TypeMismatch(PrimitiveError):
    pass


class ValueOverflow(PrimitiveError):
    """Result is not representable (non-finite decimal, integer beyond 64 bits)."""


class DimensionMismatch(InvalidParams, PrimitiveError):
    """Unit conversion requested between different physical dimensions."""


# Data file and job errors.


class HeaderMismatch(HarmonizeError, ValueError):
    def __init__(self, missing: list[str], unknown: list[str], duplicated: list[str] | None = None):
        self.missing = list(missing)
        self.unknown = list(unknown)
        self.duplicated = list(duplicated or [])
        parts = []
        if self.missing:
            parts.append("missing columns: " + ", ".join(self.missing))
        if self.unknown:
            parts.append("unknown columns: " + ", ".join(self.unknown))
        if self.duplicated:
            parts.append("duplicated columns: " + ", ".join(self.duplicated))
        super().__init__("; ".join(parts) or "header mismatch")


class CellParseError(HarmonizeError, ValueError):
    def __init__(self, row: int, column: str, message: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column!r}: {message}")


class JobConfigError(HarmonizeError):
    """The job's rules and dictionaries cannot produce the target dictionary."""


class DataError(HarmonizeError):
    """A cell failed while harmonizing under the fail-fast policy."""

    def __init__(self, dataset: str, row: int, source: str, target: str, cause: Exception):
        self.dataset = dataset
        self.row = row
        self.source = source
        self.target = target
        self.cause = cause
        super().__init__(
            f"{dataset}: row {row}, column {source!r} -> {target!r}: {cause}"
        )


class ConformanceError(HarmonizeError):
    def __init__(self, file: str, message: str):
        self.file = file
        super().__init__(f"{file}: {message}")


class MissingOriginal(HarmonizeError, KeyError):
    def __init__(self, dataset: str):
        self.dataset = dataset
        super().__init__(dataset)

    def __str__(self) -> str:
        return f"original dataset not available: {self.dataset!r}"
