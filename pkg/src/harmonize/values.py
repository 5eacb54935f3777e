"""Dynamic values and the static types used to check primitive chains.

A :class:`Value` is a tagged scalar, vector, or the distinguished
:data:`MISSING` marker. A :class:`ValueType` describes what a data element
holds, or what a primitive accepts and produces. Three abstract kinds
(``NUMERIC``, ``TEXT``, ``SCALAR``) only appear in primitive signatures.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, localcontext
from typing import Iterable, Iterator, Mapping

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class Kind(str, enum.Enum):
    STRING = "string"
    INTEGER = "integer"
    DECIMAL = "decimal"
    BOOLEAN = "boolean"
    DATE = "date"
    ENUM = "enum"
    VECTOR = "vector"
    MISSING = "missing"
    # signature-only kinds
    NUMERIC = "numeric"
    TEXT = "text"
    SCALAR = "scalar"
    UNKNOWN = "unknown"


CONCRETE_SCALARS = (Kind.STRING, Kind.INTEGER, Kind.DECIMAL, Kind.BOOLEAN, Kind.DATE, Kind.ENUM)


class Value:
    """An immutable tagged value.

    ``places`` is set only on decimals produced by rounding; it controls how
    the value is rendered and does not take part in equality.
    """

    __slots__ = ("kind", "data", "places")

    def __init__(self, kind: Kind, data, places: int | None = None):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "places", places)

    def __setattr__(self, name, value):
        raise AttributeError("Value is immutable")

    @staticmethod
    def text(s: str) -> Value:
        if not isinstance(s, str):
            raise TypeError(f"text value must be str, got {type(s).__name__}")
        return Value(Kind.STRING, s)

    @staticmethod
    def integer(i: int) -> Value:
        if type(i) is not int:
            raise TypeError(f"integer value must be int, got {type(i).__name__}")
        if not INT64_MIN <= i <= INT64_MAX:
            raise OverflowError(f"integer {i} outside the signed 64-bit range")
        return Value(Kind.INTEGER, i)

    @staticmethod
    def decimal(x: float, places: int | None = None) -> Value:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise TypeError(f"decimal value must be float, got {type(x).__name__}")
        x = float(x)
        if not math.isfinite(x):
            raise ValueError(f"decimal value must be finite, got {x}")
        return Value(Kind.DECIMAL, x, places)

    @staticmethod
    def boolean(b: bool) -> Value:
        if not isinstance(b, bool):
            raise TypeError(f"boolean value must be bool, got {type(b).__name__}")
        return Value(Kind.BOOLEAN, b)

    @staticmethod
    def date(s: str) -> Value:
        if not isinstance(s, str):
            raise TypeError(f"date value must be its text form, got {type(s).__name__}")
        return Value(Kind.DATE, s)

    @staticmethod
    def enum(code: int) -> Value:
        if type(code) is not int:
            raise TypeError(f"enum code must be int, got {type(code).__name__}")
        if not INT64_MIN <= code <= INT64_MAX:
            raise OverflowError(f"enum code {code} outside the signed 64-bit range")
        return Value(Kind.ENUM, code)

    @staticmethod
    def vector(items: Iterable[Value]) -> Value:
        items = tuple(items)
        kinds = set()
        for item in items:
            if not isinstance(item, Value):
                raise TypeError("vector elements must be Values")
            if item.kind not in CONCRETE_SCALARS:
                raise TypeError(f"vector elements must be non-missing scalars, got {item.kind.value}")
            kinds.add(item.kind)
        if len(kinds) > 1:
            raise TypeError("vector elements must share one kind")
        return Value(Kind.VECTOR, items)

    @property
    def is_missing(self) -> bool:
        return self.kind is Kind.MISSING

    def __iter__(self) -> Iterator[Value]:
        if self.kind is not Kind.VECTOR:
            raise TypeError("only vector values are iterable")
        return iter(self.data)

    def __eq__(self, other):
        if not isinstance(other, Value):
            return NotImplemented
        return self.kind is other.kind and self.data == other.data

    def __hash__(self):
        return hash((self.kind, self.data))

    def __repr__(self):
        if self.kind is Kind.MISSING:
            return "MISSING"
        if self.kind is Kind.VECTOR:
            return f"Value.vector({list(self.data)!r})"
        name = "text" if self.kind is Kind.STRING else self.kind.value
        if self.places is not None:
            return f"Value.decimal({self.data!r}, places={self.places})"
        return f"Value.{name}({self.data!r})"

    def __reduce__(self):
        return (Value, (self.kind, self.data, self.places))


MISSING = Value(Kind.MISSING, None)


@dataclass(frozen=True)
class CodedValueSet:
    """Ordered (code, label) pairs for a categorical element."""

    entries: tuple[tuple[int, str], ...]

    def __post_init__(self):
        entries = tuple((c, l) for c, l in self.entries)
        object.__setattr__(self, "entries", entries)
        codes = [c for c, _ in entries]
        labels = [l for _, l in entries]
        for c in codes:
            if type(c) is not int:
                raise ValueError(f"code {c!r} is not an integer")
        for l in labels:
            if not isinstance(l, str):
                raise ValueError(f"label {l!r} is not a string")
        if len(set(codes)) != len(codes):
            raise ValueError("codes must be unique within a coded value set")
        if len(set(labels)) != len(labels):
            raise ValueError("labels must be unique within a coded value set")

    @classmethod
    def of(cls, mapping: Mapping[int, str] | Iterable[tuple[int, str]]) -> CodedValueSet:
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        return cls(tuple(items))

    @property
    def codes(self) -> frozenset[int]:
        return frozenset(c for c, _ in self.entries)

    def label(self, code: int) -> str:
        for c, l in self.entries:
            if c == code:
                return l
        raise KeyError(code)

    def code(self, label: str) -> int:
        for c, l in self.entries:
            if l == label:
                return c
        raise KeyError(label)

    def __contains__(self, code) -> bool:
        return any(c == code for c, _ in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class ValueType:
    """Static type of a value.

    Enum types carry the set of admissible codes, and labels when known.
    A code set of ``None`` means "any code".
    """

    kind: Kind
    element: ValueType | None = None
    codes: frozenset[int] | None = None
    labels: tuple[tuple[int, str], ...] | None = None

    def __post_init__(self):
        if self.kind is Kind.VECTOR:
            if self.element is None:
                raise ValueError("vector type needs an element type")
            if self.element.kind in (Kind.VECTOR, Kind.MISSING):
                raise ValueError("vectors hold scalars only")
        elif self.element is not None:
            raise ValueError("only vector types have an element type")
        if self.kind is not Kind.ENUM and (self.codes is not None or self.labels is not None):
            raise ValueError("only enum types carry codes")

    @staticmethod
    def enum(codes: CodedValueSet | Iterable[int] | None = None) -> ValueType:
        if codes is None:
            return ValueType(Kind.ENUM)
        if isinstance(codes, CodedValueSet):
            return ValueType(Kind.ENUM, codes=codes.codes, labels=tuple(sorted(codes.entries)))
        return ValueType(Kind.ENUM, codes=frozenset(codes))

    @staticmethod
    def vector(element: ValueType) -> ValueType:
        return ValueType(Kind.VECTOR, element=element)

    @property
    def is_numeric(self) -> bool:
        return self.kind in (Kind.INTEGER, Kind.DECIMAL, Kind.NUMERIC)

    def label_map(self) -> dict[int, str]:
        return dict(self.labels or ())

    def __str__(self) -> str:
        if self.kind is Kind.VECTOR:
            return f"vector<{self.element}>"
        if self.kind is Kind.ENUM and self.codes is not None:
            return "enum{" + ",".join(str(c) for c in sorted(self.codes)) + "}"
        return self.kind.value


STRING = ValueType(Kind.STRING)
INTEGER = ValueType(Kind.INTEGER)
DECIMAL = ValueType(Kind.DECIMAL)
BOOLEAN = ValueType(Kind.BOOLEAN)
DATE = ValueType(Kind.DATE)
NUMERIC = ValueType(Kind.NUMERIC)
TEXT = ValueType(Kind.TEXT)
SCALAR = ValueType(Kind.SCALAR)
UNKNOWN = ValueType(Kind.UNKNOWN)

_SCALAR_TYPES = {
    Kind.STRING: STRING,
    Kind.INTEGER: INTEGER,
    Kind.DECIMAL: DECIMAL,
    Kind.BOOLEAN: BOOLEAN,
    Kind.DATE: DATE,
}


def type_of(v: Value) -> ValueType:
    """Static type of ``v``; :data:`UNKNOWN` for missing values."""
    if v.kind is Kind.MISSING:
        return UNKNOWN
    if v.kind is Kind.ENUM:
        return ValueType.enum()
    if v.kind is Kind.VECTOR:
        if not v.data:
            return ValueType.vector(UNKNOWN)
        return ValueType.vector(type_of(v.data[0]))
    return _SCALAR_TYPES[v.kind]


def _kind_matches(kind: Kind, t: ValueType) -> bool:
    if t.kind is Kind.NUMERIC:
        return kind in (Kind.INTEGER, Kind.DECIMAL)
    if t.kind is Kind.TEXT:
        return kind in (Kind.STRING, Kind.DATE)
    if t.kind is Kind.SCALAR:
        return kind in CONCRETE_SCALARS
    return kind is t.kind


def conforms(v: Value, t: ValueType, codes: CodedValueSet | None = None) -> bool:
    """True iff ``v`` is an instance of ``t`` (missing conforms to every type).

    For enum types the code must belong to ``codes`` when given, otherwise to
    the code set carried by ``t`` (if any).
    """
    if not isinstance(v, Value):
        return False
    if v.kind is Kind.MISSING:
        return True
    if t.kind is Kind.UNKNOWN:
        return False
    if t.kind is Kind.VECTOR:
        if v.kind is not Kind.VECTOR:
            return False
        return all(not e.is_missing and conforms(e, t.element, codes) for e in v.data)
    if not _kind_matches(v.kind, t):
        return False
    if v.kind is Kind.ENUM:
        allowed = codes.codes if codes is not None else t.codes
        return allowed is None or v.data in allowed
    return True


def compatible(actual: ValueType, expected: ValueType) -> bool:
    """Can a value of type ``actual`` flow where ``expected`` is required?

    Integer widens to decimal; the reverse is not allowed. An enum flows into
    another enum when its codes are a subset and known labels agree.
    """
    if expected.kind is Kind.UNKNOWN or actual.kind is Kind.UNKNOWN:
        return False
    if expected.kind is Kind.VECTOR:
        return actual.kind is Kind.VECTOR and (
            actual.element.kind is Kind.UNKNOWN or _same_or_narrower(actual.element, expected.element)
        )
    if actual.kind is Kind.VECTOR:
        return False
    return _same_or_narrower(actual, expected)


def _same_or_narrower(actual: ValueType, expected: ValueType) -> bool:
    if expected.kind is Kind.SCALAR:
        return actual.kind in CONCRETE_SCALARS or actual.kind in (Kind.NUMERIC, Kind.TEXT)
    if expected.kind is Kind.NUMERIC:
        return actual.kind in (Kind.INTEGER, Kind.DECIMAL, Kind.NUMERIC)
    if expected.kind is Kind.TEXT:
        return actual.kind in (Kind.STRING, Kind.DATE, Kind.TEXT)
    if expected.kind is Kind.DECIMAL:
        return actual.kind in (Kind.INTEGER, Kind.DECIMAL)
    if expected.kind is Kind.ENUM:
        if actual.kind is not Kind.ENUM:
            return False
        if expected.codes is not None:
            if actual.codes is None or not actual.codes <= expected.codes:
                return False
        if expected.labels is not None and actual.labels is not None:
            want = expected.label_map()
            return all(want.get(c) == l for c, l in actual.labels)
        return True
    return actual.kind is expected.kind


def truthy(v: Value) -> bool:
    """Truthiness used by the reducing primitives."""
    if v.kind in (Kind.INTEGER, Kind.DECIMAL, Kind.ENUM):
        return v.data != 0
    if v.kind is Kind.BOOLEAN:
        return v.data
    if v.kind in (Kind.STRING, Kind.DATE):
        return v.data != ""
    raise TypeError(f"no truthiness for {v.kind.value}")


def format_decimal(x: float, places: int | None = None) -> str:
    """Canonical text of a decimal: shortest round-trip form, or exactly
    ``places`` fractional digits for rounded values."""
    if places is None:
        return repr(x)
    with localcontext() as ctx:
        ctx.prec = 800
        d = Decimal(repr(x)).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    return f"{d:f}"


def round_half_away(x: float, places: int) -> float:
    """Round to ``places`` decimals, ties away from zero, on the shortest
    decimal form of ``x`` (so 2.675 rounds to 2.68)."""
    with localcontext() as ctx:
        ctx.prec = 800
        d = Decimal(repr(float(x))).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    return float(d) + 0.0
