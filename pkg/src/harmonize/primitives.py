"""The nine parameterizable single-value primitives.

Each primitive is an immutable dataclass holding its parameters. ``apply``
maps one :class:`~harmonize.values.Value` to another and passes missing
values through untouched; ``io_types`` gives the static signature used when
validating a rule's operation chain.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from datetime import datetime
from typing import Any, ClassVar, Mapping

from . import units as _units
from .errors import (
    BadVector,
    CastError,
    DateParseError,
    InvalidParams,
    ParseError,
    TypeMismatch,
    UnbinnedValue,
    UnknownPrimitive,
    UnmappedCode,
    ValueOverflow,
)
from .values import (
    BOOLEAN,
    DECIMAL,
    INT64_MAX,
    INT64_MIN,
    INTEGER,
    NUMERIC,
    SCALAR,
    STRING,
    TEXT,
    CodedValueSet,
    Kind,
    MISSING,
    Value,
    ValueType,
    compatible,
    format_decimal,
    round_half_away,
    truthy,
)

MIN = "MIN"
MAX = "MAX"


def _is_int(v) -> bool:
    return type(v) is int


def _is_number(v) -> bool:
    return type(v) in (int, float) and math.isfinite(v)


def _check_keys(params: Any, name: str, required: tuple[str, ...]) -> Mapping:
    if not isinstance(params, Mapping):
        raise InvalidParams(f"{name}: params must be an object")
    missing = [k for k in required if k not in params]
    extra = sorted(k for k in params if k not in required)
    if missing:
        raise InvalidParams(f"{name}: missing parameter(s) {', '.join(missing)}")
    if extra:
        raise InvalidParams(f"{name}: unexpected parameter(s) {', '.join(extra)}")
    return params


class Primitive:
    """Base class; subclasses are frozen dataclasses registered by name."""

    name: ClassVar[str]
    registry: ClassVar[dict[str, type[Primitive]]] = {}

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        Primitive.registry[cls.name] = cls

    def apply(self, x: Value) -> Value:
        if x.kind is Kind.MISSING:
            return MISSING
        return self._apply(x)

    def _apply(self, x: Value) -> Value:
        raise NotImplementedError

    def io_types(self, input: ValueType | None = None) -> tuple[ValueType, ValueType]:
        """(accepted input type, produced output type).

        When ``input`` is given the output is refined for it (for example a
        threshold over integers with integer bounds stays integer).
        """
        raise NotImplementedError

    def accepts(self, t: ValueType) -> bool:
        return compatible(t, self.io_types()[0])

    def params(self) -> dict:
        raise NotImplementedError

    @classmethod
    def from_params(cls, params: Mapping) -> Primitive:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"primitive": self.name, "params": self.params()}

    def _mismatch(self, x: Value, expected: str) -> TypeMismatch:
        return TypeMismatch(f"{self.name} expects {expected}, got {x.kind.value} {x!r}")


def _numeric(p: Primitive, x: Value) -> None:
    if x.kind not in (Kind.INTEGER, Kind.DECIMAL):
        raise p._mismatch(x, "a numeric value")


def _decimal_result(x: float) -> Value:
    if not math.isfinite(x):
        raise ValueOverflow(f"result {x} is not a finite decimal")
    return Value.decimal(x)


@dataclass(frozen=True)
class ConvertUnits(Primitive):
    name: ClassVar[str] = "ConvertUnits"
    source: str
    target: str

    def __post_init__(self):
        src = _units.resolve(self.source)
        tgt = _units.resolve(self.target)
        _units.check_convertible(src, tgt)
        object.__setattr__(self, "source", src.symbol)
        object.__setattr__(self, "target", tgt.symbol)

    def _apply(self, x):
        _numeric(self, x)
        y = _units.convert(float(x.data), _units.UNITS[self.source], _units.UNITS[self.target])
        return _decimal_result(y)

    def io_types(self, input=None):
        return NUMERIC, DECIMAL

    def params(self):
        return {"source": self.source, "target": self.target}

    @classmethod
    def from_params(cls, params):
        p = _check_keys(params, cls.name, ("source", "target"))
        return cls(p["source"], p["target"])


@dataclass(frozen=True)
class Truncate(Primitive):
    name: ClassVar[str] = "Truncate"
    length: int

    def __post_init__(self):
        if not _is_int(self.length) or self.length < 0:
            raise InvalidParams(f"Truncate: length must be a non-negative integer, got {self.length!r}")

    def _apply(self, x):
        if x.kind is not Kind.STRING:
            raise self._mismatch(x, "a string")
        return Value.text(x.data[: self.length])

    def io_types(self, input=None):
        return STRING, STRING

    def params(self):
        return {"length": self.length}

    @classmethod
    def from_params(cls, params):
        return cls(_check_keys(params, cls.name, ("length",))["length"])


_CAST_TYPES = {"string": STRING, "integer": INTEGER, "decimal": DECIMAL, "boolean": BOOLEAN}
CAST_PAIRS = frozenset(
    {
        ("string", "integer"),
        ("integer", "string"),
        ("string", "decimal"),
        ("decimal", "string"),
        ("integer", "decimal"),
        ("integer", "boolean"),
        ("boolean", "integer"),
        ("string", "boolean"),
        ("boolean", "string"),
    }
)
_INT_RE = re.compile(r"[+-]?[0-9]+")
_DEC_RE = re.compile(r"[+-]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")


def parse_integer(text: str) -> int:
    """Strict integer grammar: optional sign, ASCII digits, surrounding
    whitespace ignored. Raises ValueError."""
    s = text.strip()
    if not _INT_RE.fullmatch(s):
        raise ValueError(f"{text!r} is not an integer")
    i = int(s)
    if not INT64_MIN <= i <= INT64_MAX:
        raise ValueError(f"{text!r} is outside the signed 64-bit range")
    return i


def parse_decimal(text: str) -> float:
    s = text.strip()
    if not _DEC_RE.fullmatch(s):
        raise ValueError(f"{text!r} is not a decimal number")
    x = float(s)
    if not math.isfinite(x):
        raise ValueError(f"{text!r} is not a finite decimal")
    return x


def parse_boolean(text: str) -> bool:
    s = text.strip().lower()
    if s == "true":
        return True
    if s == "false":
        return False
    raise ValueError(f"{text!r} is not a boolean")


@dataclass(frozen=True)
class Cast(Primitive):
    name: ClassVar[str] = "Cast"
    source: str
    target: str

    def __post_init__(self):
        if (self.source, self.target) not in CAST_PAIRS:
            raise InvalidParams(f"Cast: unsupported conversion {self.source!r} -> {self.target!r}")

    def _apply(self, x):
        src = self.source
        if x.kind is not _CAST_TYPES[src].kind and not (src == "decimal" and x.kind is Kind.INTEGER):
            raise self._mismatch(x, f"a {src}")
        tgt = self.target
        try:
            if src == "string":
                if tgt == "integer":
                    return Value.integer(parse_integer(x.data))
                if tgt == "decimal":
                    return Value.decimal(parse_decimal(x.data))
                return Value.boolean(parse_boolean(x.data))
        except ValueError as e:
            raise CastError(f"cannot cast to {tgt}: {e}") from None
        if src == "integer":
            if tgt == "string":
                return Value.text(str(x.data))
            if tgt == "decimal":
                return Value.decimal(float(x.data))
            if x.data not in (0, 1):
                raise CastError(f"cannot cast integer {x.data} to boolean (expected 0 or 1)")
            return Value.boolean(x.data == 1)
        if src == "decimal":
            return Value.text(format_decimal(float(x.data), x.places))
        # boolean source
        if tgt == "integer":
            return Value.integer(1 if x.data else 0)
        return Value.text("true" if x.data else "false")

    def io_types(self, input=None):
        return _CAST_TYPES[self.source], _CAST_TYPES[self.target]

    def params(self):
        return {"source": self.source, "target": self.target}

    @classmethod
    def from_params(cls, params):
        p = _check_keys(params, cls.name, ("source", "target"))
        return cls(p["source"], p["target"])


@dataclass(frozen=True)
class EnumToEnum(Primitive):
    name: ClassVar[str] = "EnumToEnum"
    mapping: tuple[tuple[int, int], ...]

    def __post_init__(self):
        m = self.mapping
        if isinstance(m, Mapping):
            m = tuple(m.items())
        try:
            m = tuple((a, b) for a, b in m)
        except (TypeError, ValueError):
            raise InvalidParams("EnumToEnum: mapping must be pairs of codes") from None
        if not m:
            raise InvalidParams("EnumToEnum: mapping must not be empty")
        for a, b in m:
            if not (_is_int(a) and _is_int(b)):
                raise InvalidParams(f"EnumToEnum: codes must be integers, got {a!r} -> {b!r}")
        sources = [a for a, _ in m]
        if len(set(sources)) != len(sources):
            raise InvalidParams("EnumToEnum: a source code is mapped more than once")
        object.__setattr__(self, "mapping", m)
        object.__setattr__(self, "_lookup", dict(m))

    def _apply(self, x):
        if x.kind is not Kind.ENUM:
            raise self._mismatch(x, "an enum code")
        try:
            return Value.enum(self._lookup[x.data])
        except KeyError:
            raise UnmappedCode(f"code {x.data} has no mapping") from None

    def io_types(self, input=None):
        return (
            ValueType.enum(a for a, _ in self.mapping),
            ValueType.enum(b for _, b in self.mapping),
        )

    def params(self):
        return {"mapping": [{"from": a, "to": b} for a, b in self.mapping]}

    @classmethod
    def from_params(cls, params):
        raw = _check_keys(params, cls.name, ("mapping",))["mapping"]
        if not isinstance(raw, list):
            raise InvalidParams("EnumToEnum: mapping must be a list")
        pairs = []
        for entry in raw:
            e = _check_keys(entry, cls.name + " mapping entry", ("from", "to"))
            pairs.append((e["from"], e["to"]))
        return cls(tuple(pairs))


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lower, upper]`` with a label; MIN/MAX are open-ended."""

    lower: int | float | str
    upper: int | float | str
    label: str

    def __post_init__(self):
        if not (self.lower == MIN or _is_number(self.lower)):
            raise InvalidParams(f"Bin: lower bound must be a number or MIN, got {self.lower!r}")
        if not (self.upper == MAX or _is_number(self.upper)):
            raise InvalidParams(f"Bin: upper bound must be a number or MAX, got {self.upper!r}")
        if not isinstance(self.label, str) or not self.label:
            raise InvalidParams("Bin: labels must be non-empty strings")
        if self.lo > self.hi:
            raise InvalidParams(f"Bin: interval {self.label!r} has lower > upper")

    @property
    def lo(self) -> float:
        return -math.inf if self.lower == MIN else self.lower

    @property
    def hi(self) -> float:
        return math.inf if self.upper == MAX else self.upper

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True)
class Bin(Primitive):
    """Assign a number to a labelled interval.

    The output is an enum code: the 0-based position of the matching interval,
    with the interval labels as the coded value set.
    """

    name: ClassVar[str] = "Bin"
    bins: tuple[Interval, ...]

    def __post_init__(self):
        bins = tuple(b if isinstance(b, Interval) else Interval(*b) for b in self.bins)
        if not bins:
            raise InvalidParams("Bin: at least one interval is required")
        labels = [b.label for b in bins]
        if len(set(labels)) != len(labels):
            raise InvalidParams("Bin: interval labels must be unique")
        ordered = sorted(bins, key=lambda b: (b.lo, b.hi))
        for a, b in zip(ordered, ordered[1:]):
            if b.lo <= a.hi:
                raise InvalidParams(f"Bin: intervals {a.label!r} and {b.label!r} overlap")
        object.__setattr__(self, "bins", bins)

    @property
    def codes(self) -> CodedValueSet:
        return CodedValueSet(tuple((i, b.label) for i, b in enumerate(self.bins)))

    def label_of(self, v: Value) -> str:
        return self.bins[v.data].label

    def _apply(self, x):
        _numeric(self, x)
        for i, b in enumerate(self.bins):
            if x.data in b:
                return Value.enum(i)
        raise UnbinnedValue(f"{x.data!r} falls in no interval")

    def io_types(self, input=None):
        return NUMERIC, ValueType.enum(self.codes)

    def params(self):
        return {"bins": [{"lower": b.lower, "upper": b.upper, "label": b.label} for b in self.bins]}

    @classmethod
    def from_params(cls, params):
        raw = _check_keys(params, cls.name, ("bins",))["bins"]
        if not isinstance(raw, list):
            raise InvalidParams("Bin: bins must be a list")
        out = []
        for entry in raw:
            e = _check_keys(entry, cls.name + " interval", ("lower", "upper", "label"))
            out.append(Interval(e["lower"], e["upper"], e["label"]))
        return cls(tuple(out))


REDUCE_OPERATIONS = ("sum", "any", "none", "all", "one-hot")


@dataclass(frozen=True)
class Reduce(Primitive):
    name: ClassVar[str] = "Reduce"
    operation: str

    def __post_init__(self):
        if self.operation not in REDUCE_OPERATIONS:
            raise InvalidParams(f"Reduce: unknown operation {self.operation!r}")

    def _apply(self, x):
        if x.kind is not Kind.VECTOR:
            raise self._mismatch(x, "a vector")
        items = x.data
        op = self.operation
        if op == "sum":
            if any(i.kind not in (Kind.INTEGER, Kind.DECIMAL) for i in items):
                raise self._mismatch(x, "a numeric vector")
            if items and items[0].kind is Kind.DECIMAL:
                return _decimal_result(math.fsum(i.data for i in items))
            total = sum(i.data for i in items)
            if not INT64_MIN <= total <= INT64_MAX:
                raise ValueOverflow(f"sum {total} outside the signed 64-bit range")
            return Value.integer(total)
        if op == "one-hot":
            if any(i.kind not in (Kind.INTEGER, Kind.BOOLEAN) for i in items):
                raise self._mismatch(x, "an integer or boolean vector")
            hot = [n for n, i in enumerate(items) if truthy(i)]
            if len(hot) != 1:
                raise BadVector(f"one-hot vector has {len(hot)} set elements")
            return Value.integer(hot[0])
        flags = [truthy(i) for i in items]
        if op == "any":
            return Value.boolean(any(flags))
        if op == "none":
            return Value.boolean(not any(flags))
        return Value.boolean(all(flags))

    def io_types(self, input=None):
        op = self.operation
        if op == "sum":
            out = NUMERIC
            if input is not None and input.kind is Kind.VECTOR:
                if input.element.kind is Kind.INTEGER:
                    out = INTEGER
                elif input.element.kind is Kind.DECIMAL:
                    out = DECIMAL
            return ValueType.vector(NUMERIC), out
        if op == "one-hot":
            return ValueType.vector(SCALAR), INTEGER
        return ValueType.vector(SCALAR), BOOLEAN

    def accepts(self, t):
        if t.kind is not Kind.VECTOR:
            return False
        if self.operation == "one-hot":
            return t.element.kind in (Kind.INTEGER, Kind.BOOLEAN)
        return compatible(t, self.io_types()[0])

    def params(self):
        return {"operation": self.operation}

    @classmethod
    def from_params(cls, params):
        return cls(_check_keys(params, cls.name, ("operation",))["operation"])


_DATE_FIELDS = {"Y": "year", "m": "month", "d": "day", "H": "hour", "M": "minute", "S": "second"}
_FORMAT_TOKEN = re.compile(r"%(.?)")


def _compile_format(fmt: str) -> tuple[re.Pattern, list[tuple[str, str]]]:
    """Turn a %-format into a regex and a list of (kind, text) pieces."""
    if not isinstance(fmt, str) or not fmt:
        raise InvalidParams(f"ConvertDate: format must be a non-empty string, got {fmt!r}")
    pieces: list[tuple[str, str]] = []
    pattern = []
    seen = set()
    pos = 0
    for m in _FORMAT_TOKEN.finditer(fmt):
        if m.start() > pos:
            lit = fmt[pos : m.start()]
            pieces.append(("lit", lit))
            pattern.append(re.escape(lit))
        tok = m.group(1)
        if tok == "%":
            pieces.append(("lit", "%"))
            pattern.append("%")
        elif tok in _DATE_FIELDS:
            if tok in seen:
                raise InvalidParams(f"ConvertDate: %{tok} appears twice in {fmt!r}")
            seen.add(tok)
            pieces.append(("tok", tok))
            pattern.append(f"(?P<{tok}>[0-9]{{4}})" if tok == "Y" else f"(?P<{tok}>[0-9]{{1,2}})")
        else:
            raise InvalidParams(f"ConvertDate: unsupported directive %{tok} in {fmt!r}")
        pos = m.end()
    if pos < len(fmt):
        pieces.append(("lit", fmt[pos:]))
        pattern.append(re.escape(fmt[pos:]))
    return re.compile("".join(pattern)), pieces


@dataclass(frozen=True)
class ConvertDate(Primitive):
    """Reformat a date string. Directives: %Y %m %d %H %M %S and %%."""

    name: ClassVar[str] = "ConvertDate"
    source: str
    target: str

    def __post_init__(self):
        src_re, src_pieces = _compile_format(self.source)
        _, tgt_pieces = _compile_format(self.target)
        have = {t for k, t in src_pieces if k == "tok"}
        need = {t for k, t in tgt_pieces if k == "tok"}
        if not need <= have:
            lacking = ", ".join("%" + t for t in sorted(need - have))
            raise InvalidParams(f"ConvertDate: target needs {lacking} which the source format lacks")
        object.__setattr__(self, "_regex", src_re)
        object.__setattr__(self, "_pieces", tgt_pieces)

    def _apply(self, x):
        if x.kind not in (Kind.STRING, Kind.DATE):
            raise self._mismatch(x, "a date string")
        m = self._regex.fullmatch(x.data)
        if m is None:
            raise DateParseError(f"{x.data!r} does not match {self.source!r}")
        fields = {k: int(v) for k, v in m.groupdict().items()}
        try:
            datetime(
                fields.get("Y", 2000), fields.get("m", 1), fields.get("d", 1),
                fields.get("H", 0), fields.get("M", 0), fields.get("S", 0),
            )
        except ValueError as e:
            raise DateParseError(f"{x.data!r}: {e}") from None
        out = []
        for kind, text in self._pieces:
            if kind == "lit":
                out.append(text)
            elif text == "Y":
                out.append(f"{fields['Y']:04d}")
            else:
                out.append(f"{fields[text]:02d}")
        return Value(x.kind, "".join(out))

    def io_types(self, input=None):
        if input is not None and input.kind in (Kind.STRING, Kind.DATE):
            return TEXT, ValueType(input.kind)
        return TEXT, TEXT

    def params(self):
        return {"source": self.source, "target": self.target}

    @classmethod
    def from_params(cls, params):
        p = _check_keys(params, cls.name, ("source", "target"))
        return cls(p["source"], p["target"])


@dataclass(frozen=True)
class Round(Primitive):
    """Round half away from zero to ``precision`` decimal places."""

    name: ClassVar[str] = "Round"
    precision: int

    def __post_init__(self):
        if not _is_int(self.precision) or not 0 <= self.precision <= 300:
            raise InvalidParams(f"Round: precision must be an integer in [0, 300], got {self.precision!r}")

    def _apply(self, x):
        _numeric(self, x)
        return Value.decimal(round_half_away(float(x.data), self.precision), places=self.precision)

    def io_types(self, input=None):
        return DECIMAL, DECIMAL

    def params(self):
        return {"precision": self.precision}

    @classmethod
    def from_params(cls, params):
        return cls(_check_keys(params, cls.name, ("precision",))["precision"])


@dataclass(frozen=True)
class Threshold(Primitive):
    """Clamp a number to ``[lower, upper]``.

    Integer inputs stay integer when both bounds are integers.
    """

    name: ClassVar[str] = "Threshold"
    lower: int | float
    upper: int | float

    def __post_init__(self):
        if not (_is_number(self.lower) and _is_number(self.upper)):
            raise InvalidParams("Threshold: bounds must be finite numbers")
        if self.lower > self.upper:
            raise InvalidParams(f"Threshold: lower {self.lower} exceeds upper {self.upper}")

    @property
    def _integral(self) -> bool:
        return _is_int(self.lower) and _is_int(self.upper)

    def _apply(self, x):
        _numeric(self, x)
        clamped = min(max(x.data, self.lower), self.upper)
        if x.kind is Kind.INTEGER and self._integral:
            return Value.integer(clamped)
        return Value.decimal(float(clamped))

    def io_types(self, input=None):
        if not self._integral:
            return NUMERIC, DECIMAL
        if input is None:
            return NUMERIC, NUMERIC
        return NUMERIC, INTEGER if input.kind is Kind.INTEGER else DECIMAL

    def params(self):
        return {"lower": self.lower, "upper": self.upper}

    @classmethod
    def from_params(cls, params):
        p = _check_keys(params, cls.name, ("lower", "upper"))
        return cls(p["lower"], p["upper"])


def apply_primitive(op: Primitive, x: Value) -> Value:
    return op.apply(x)


def io_types(op: Primitive, input: ValueType | None = None) -> tuple[ValueType, ValueType]:
    return op.io_types(input)


def primitive_from_dict(doc: Any) -> Primitive:
    """Inverse of :meth:`Primitive.to_dict`."""
    if not isinstance(doc, Mapping) or set(doc) != {"primitive", "params"}:
        raise ParseError('operation must be an object with exactly "primitive" and "params"')
    name = doc["primitive"]
    cls = Primitive.registry.get(name) if isinstance(name, str) else None
    if cls is None:
        raise UnknownPrimitive(f"unknown primitive {name!r}")
    return cls.from_params(doc["params"])


PRIMITIVE_NAMES = tuple(Primitive.registry)
