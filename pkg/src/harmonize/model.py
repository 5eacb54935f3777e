"""Data representation model: variables, data elements, dictionaries, files."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import NotFound
from .values import CodedValueSet, Kind, Value, ValueType, conforms


@dataclass(frozen=True)
class Variable:
    """An abstract concept (e.g. "age") implemented by one or more data elements."""

    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("variable name must be non-empty")


@dataclass(frozen=True)
class DataElement:
    name: str
    variable: Variable
    prompt: str
    response_type: ValueType
    codes: CodedValueSet | None = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("data element name must be non-empty")
        if isinstance(self.variable, str):
            object.__setattr__(self, "variable", Variable(self.variable))
        base = self.response_type
        if base.kind is Kind.VECTOR:
            base = base.element
        if base.kind in (Kind.NUMERIC, Kind.TEXT, Kind.SCALAR, Kind.UNKNOWN, Kind.MISSING):
            raise ValueError(f"{self.name}: {base} is not a storable response type")
        if (base.kind is Kind.ENUM) != (self.codes is not None):
            raise ValueError(f"{self.name}: codes are required iff the response type is enum")
        if self.codes is not None:
            # keep the type's code set in step with the element's codes
            enum_type = ValueType.enum(self.codes)
            if self.response_type.kind is Kind.VECTOR:
                object.__setattr__(self, "response_type", ValueType.vector(enum_type))
            else:
                object.__setattr__(self, "response_type", enum_type)

    def conforms(self, v: Value) -> bool:
        return conforms(v, self.response_type, self.codes)

    def label(self, code: int) -> str:
        if self.codes is None:
            raise ValueError(f"{self.name} is not categorical")
        return self.codes.label(code)


@dataclass(frozen=True)
class DataDictionary:
    """Ordered schema of a data file; element order is the column order."""

    name: str
    elements: tuple[DataElement, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.name:
            raise ValueError("dictionary name must be non-empty")
        seen = set()
        for el in self.elements:
            if el.name in seen:
                raise ValueError(f"{self.name}: duplicate element name {el.name!r}")
            seen.add(el.name)

    @property
    def names(self) -> list[str]:
        return [el.name for el in self.elements]

    def __contains__(self, name: str) -> bool:
        return any(el.name == name for el in self.elements)

    def index(self, name: str) -> int:
        for i, el in enumerate(self.elements):
            if el.name == name:
                return i
        raise NotFound(f"{self.name}: no data element named {name!r}")


def element_by_name(d: DataDictionary, name: str) -> DataElement:
    """Look up an element; raises :class:`NotFound` when absent."""
    return d.elements[d.index(name)]


@dataclass(frozen=True)
class DataFile:
    """Records conforming to exactly one data dictionary."""

    name: str
    dictionary: DataDictionary
    rows: tuple[tuple[Value, ...], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[Value]:
        i = self.dictionary.index(name)
        return [r[i] for r in self.rows]


@dataclass(frozen=True)
class Violation:
    row: int  # 1-based
    element: str
    reason: str

    def __str__(self) -> str:
        return f"row {self.row}, {self.element}: {self.reason}"


def validate_file(f: DataFile) -> list[Violation]:
    """All cells that do not conform to their element, ordered by (row, column)."""
    report = []
    elements = f.dictionary.elements
    width = len(elements)
    for r, row in enumerate(f.rows, start=1):
        if len(row) != width:
            report.append(Violation(r, "*", f"row has {len(row)} values, expected {width}"))
            continue
        for el, v in zip(elements, row):
            if not el.conforms(v):
                if el.codes is not None and v.kind is Kind.ENUM:
                    reason = f"code {v.data} is not in the coded value set"
                else:
                    reason = f"{v!r} does not conform to {el.response_type}"
                report.append(Violation(r, el.name, reason))
    return report


# Dictionary documents. The JSON layout is
#   {"name": str, "elements": [{"name", "variable", "prompt", "type", "codes"?}]}
# with "codes" present exactly for enum elements.

_TYPE_NAMES = {
    "string": Kind.STRING,
    "integer": Kind.INTEGER,
    "decimal": Kind.DECIMAL,
    "boolean": Kind.BOOLEAN,
    "date": Kind.DATE,
    "enum": Kind.ENUM,
}


def parse_type_name(text: str) -> ValueType:
    if text.startswith("vector<") and text.endswith(">"):
        inner = text[len("vector<"):-1]
        if inner not in _TYPE_NAMES:
            raise ValueError(f"unknown vector element type {inner!r}")
        return ValueType.vector(ValueType(_TYPE_NAMES[inner]))
    if text not in _TYPE_NAMES:
        raise ValueError(f"unknown type {text!r}")
    return ValueType(_TYPE_NAMES[text])


def type_name(t: ValueType) -> str:
    if t.kind is Kind.VECTOR:
        return f"vector<{t.element.kind.value}>"
    return t.kind.value


def dictionary_to_dict(d: DataDictionary) -> dict:
    elements = []
    for el in d.elements:
        doc = {
            "name": el.name,
            "variable": el.variable.name,
            "prompt": el.prompt,
            "type": type_name(el.response_type),
        }
        if el.codes is not None:
            doc["codes"] = [{"code": c, "label": l} for c, l in el.codes.entries]
        elements.append(doc)
    return {"name": d.name, "elements": elements}


def dictionary_from_dict(doc: dict) -> DataDictionary:
    """Build a dictionary from an already schema-checked document."""
    elements = []
    for e in doc["elements"]:
        codes = None
        if "codes" in e:
            codes = CodedValueSet(tuple((c["code"], c["label"]) for c in e["codes"]))
        elements.append(
            DataElement(
                name=e["name"],
                variable=Variable(e["variable"]),
                prompt=e["prompt"],
                response_type=parse_type_name(e["type"]),
                codes=codes,
            )
        )
    return DataDictionary(doc["name"], tuple(elements))


def make_element(
    name: str,
    type: str | ValueType,
    *,
    variable: str | None = None,
    prompt: str = "",
    codes: CodedValueSet | dict | Sequence | None = None,
) -> DataElement:
    """Convenience constructor used by fixtures and tests."""
    t = parse_type_name(type) if isinstance(type, str) else type
    if codes is not None and not isinstance(codes, CodedValueSet):
        codes = CodedValueSet.of(codes)
    return DataElement(name, Variable(variable or name), prompt, t, codes)


def catalog(dictionaries: Iterable[DataDictionary]) -> dict[str, DataDictionary]:
    """Index dictionaries by name; names must be unique."""
    out: dict[str, DataDictionary] = {}
    for d in dictionaries:
        if d.name in out and out[d.name] != d:
            raise ValueError(f"two different dictionaries named {d.name!r}")
        out[d.name] = d
    return out
