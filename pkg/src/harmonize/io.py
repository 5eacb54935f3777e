"""Reading and writing data files (CSV) and data dictionaries (JSON).

The CSV dialect is fixed: comma separator, double-quote quoting, UTF-8
without BOM, LF line endings. An unquoted empty field is a missing value and
a quoted empty field (``""``) is the empty string, which is why the stdlib
``csv`` module (it cannot tell the two apart) is not used here.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import jsonschema

from .errors import CellParseError, HeaderMismatch, ParseError, SchemaError, StorageFailure
from .model import DataDictionary, DataElement, DataFile, dictionary_from_dict, dictionary_to_dict
from .primitives import parse_boolean, parse_decimal, parse_integer
from .values import MISSING, Kind, Value, ValueType, format_decimal

# --- cells -----------------------------------------------------------------


def render_cell(v: Value, element: DataElement | None = None, labels: bool = False) -> str | None:
    """Canonical text of a value, or None for missing (an empty field)."""
    k = v.kind
    if k is Kind.MISSING:
        return None
    if k is Kind.STRING or k is Kind.DATE:
        return v.data
    if k is Kind.INTEGER:
        return str(v.data)
    if k is Kind.DECIMAL:
        return format_decimal(v.data, v.places)
    if k is Kind.BOOLEAN:
        return "true" if v.data else "false"
    if k is Kind.ENUM:
        if labels and element is not None and element.codes is not None and v.data in element.codes:
            return element.codes.label(v.data)
        return str(v.data)
    return json.dumps([_vector_item(i) for i in v.data], separators=(",", ":"), ensure_ascii=False)


def _vector_item(v: Value):
    if v.kind is Kind.DECIMAL:
        return v.data
    if v.kind in (Kind.INTEGER, Kind.ENUM, Kind.BOOLEAN, Kind.STRING, Kind.DATE):
        return v.data
    raise TypeError(f"cannot render {v!r} inside a vector")


def parse_cell(text: str | None, t: ValueType) -> Value:
    """Inverse of :func:`render_cell`. Raises ValueError on malformed text."""
    if text is None:
        return MISSING
    k = t.kind
    if k is Kind.STRING:
        return Value.text(text)
    if k is Kind.DATE:
        return Value.date(text)
    if k is Kind.INTEGER:
        return Value.integer(parse_integer(text))
    if k is Kind.DECIMAL:
        return Value.decimal(parse_decimal(text))
    if k is Kind.BOOLEAN:
        return Value.boolean(parse_boolean(text))
    if k is Kind.ENUM:
        return Value.enum(parse_integer(text))
    if k is Kind.VECTOR:
        try:
            items = json.loads(text, parse_constant=_no_constant)
        except json.JSONDecodeError as e:
            raise ValueError(f"malformed vector {text!r}: {e.msg}") from None
        if not isinstance(items, list):
            raise ValueError(f"vector must be a JSON array, got {text!r}")
        return Value.vector(_vector_value(i, t.element) for i in items)
    raise ValueError(f"cannot parse cells of type {t}")


def _no_constant(name):
    raise ValueError(f"non-finite number {name}")


def _vector_value(item, t: ValueType) -> Value:
    k = t.kind
    if k is Kind.INTEGER and type(item) is int:
        return Value.integer(item)
    if k is Kind.ENUM and type(item) is int:
        return Value.enum(item)
    if k is Kind.DECIMAL and type(item) in (int, float):
        return Value.decimal(float(item))
    if k is Kind.BOOLEAN and type(item) is bool:
        return Value.boolean(item)
    if k is Kind.STRING and type(item) is str:
        return Value.text(item)
    if k is Kind.DATE and type(item) is str:
        return Value.date(item)
    raise ValueError(f"vector item {item!r} is not a {t}")


# --- CSV records -------------------------------------------------------------

_UNQUOTED = re.compile(r'[^,"\r\n]*')


def split_records(text: str) -> list[list[str | None]]:
    """Parse RFC 4180 text into records; unquoted empty fields become None.

    Accepts LF or CRLF line endings. A trailing line break does not start a
    new record.
    """
    records: list[list[str | None]] = []
    record: list[str | None] = []
    i, n = 0, len(text)
    if text.startswith("\ufeff"):
        i = 1
    if i >= n:
        return records
    while True:
        # one field
        if i < n and text[i] == '"':
            i += 1
            buf = []
            while True:
                j = text.find('"', i)
                if j < 0:
                    raise ParseError(f"unterminated quoted field in record {len(records) + 1}")
                buf.append(text[i:j])
                if j + 1 < n and text[j + 1] == '"':
                    buf.append('"')
                    i = j + 2
                    continue
                i = j + 1
                break
            field = "".join(buf)
            if i < n and text[i] not in ",\r\n":
                raise ParseError(f"unexpected character after quoted field in record {len(records) + 1}")
        else:
            j = _UNQUOTED.match(text, i).end()
            if j < n and text[j] == '"':
                raise ParseError(f"stray quote in unquoted field in record {len(records) + 1}")
            field = text[i:j] or None
            i = j
        record.append(field)
        if i >= n:
            records.append(record)
            break
        c = text[i]
        if c == ",":
            i += 1
            continue
        # line break
        i += 2 if text.startswith("\r\n", i) else 1
        records.append(record)
        record = []
        if i >= n:
            break
    return records


def _quote(field: str | None) -> str:
    if field is None:
        return ""
    if field == "" or any(c in field for c in ',"\r\n'):
        return '"' + field.replace('"', '""') + '"'
    return field


def join_record(fields: Iterable[str | None]) -> str:
    return ",".join(_quote(f) for f in fields) + "\n"


# --- data files --------------------------------------------------------------


@dataclass(frozen=True)
class CanonicalWriterConfig:
    """Output options. ``labels`` renders enum labels instead of codes; such
    output is for people and is not part of replay comparisons."""

    labels: bool = False


def parse_data_file(text: str, dictionary: DataDictionary, name: str) -> DataFile:
    records = split_records(text)
    if not records:
        raise HeaderMismatch(dictionary.names, [])
    if not dictionary.elements:
        # a zero-column file is a run of empty lines
        records = [[] if rec == [None] else rec for rec in records]
    header = records[0]
    if any(h is None for h in header):
        raise ParseError("header contains an empty column name")
    seen, dup = set(), []
    for h in header:
        if h in seen:
            dup.append(h)
        seen.add(h)
    missing = [n for n in dictionary.names if n not in seen]
    unknown = [h for h in header if h not in dictionary]
    if missing or unknown or dup:
        raise HeaderMismatch(missing, unknown, dup)
    positions = [header.index(n) for n in dictionary.names]
    types = [el.response_type for el in dictionary.elements]
    rows = []
    width = len(header)
    for r, rec in enumerate(records[1:], start=1):
        if len(rec) != width:
            raise CellParseError(r, "*", f"record has {len(rec)} fields, header has {width}")
        row = []
        for el, pos, t in zip(dictionary.elements, positions, types):
            try:
                row.append(parse_cell(rec[pos], t))
            except (ValueError, TypeError, OverflowError) as e:
                raise CellParseError(r, el.name, str(e)) from None
        rows.append(tuple(row))
    return DataFile(name, dictionary, tuple(rows))


def dataset_name(path: str | os.PathLike) -> str:
    """Default dataset name of a file: its name without the extension."""
    name = Path(path).name
    for ext in (".csv", ".tsv", ".txt"):
        if name.lower().endswith(ext):
            return name[: -len(ext)]
    return name


def read_data_file(path: str | os.PathLike, dictionary: DataDictionary, name: str | None = None) -> DataFile:
    """Read a CSV file whose header names match the dictionary's elements
    (in any order); cells are parsed to each element's type."""
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise StorageFailure(f"cannot read {path}: {e.strerror or e}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ParseError(f"{path}: not UTF-8 ({e})") from None
    return parse_data_file(text, dictionary, name or dataset_name(path))


def dumps_data_file(f: DataFile, config: CanonicalWriterConfig | None = None) -> str:
    labels = config.labels if config is not None else False
    elements = f.dictionary.elements
    out = [join_record(f.dictionary.names)]
    for row in f.rows:
        out.append(join_record(render_cell(v, el, labels) for v, el in zip(row, elements)))
    return "".join(out)


def data_file_bytes(f: DataFile, config: CanonicalWriterConfig | None = None) -> bytes:
    return dumps_data_file(f, config).encode("utf-8")


def _write_bytes(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp{os.getpid()}")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as e:
        try:
            tmp.unlink()
        except OSError:
            pass
        raise StorageFailure(f"cannot write {path}: {e.strerror or e}") from None


def write_data_file(f: DataFile, path: str | os.PathLike, config: CanonicalWriterConfig | None = None) -> None:
    _write_bytes(path, data_file_bytes(f, config))


# --- dictionaries ------------------------------------------------------------

_CODE = {
    "type": "object",
    "properties": {"code": {"type": "integer"}, "label": {"type": "string"}},
    "required": ["code", "label"],
    "additionalProperties": False,
}

DICTIONARY_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "elements": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "variable": {"type": "string", "minLength": 1},
                    "prompt": {"type": "string"},
                    "type": {
                        "type": "string",
                        "pattern": r"^(string|integer|decimal|boolean|date|enum"
                        r"|vector<(string|integer|decimal|boolean|date|enum)>)$",
                    },
                    "codes": {"type": "array", "items": _CODE},
                },
                "required": ["name", "variable", "prompt", "type"],
                "additionalProperties": False,
            },
        },
    },
    "required": ["name", "elements"],
    "additionalProperties": False,
}

_VALIDATOR = jsonschema.Draft202012Validator(DICTIONARY_SCHEMA)


def _location(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def dictionary_from_json(text: str | bytes) -> DataDictionary:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    return dictionary_from_doc(doc)


def dictionary_from_doc(doc) -> DataDictionary:
    """Build a dictionary from already-decoded JSON, checking it fully."""
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise SchemaError(f"{_location(e.absolute_path)}: {e.message}")
    seen = set()
    for i, el in enumerate(doc["elements"]):
        where = f"$.elements[{i}]"
        if el["name"] in seen:
            raise SchemaError(f"{where}.name: duplicate element name {el['name']!r}")
        seen.add(el["name"])
        is_enum = el["type"] in ("enum", "vector<enum>")
        if is_enum and "codes" not in el:
            raise SchemaError(f"{where}: enum element {el['name']!r} needs \"codes\"")
        if not is_enum and "codes" in el:
            raise SchemaError(f"{where}: only enum elements may have \"codes\"")
        if is_enum:
            codes = [c["code"] for c in el["codes"]]
            labels = [c["label"] for c in el["codes"]]
            if len(set(codes)) != len(codes):
                raise SchemaError(f"{where}.codes: duplicate code")
            if len(set(labels)) != len(labels):
                raise SchemaError(f"{where}.codes: duplicate label")
    return dictionary_from_dict(doc)


def dictionary_to_json(d: DataDictionary) -> str:
    return json.dumps(dictionary_to_dict(d), indent=2, ensure_ascii=False) + "\n"


def read_dictionary(path: str | os.PathLike) -> DataDictionary:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise StorageFailure(f"cannot read {path}: {e.strerror or e}") from None
    try:
        return dictionary_from_json(raw)
    except UnicodeDecodeError as e:
        raise ParseError(f"{path}: not UTF-8 ({e})") from None
    except (ParseError, SchemaError) as e:
        raise type(e)(f"{path}: {e}") from None


def write_dictionary(d: DataDictionary, path: str | os.PathLike) -> None:
    _write_bytes(path, dictionary_to_json(d).encode("utf-8"))


# --- job manifests ---------------------------------------------------------------


@dataclass(frozen=True)
class ManifestInput:
    dataset: str
    file: str
    dictionary: DataDictionary


@dataclass(frozen=True)
class JobManifest:
    """What a replay needs besides the log: dictionaries, input order and
    file names, error policy and output name."""

    target: DataDictionary
    inputs: tuple[ManifestInput, ...]
    policy: str = "fail-fast"
    output_name: str = "harmonized"

    def to_json(self) -> str:
        doc = {
            "output_name": self.output_name,
            "policy": self.policy,
            "target": dictionary_to_dict(self.target),
            "inputs": [
                {"dataset": i.dataset, "file": i.file, "dictionary": dictionary_to_dict(i.dictionary)}
                for i in self.inputs
            ],
        }
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str | bytes) -> JobManifest:
        try:
            doc = json.loads(text)
            inputs = tuple(
                ManifestInput(str(i["dataset"]), str(i["file"]), dictionary_from_doc(i["dictionary"]))
                for i in doc["inputs"]
            )
            return cls(dictionary_from_doc(doc["target"]), inputs, str(doc["policy"]), str(doc["output_name"]))
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise ParseError(f"malformed job manifest: {e!r}") from None


def manifest_path(log_path: str | os.PathLike) -> Path:
    """The manifest sits next to its log: ``run.log.jsonl`` -> ``run.log.job.json``."""
    return Path(log_path).with_suffix(".job.json")
