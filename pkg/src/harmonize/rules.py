"""Harmonization rules: a source element, a target element, and an ordered
chain of primitives applied left to right."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping

from .errors import InvalidParams, ParseError, PrimitiveError
from .model import DataDictionary, DataElement
from .primitives import Primitive, primitive_from_dict
from .values import Kind, Value, ValueType, compatible


@dataclass(frozen=True, order=True)
class ElementRef:
    dictionary: str
    element: str

    def __post_init__(self):
        if not (isinstance(self.dictionary, str) and self.dictionary):
            raise ValueError("element reference needs a dictionary name")
        if not (isinstance(self.element, str) and self.element):
            raise ValueError("element reference needs an element name")

    def __str__(self) -> str:
        return f"{self.dictionary}:{self.element}"

    @classmethod
    def parse(cls, text: str) -> ElementRef:
        """Parse ``dictionary:element``."""
        dictionary, sep, element = text.partition(":")
        if not sep:
            raise ValueError(f"expected DICTIONARY:ELEMENT, got {text!r}")
        return cls(dictionary, element)

    def to_dict(self) -> dict:
        return {"dictionary": self.dictionary, "element": self.element}


@dataclass(frozen=True)
class HarmonizationRule:
    source: ElementRef
    target: ElementRef
    operations: tuple[Primitive, ...]

    def __post_init__(self):
        ops = tuple(self.operations)
        if not ops:
            raise InvalidParams("a rule needs at least one operation")
        for op in ops:
            if not isinstance(op, Primitive):
                raise TypeError(f"operations must be primitives, got {op!r}")
        object.__setattr__(self, "operations", ops)

    def __str__(self) -> str:
        chain = " -> ".join(op.name for op in self.operations)
        return f"{self.source} => {self.target} [{chain}]"


def compose_apply(rule: HarmonizationRule, x: Value, target_type: ValueType | None = None) -> Value:
    """Thread ``x`` through the rule's operations.

    A failing primitive's error is re-raised with its 1-based position in the
    chain. When ``target_type`` is decimal, integer results are widened.
    """
    for i, op in enumerate(rule.operations, start=1):
        try:
            x = op.apply(x)
        except PrimitiveError as e:
            e.op_index = i
            e.primitive = op.name
            raise
    if target_type is not None and target_type.kind is Kind.DECIMAL and x.kind is Kind.INTEGER:
        x = Value.decimal(float(x.data))
    return x


@dataclass(frozen=True)
class RuleViolation:
    op_index: int | None  # None for problems not tied to one operation
    kind: str  # "unresolved-source", "unresolved-target", "type-chain", "target-type"
    message: str

    def __str__(self) -> str:
        where = f"op {self.op_index}: " if self.op_index is not None else ""
        return f"{where}{self.message}"


def _resolve(ref: ElementRef, dicts: Mapping[str, DataDictionary]) -> DataElement | None:
    d = dicts.get(ref.dictionary)
    if d is None or ref.element not in d:
        return None
    return d.elements[d.index(ref.element)]


def _as_catalog(dicts) -> Mapping[str, DataDictionary]:
    if isinstance(dicts, Mapping):
        return dicts
    return {d.name: d for d in dicts}


def chain_types(rule: HarmonizationRule, source_type: ValueType) -> tuple[ValueType, list[RuleViolation]]:
    """Walk the operation chain from ``source_type``; return the final type
    and one violation per break."""
    report = []
    current = source_type
    for i, op in enumerate(rule.operations, start=1):
        expected, _ = op.io_types()
        if not op.accepts(current):
            provider = "source provides" if i == 1 else f"op {i - 1} provides"
            report.append(
                RuleViolation(i, "type-chain", f"{op.name} input expects {expected}, {provider} {current}")
            )
            _, current = op.io_types()
        else:
            _, current = op.io_types(current)
    return current, report


def validate_rule(rule: HarmonizationRule, dicts: Mapping[str, DataDictionary] | Iterable[DataDictionary]) -> list[RuleViolation]:
    """Empty iff both elements resolve and the operation chain type-checks
    from the source element's type into the target element's type."""
    dicts = _as_catalog(dicts)
    report = []
    src = _resolve(rule.source, dicts)
    tgt = _resolve(rule.target, dicts)
    if src is None:
        report.append(RuleViolation(None, "unresolved-source", f"unresolved source {rule.source}"))
    if tgt is None:
        report.append(RuleViolation(None, "unresolved-target", f"unresolved target {rule.target}"))
    if src is None:
        return report
    final, breaks = chain_types(rule, src.response_type)
    report.extend(breaks)
    if tgt is not None and not breaks and not compatible(final, tgt.response_type):
        report.append(
            RuleViolation(
                len(rule.operations),
                "target-type",
                f"output {final} does not conform to target {rule.target} ({tgt.response_type})",
            )
        )
    return report


# Canonical JSON form.


def rule_to_dict(rule: HarmonizationRule) -> dict:
    return {
        "Source": rule.source.to_dict(),
        "Target": rule.target.to_dict(),
        "Operations": [op.to_dict() for op in rule.operations],
    }


def _ref_from(doc: Any, what: str) -> ElementRef:
    if not isinstance(doc, Mapping) or set(doc) != {"dictionary", "element"}:
        raise ParseError(f'"{what}" must be an object with exactly "dictionary" and "element"')
    d, e = doc["dictionary"], doc["element"]
    if not (isinstance(d, str) and d and isinstance(e, str) and e):
        raise ParseError(f'"{what}" dictionary and element must be non-empty strings')
    return ElementRef(d, e)


def rule_from_dict(doc: Any) -> HarmonizationRule:
    if not isinstance(doc, Mapping):
        raise ParseError("a rule must be a JSON object")
    keys = set(doc)
    if keys != {"Source", "Target", "Operations"}:
        raise ParseError(f'a rule needs exactly "Source", "Target" and "Operations" keys, got {sorted(keys)}')
    ops = doc["Operations"]
    if not isinstance(ops, list) or not ops:
        raise ParseError('"Operations" must be a non-empty list')
    return HarmonizationRule(
        _ref_from(doc["Source"], "Source"),
        _ref_from(doc["Target"], "Target"),
        tuple(primitive_from_dict(op) for op in ops),
    )


def _dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def serialize_rule(rule: HarmonizationRule) -> str:
    """Canonical text: fixed key order, 2-space indent, trailing newline."""
    return _dumps(rule_to_dict(rule))


def _loads(text: str | bytes) -> Any:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise ParseError(f"not UTF-8: {e}") from None
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None


def _reject_constant(name: str):
    raise ParseError(f"non-finite number {name} is not allowed")


def deserialize_rule(text: str | bytes) -> HarmonizationRule:
    return rule_from_dict(_loads(text))


def serialize_rules(rules: Iterable[HarmonizationRule]) -> str:
    """Batch document: ``{"rules": [...]}``."""
    return _dumps({"rules": [rule_to_dict(r) for r in rules]})


def deserialize_rules(text: str | bytes) -> list[HarmonizationRule]:
    """Load a single-rule document or a ``{"rules": [...]}`` batch."""
    doc = _loads(text)
    if isinstance(doc, Mapping) and set(doc) == {"rules"}:
        if not isinstance(doc["rules"], list):
            raise ParseError('"rules" must be a list')
        return [rule_from_dict(r) for r in doc["rules"]]
    return [rule_from_dict(doc)]


def target_type_for(rule: HarmonizationRule, dicts: Mapping[str, DataDictionary]) -> ValueType | None:
    el = _resolve(rule.target, dicts)
    return el.response_type if el is not None else None

