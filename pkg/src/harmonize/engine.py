"""Batch harmonization, integration with provenance columns, and replay.

Every rule application is recorded as a :class:`LogEntry` holding the full
rule (``action``) and the dataset it was applied to (``dataset``). Given the
original files, :func:`replay` re-runs a log and reproduces the harmonized
output byte for byte.
"""

from __future__ import annotations

import enum
import json
import logging
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import (
    ConformanceError,
    DataError,
    HarmonizeError,
    JobConfigError,
    MissingOriginal,
    ParseError,
    PrimitiveError,
    StorageFailure,
    TypeMismatch,
)
from .model import DataDictionary, DataElement, DataFile, Variable, validate_file
from .rules import HarmonizationRule, compose_apply, rule_from_dict, rule_to_dict, validate_rule
from .values import INTEGER, MISSING, STRING, Value, conforms

log = logging.getLogger(__name__)

SOURCE_DATASET = "source_dataset"
ORIGINAL_ID = "original_id"
PROVENANCE_ELEMENTS = (
    DataElement(SOURCE_DATASET, Variable("provenance"), "Name of the dataset the record came from", STRING),
    DataElement(ORIGINAL_ID, Variable("provenance"), "1-based position of the record in its dataset", INTEGER),
)


class ErrorPolicy(str, enum.Enum):
    FAIL_FAST = "fail-fast"
    COLLECT = "collect"


# --- replay log --------------------------------------------------------------


@dataclass(frozen=True)
class LogEntry:
    action: HarmonizationRule
    dataset: str

    def to_dict(self) -> dict:
        return {"action": rule_to_dict(self.action), "dataset": self.dataset}

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_dict(cls, doc) -> LogEntry:
        if not isinstance(doc, dict) or set(doc) != {"action", "dataset"}:
            raise ParseError('log entry needs exactly "action" and "dataset"')
        if not isinstance(doc["dataset"], str) or not doc["dataset"]:
            raise ParseError('log entry "dataset" must be a non-empty string')
        return cls(rule_from_dict(doc["action"]), doc["dataset"])


class ReplayLog:
    """Append-only, ordered record of rule applications (one JSON object per line)."""

    def __init__(self, entries: Iterable[LogEntry] = ()):
        self.entries: list[LogEntry] = list(entries)

    def append(self, rule: HarmonizationRule, dataset: str) -> None:
        self.entries.append(LogEntry(rule, dataset))

    def extend(self, other: ReplayLog) -> None:
        self.entries.extend(other.entries)

    def __iter__(self) -> Iterator[LogEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other):
        return isinstance(other, ReplayLog) and self.entries == other.entries

    def datasets(self) -> list[str]:
        """Dataset names in order of first appearance."""
        return list(dict.fromkeys(e.dataset for e in self.entries))

    def dumps(self) -> str:
        return "".join(e.to_line() + "\n" for e in self.entries)

    @classmethod
    def loads(cls, text: str) -> ReplayLog:
        entries = []
        for n, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"log line {n}: malformed JSON ({e.msg})") from None
            try:
                entries.append(LogEntry.from_dict(doc))
            except HarmonizeError as e:
                raise type(e)(f"log line {n}: {e}") from None
        return cls(entries)

    def write(self, path: str | os.PathLike) -> None:
        try:
            Path(path).write_text(self.dumps(), encoding="utf-8", newline="\n")
        except OSError as e:
            raise StorageFailure(f"cannot write {path}: {e.strerror or e}") from None

    def append_to(self, path: str | os.PathLike) -> None:
        try:
            with open(path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(self.dumps())
        except OSError as e:
            raise StorageFailure(f"cannot write {path}: {e.strerror or e}") from None

    @classmethod
    def load(cls, path: str | os.PathLike) -> ReplayLog:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise StorageFailure(f"cannot read {path}: {e.strerror or e}") from None
        return cls.loads(text)


# --- per-file harmonization ----------------------------------------------------


@dataclass
class CellError:
    row: int  # 1-based
    source: str
    target: str
    message: str

    def __str__(self) -> str:
        return f"row {self.row}, {self.source} -> {self.target}: {self.message}"


@dataclass
class FileReport:
    dataset: str
    rows: int = 0
    rules_applied: int = 0
    passthrough: list[str] = field(default_factory=list)
    dropped: list[str] = field(default_factory=list)
    errors: list[CellError] = field(default_factory=list)

    @property
    def warnings(self) -> list[str]:
        out = []
        if self.dropped:
            out.append("dropped columns not in the target dictionary: " + ", ".join(self.dropped))
        if self.errors:
            out.append(f"{len(self.errors)} cell(s) set to missing after errors")
        return out

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "rows": self.rows,
            "rules_applied": self.rules_applied,
            "passthrough": self.passthrough,
            "dropped": self.dropped,
            "errors": [
                {"row": e.row, "source": e.source, "target": e.target, "message": e.message}
                for e in self.errors
            ],
        }


@dataclass(frozen=True)
class _Step:
    target_index: int
    source_index: int
    rule: HarmonizationRule | None  # None means identity pass-through


def plan_file(f: DataFile, rules: Sequence[HarmonizationRule], target: DataDictionary) -> tuple[list[_Step], list[str]]:
    """Decide how each target element is produced for ``f``.

    Returns the steps (rules first, in the given order, then pass-throughs)
    and the source columns that will be dropped. Raises JobConfigError when
    a target element is uncovered or covered twice, or a rule is ill-typed.
    """
    src = f.dictionary
    if src.name == target.name and src != target:
        raise JobConfigError(f"{f.name}: source and target dictionaries share the name {src.name!r}")
    dicts = {src.name: src, target.name: target}
    by_target: dict[str, HarmonizationRule] = {}
    for rule in rules:
        if rule.source.dictionary != src.name:
            raise JobConfigError(
                f"{f.name}: rule {rule} reads dictionary {rule.source.dictionary!r}, file uses {src.name!r}"
            )
        if rule.target.dictionary != target.name:
            raise JobConfigError(f"{f.name}: rule {rule} does not target dictionary {target.name!r}")
        problems = validate_rule(rule, dicts)
        if problems:
            raise JobConfigError(f"{f.name}: invalid rule {rule}: " + "; ".join(map(str, problems)))
        if rule.target.element in by_target:
            raise JobConfigError(
                f"{f.name}: target element {rule.target.element!r} is produced by more than one rule"
            )
        by_target[rule.target.element] = rule

    steps = []
    used = set()
    for rule in rules:
        t = target.index(rule.target.element)
        s = src.index(rule.source.element)
        steps.append(_Step(t, s, rule))
        used.add(s)
    for t, el in enumerate(target.elements):
        if el.name in by_target:
            continue
        if el.name not in src:
            raise JobConfigError(f"{f.name}: target element {el.name!r} is not covered by any rule")
        s = src.index(el.name)
        if src.elements[s].response_type != el.response_type:
            raise JobConfigError(
                f"{f.name}: element {el.name!r} has type {src.elements[s].response_type} "
                f"but the target expects {el.response_type}; a rule is required"
            )
        steps.append(_Step(t, s, None))
        used.add(s)
    dropped = [el.name for i, el in enumerate(src.elements) if i not in used]
    return steps, dropped


def harmonize_file(
    f: DataFile,
    rules: Sequence[HarmonizationRule],
    target: DataDictionary,
    log_: ReplayLog | None = None,
    *,
    policy: ErrorPolicy | str = ErrorPolicy.FAIL_FAST,
    report: FileReport | None = None,
) -> DataFile:
    """Produce a new file conforming to ``target``; ``f`` is left untouched.

    One log entry per rule is appended to ``log_`` in rule order. Under the
    collect policy failing cells become missing and are listed in ``report``.
    """
    policy = ErrorPolicy(policy)
    report = report if report is not None else FileReport(f.name)
    steps, dropped = plan_file(f, rules, target)
    report.rows = len(f.rows)
    report.dropped = dropped
    if dropped:
        log.warning("%s: dropping columns not in %s: %s", f.name, target.name, ", ".join(dropped))

    n = len(f.rows)
    columns: list[list[Value] | None] = [None] * len(target.elements)
    errors: list[tuple[int, int, CellError]] = []
    for step in steps:
        src_el = f.dictionary.elements[step.source_index]
        tgt_el = target.elements[step.target_index]
        src_type, tgt_type = src_el.response_type, tgt_el.response_type
        out = [MISSING] * n
        for r in range(n):
            x = f.rows[r][step.source_index]
            try:
                if not conforms(x, src_type):
                    raise TypeMismatch(f"input {x!r} does not conform to {src_el.name} ({src_type})")
                y = x if step.rule is None else compose_apply(step.rule, x, tgt_type)
                if not conforms(y, tgt_type):
                    raise TypeMismatch(f"result {y!r} does not conform to {tgt_el.name} ({tgt_type})")
            except (PrimitiveError, OverflowError, ValueError) as e:
                if policy is ErrorPolicy.FAIL_FAST:
                    raise DataError(f.name, r + 1, src_el.name, tgt_el.name, e) from e
                errors.append((r, step.target_index, CellError(r + 1, src_el.name, tgt_el.name, str(e))))
                continue
            out[r] = y
        columns[step.target_index] = out
        if step.rule is None:
            report.passthrough.append(tgt_el.name)
        else:
            report.rules_applied += 1
            if log_ is not None:
                log_.append(step.rule, f.name)

    errors.sort(key=lambda e: (e[0], e[1]))
    report.errors.extend(e for _, _, e in errors)
    rows = tuple(zip(*columns)) if columns else tuple(() for _ in range(n))
    return DataFile(f.name, target, rows)


# --- integration -------------------------------------------------------------


def integrated_dictionary(target: DataDictionary) -> DataDictionary:
    for el in PROVENANCE_ELEMENTS:
        if el.name in target:
            raise ConformanceError(target.name, f"target already defines provenance column {el.name!r}")
    return DataDictionary(target.name, target.elements + PROVENANCE_ELEMENTS)


def integrate(files: Sequence[DataFile], target: DataDictionary, name: str = "harmonized") -> DataFile:
    """Concatenate harmonized files in order and append the provenance
    columns ``source_dataset`` and ``original_id`` (1-based row position)."""
    dictionary = integrated_dictionary(target)
    seen = set()
    rows = []
    for f in files:
        if f.name in seen:
            raise ConformanceError(f.name, "dataset name appears twice; provenance would be ambiguous")
        seen.add(f.name)
        if f.dictionary != target:
            raise ConformanceError(f.name, f"does not use the target dictionary {target.name!r}")
        problems = validate_file(f)
        if problems:
            raise ConformanceError(f.name, f"{len(problems)} non-conforming cell(s), first: {problems[0]}")
        ds = Value.text(f.name)
        for i, row in enumerate(f.rows, start=1):
            rows.append(row + (ds, Value.integer(i)))
    return DataFile(name, dictionary, tuple(rows))


def trace(integrated: DataFile, originals: Mapping[str, DataFile]) -> list[tuple[str, int, tuple[Value, ...]]]:
    """Resolve every integrated row to (dataset, original_id, original row)."""
    ds_i = integrated.dictionary.index(SOURCE_DATASET)
    id_i = integrated.dictionary.index(ORIGINAL_ID)
    out = []
    for row in integrated.rows:
        ds, rid = row[ds_i].data, row[id_i].data
        original = originals.get(ds)
        if original is None:
            raise MissingOriginal(ds)
        if not 1 <= rid <= len(original.rows):
            raise ConformanceError(ds, f"original_id {rid} is out of range")
        out.append((ds, rid, original.rows[rid - 1]))
    return out


# --- jobs --------------------------------------------------------------------


@dataclass
class HarmonizationJob:
    inputs: list[tuple[DataFile, list[HarmonizationRule]]]
    target: DataDictionary
    policy: ErrorPolicy = ErrorPolicy.FAIL_FAST
    output_name: str = "harmonized"

    def __post_init__(self):
        self.policy = ErrorPolicy(self.policy)
        names = [f.name for f, _ in self.inputs]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise JobConfigError("duplicate dataset names: " + ", ".join(dup))
        for f, rules in self.inputs:
            for rule in rules:
                if rule.target.dictionary != self.target.name or rule.target.element not in self.target:
                    raise JobConfigError(f"rule {rule} does not target an element of {self.target.name!r}")


@dataclass
class JobResult:
    output: DataFile
    log: ReplayLog
    reports: list[FileReport]
    files: list[DataFile]


def run_job(job: HarmonizationJob, workers: int = 1) -> JobResult:
    """Harmonize every input and integrate the results.

    Files may be processed in parallel; the log is always assembled in input
    order, then rule order.
    """

    def one(item):
        f, rules = item
        sub = ReplayLog()
        report = FileReport(f.name)
        out = harmonize_file(f, rules, job.target, sub, policy=job.policy, report=report)
        return out, sub, report

    if workers > 1 and len(job.inputs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, job.inputs))
    else:
        results = [one(item) for item in job.inputs]

    full = ReplayLog()
    for _, sub, _ in results:
        full.extend(sub)
    files = [out for out, _, _ in results]
    output = integrate(files, job.target, job.output_name)
    return JobResult(output, full, [r for _, _, r in results], files)


def replay(
    log_: ReplayLog,
    originals: Mapping[str, DataFile] | Sequence[DataFile],
    target: DataDictionary,
    *,
    policy: ErrorPolicy | str = ErrorPolicy.FAIL_FAST,
    output_name: str = "harmonized",
    workers: int = 1,
) -> DataFile:
    """Re-run a log against the original files and integrate the result.

    ``originals`` is the job's ordered input catalog; files with no logged
    action are passed through as in the original run.
    """
    if not isinstance(originals, Mapping):
        originals = {f.name: f for f in originals}
    rules: dict[str, list[HarmonizationRule]] = defaultdict(list)
    for entry in log_:
        if entry.dataset not in originals:
            raise MissingOriginal(entry.dataset)
        rules[entry.dataset].append(entry.action)
    inputs = []
    for name, f in originals.items():
        if f.name != name:
            f = DataFile(name, f.dictionary, f.rows)
        inputs.append((f, rules.get(name, [])))
    job = HarmonizationJob(
        inputs,
        target,
        policy,
        output_name,
    )
    return run_job(job, workers).output
