"""File-backed rule store, queryable by source and target element.

Layout::

    <root>/index.json               pair -> content hash
    <root>/rules/<sha256>.rule.json  canonical rule text

At most one rule is kept per (source, target) pair; a second put for the
same pair replaces the first. The index can always be rebuilt by scanning
``rules/``. One writer per directory at a time; readers may be concurrent.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from .errors import HarmonizeError, StorageFailure
from .rules import ElementRef, HarmonizationRule, deserialize_rule, serialize_rule

log = logging.getLogger(__name__)

RULE_SUFFIX = ".rule.json"
Pair = tuple[ElementRef, ElementRef]


@dataclass(frozen=True)
class PutResult:
    identity: str
    overwrote: bool
    path: Path


def rule_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _atomic_write(path: Path, data: bytes) -> None:
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


def _matches(ref: ElementRef, want: ElementRef | str | None) -> bool:
    if want is None:
        return True
    if isinstance(want, str):
        return ref.element == want
    return ref == want


class RuleStore:
    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.rules_dir = self.root / "rules"
        self.index_path = self.root / "index.json"
        self._index: dict[Pair, str] | None = None

    # index handling

    @property
    def index(self) -> dict[Pair, str]:
        if self._index is None:
            self._index = self._load_index()
        return self._index

    def _load_index(self) -> dict[Pair, str]:
        if not self.index_path.exists():
            return self.scan() if self.rules_dir.is_dir() else {}
        try:
            doc = json.loads(self.index_path.read_text(encoding="utf-8"))
            index = {}
            for entry in doc["rules"]:
                pair = (ElementRef(**entry["source"]), ElementRef(**entry["target"]))
                index[pair] = entry["hash"]
            return index
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise StorageFailure(f"corrupt store index {self.index_path}: {e}") from None

    def scan(self) -> dict[Pair, str]:
        """Rebuild the pair index from the rule files alone."""
        index: dict[Pair, str] = {}
        if not self.rules_dir.is_dir():
            return index
        for path in sorted(self.rules_dir.glob("*" + RULE_SUFFIX)):
            rule = self._read(path)
            pair = (rule.source, rule.target)
            if pair in index:
                raise StorageFailure(f"{path}: second rule for {pair[0]} -> {pair[1]}")
            index[pair] = path.name[: -len(RULE_SUFFIX)]
        return index

    def rebuild_index(self) -> None:
        self._index = self.scan()
        self._write_index()

    def _write_index(self) -> None:
        entries = [
            {"source": s.to_dict(), "target": t.to_dict(), "hash": h}
            for (s, t), h in sorted(self.index.items())
        ]
        text = json.dumps({"rules": entries}, indent=2, ensure_ascii=False) + "\n"
        _atomic_write(self.index_path, text.encode("utf-8"))

    def _path(self, identity: str) -> Path:
        return self.rules_dir / (identity + RULE_SUFFIX)

    def _read(self, path: Path) -> HarmonizationRule:
        try:
            raw = path.read_bytes()
        except OSError as e:
            raise StorageFailure(f"cannot read rule file {path}: {e.strerror or e}") from None
        try:
            rule = deserialize_rule(raw)
        except HarmonizeError as e:
            raise StorageFailure(f"corrupt rule file {path}: {e}") from None
        expected = path.name[: -len(RULE_SUFFIX)]
        if hashlib.sha256(raw).hexdigest() != expected:
            raise StorageFailure(f"corrupt rule file {path}: content does not match its hash")
        return rule

    # public API

    def put(self, rule: HarmonizationRule) -> PutResult:
        """Store ``rule``, replacing any rule for the same (source, target)."""
        text = serialize_rule(rule)
        identity = rule_hash(text)
        pair = (rule.source, rule.target)
        previous = self.index.get(pair)
        try:
            self.rules_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise StorageFailure(f"cannot create {self.rules_dir}: {e.strerror or e}") from None
        path = self._path(identity)
        if not (path.exists() and path.read_bytes() == text.encode("utf-8")):
            _atomic_write(path, text.encode("utf-8"))
        self.index[pair] = identity
        self._write_index()
        if previous is not None and previous != identity:
            try:
                self._path(previous).unlink()
            except FileNotFoundError:
                pass
            except OSError as e:
                raise StorageFailure(f"cannot remove replaced rule {previous}: {e.strerror or e}") from None
        if previous is not None:
            log.info("replaced rule for %s -> %s", rule.source, rule.target)
        return PutResult(identity, previous is not None, path)

    def get(self, source: ElementRef, target: ElementRef) -> HarmonizationRule | None:
        identity = self.index.get((source, target))
        if identity is None:
            return None
        return self._read(self._path(identity))

    def remove(self, source: ElementRef, target: ElementRef) -> bool:
        identity = self.index.pop((source, target), None)
        if identity is None:
            return False
        self._write_index()
        try:
            self._path(identity).unlink()
        except FileNotFoundError:
            pass
        return True

    def query(
        self,
        source: ElementRef | str | None = None,
        target: ElementRef | str | None = None,
    ) -> list[HarmonizationRule]:
        """Rules matching the given source and/or target, ordered by
        (source, target). A plain string matches the element name in any
        dictionary."""
        if source is None and target is None:
            raise ValueError("query needs a source or a target")
        return self._select(source, target)

    def all(self) -> list[HarmonizationRule]:
        return self._select(None, None)

    def entries(self) -> list[tuple[ElementRef, ElementRef, str]]:
        return [(s, t, h) for (s, t), h in sorted(self.index.items())]

    def _select(self, source, target) -> list[HarmonizationRule]:
        out = []
        for (s, t), identity in sorted(self.index.items()):
            if _matches(s, source) and _matches(t, target):
                out.append(self._read(self._path(identity)))
        return out

    def __len__(self) -> int:
        return len(self.index)
