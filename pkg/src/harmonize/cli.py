"""Command-line front end.

Exit status is 0 on success, 1 on a domain failure (invalid rule, job
configuration or data error, replay mismatch) and 2 on an environment
failure (unreadable or unparseable input, corrupt store).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .engine import ErrorPolicy, FileReport, HarmonizationJob, ReplayLog, replay, run_job
from .errors import (
    CellParseError,
    DataError,
    HeaderMismatch,
    InvalidParams,
    JobConfigError,
    MissingOriginal,
    ParseError,
    SchemaError,
    StorageFailure,
    ConformanceError,
)
from .io import (
    CanonicalWriterConfig,
    JobManifest,
    ManifestInput,
    data_file_bytes,
    dataset_name,
    manifest_path,
    parse_data_file,
    read_dictionary,
    split_records,
)
from .model import DataDictionary, catalog
from .rules import ElementRef, HarmonizationRule, deserialize_rules, rule_to_dict, serialize_rule, validate_rule
from .store import RuleStore

OK, FAILED, ENV_ERROR = 0, 1, 2
STORE_ENV = "HARMONIZE_STORE"

log = logging.getLogger("harmonize")


class EnvError(Exception):
    """Environment problem; reported and mapped to exit status 2."""


class DomainError(Exception):
    """Domain failure; reported and mapped to exit status 1."""


# --- loading helpers -----------------------------------------------------------


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise EnvError(f"cannot read {path}: {e.strerror or e}") from None
    except UnicodeDecodeError as e:
        raise EnvError(f"{path}: not UTF-8 ({e})") from None


def _load_dictionaries(paths: list[str]) -> dict[str, DataDictionary]:
    dicts = []
    for p in paths:
        try:
            dicts.append(read_dictionary(p))
        except (StorageFailure, ParseError, SchemaError) as e:
            raise EnvError(str(e)) from None
    try:
        return catalog(dicts)
    except ValueError as e:
        raise EnvError(str(e)) from None


def _load_rule_files(paths: list[str]) -> list[tuple[str, HarmonizationRule]]:
    out = []
    for p in paths:
        text = _read_text(p)
        try:
            rules = deserialize_rules(text)
        except InvalidParams as e:
            raise DomainError(f"{p}: {e}") from None
        except ParseError as e:
            raise EnvError(f"{p}: {e}") from None
        out.extend((p, r) for r in rules)
    return out


def _open_store(path: str | None) -> RuleStore:
    path = path or os.environ.get(STORE_ENV)
    if not path:
        raise EnvError(f"no rule store given (use --store or set {STORE_ENV})")
    return RuleStore(path)


def _ref_filter(text: str | None) -> ElementRef | str | None:
    if text is None:
        return None
    if ":" in text:
        try:
            return ElementRef.parse(text)
        except ValueError as e:
            raise EnvError(str(e)) from None
    return text


def _emit(args, payload: dict, text_lines: list[str], stream=None) -> None:
    stream = stream or sys.stdout
    if args.format == "json":
        stream.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    else:
        for line in text_lines:
            stream.write(line + "\n")


# --- validate ------------------------------------------------------------------


def cmd_validate(args) -> int:
    dicts = _load_dictionaries(args.dictionary)
    rules = _load_rule_files(args.rules)
    results = []
    lines = []
    for path, rule in rules:
        problems = validate_rule(rule, dicts)
        results.append(
            {
                "file": path,
                "source": str(rule.source),
                "target": str(rule.target),
                "valid": not problems,
                "violations": [
                    {"op": v.op_index, "kind": v.kind, "message": v.message} for v in problems
                ],
            }
        )
        if problems:
            lines.append(f"INVALID {path}: {rule}")
            lines.extend(f"  {v}" for v in problems)
        else:
            lines.append(f"OK {path}: {rule}")
    valid = all(r["valid"] for r in results)
    _emit(args, {"valid": valid, "rules": results}, lines)
    return OK if valid else FAILED


# --- harmonize -----------------------------------------------------------------


def _split_input(item: str) -> tuple[str, str | None]:
    path, sep, dname = item.rpartition("=")
    if sep and path and dname and not Path(item).exists():
        return path, dname
    return item, None


def _pick_dictionary(path: str, text: str, explicit: str | None, dicts: dict[str, DataDictionary]) -> DataDictionary:
    if explicit is not None:
        if explicit not in dicts:
            raise EnvError(f"{path}: unknown dictionary {explicit!r}")
        return dicts[explicit]
    try:
        records = split_records(text)
    except ParseError as e:
        raise EnvError(f"{path}: {e}") from None
    header = set(records[0]) if records else set()
    matches = [d for d in dicts.values() if set(d.names) == header]
    if len(matches) != 1:
        what = "no dictionary" if not matches else "several dictionaries (" + ", ".join(d.name for d in matches) + ")"
        raise EnvError(f"{path}: header matches {what}; name one with PATH=DICTIONARY")
    return matches[0]


def _summary_lines(reports: list[FileReport]) -> list[str]:
    lines = []
    for r in reports:
        line = f"{r.dataset}: {r.rows} rows, {r.rules_applied} rule(s) applied"
        if r.passthrough:
            line += f", passed through: {', '.join(r.passthrough)}"
        lines.append(line)
        lines.extend(f"  warning: {w}" for w in r.warnings)
        lines.extend(f"  error: {e}" for e in r.errors)
    return lines


def cmd_harmonize(args) -> int:
    dicts = _load_dictionaries(args.dictionary)
    try:
        target = read_dictionary(args.target)
    except (StorageFailure, ParseError, SchemaError) as e:
        raise EnvError(str(e)) from None
    if target.name in dicts and dicts[target.name] != target:
        raise EnvError(f"two different dictionaries named {target.name!r}")
    candidates = dict(dicts)
    candidates[target.name] = target

    if args.rules:
        rules = [r for _, r in _load_rule_files(args.rules)]
    elif args.store or os.environ.get(STORE_ENV):
        try:
            rules = _open_store(args.store).all()
        except StorageFailure as e:
            raise EnvError(str(e)) from None
    else:
        rules = []

    inputs = []
    manifest_inputs = []
    for item in args.input:
        path, explicit = _split_input(item)
        text = _read_text(path)
        d = _pick_dictionary(path, text, explicit, candidates)
        name = args.dataset_name if path == "-" else dataset_name(path)
        try:
            f = parse_data_file(text, d, name)
        except (HeaderMismatch, CellParseError, ParseError) as e:
            raise EnvError(f"{path}: {e}") from None
        own = [r for r in rules if r.source.dictionary == d.name and r.target.dictionary == target.name]
        inputs.append((f, own))
        manifest_inputs.append(ManifestInput(name, f"{name}.csv" if path == "-" else Path(path).name, d))
    used = {id(r) for _, own in inputs for r in own}
    for r in rules:
        if id(r) not in used:
            log.warning("rule %s does not apply to any input", r)

    try:
        job = HarmonizationJob(inputs, target, ErrorPolicy(args.error_policy), args.name)
        result = run_job(job, workers=args.workers)
    except (JobConfigError, DataError, ConformanceError) as e:
        raise DomainError(f"{type(e).__name__}: {e}") from None

    config = CanonicalWriterConfig(labels=args.labels)
    data = data_file_bytes(result.output, config)
    if args.output == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        _write(args.output, data)
    log_path = args.log
    if log_path is None and args.output != "-":
        log_path = str(Path(args.output).with_suffix("")) + ".log.jsonl"
    if log_path is not None:
        _write(log_path, result.log.dumps().encode("utf-8"))
        manifest = JobManifest(target, tuple(manifest_inputs), job.policy.value, args.name)
        _write(manifest_path(log_path), manifest.to_json().encode("utf-8"))

    payload = {
        "output": args.output,
        "log": log_path,
        "rows": len(result.output.rows),
        "log_entries": len(result.log),
        "files": [r.to_dict() for r in result.reports],
    }
    lines = _summary_lines(result.reports)
    lines.append(f"wrote {len(result.output.rows)} rows, {len(result.log)} log entries")
    _emit(args, payload, lines, sys.stderr if args.output == "-" else sys.stdout)
    return OK


def _write(path: str | Path, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise EnvError(f"cannot write {path}: {e.strerror or e}") from None


# --- replay --------------------------------------------------------------------


def cmd_replay(args) -> int:
    try:
        replay_log = ReplayLog.load(args.log)
    except StorageFailure as e:
        raise EnvError(str(e)) from None
    except (ParseError, InvalidParams) as e:
        raise EnvError(f"{args.log}: {e}") from None

    mpath = Path(args.manifest) if args.manifest else manifest_path(args.log)
    originals_dir = Path(args.originals)
    originals = {}
    if mpath.exists():
        try:
            manifest = JobManifest.from_json(_read_text(str(mpath)))
        except (ParseError, SchemaError) as e:
            raise EnvError(f"{mpath}: {e}") from None
        target, policy, output_name = manifest.target, manifest.policy, manifest.output_name
        sources = [(i.dataset, i.file, i.dictionary) for i in manifest.inputs]
    else:
        if not args.target:
            raise EnvError(f"no job manifest at {mpath}; pass --target and --dictionary")
        dicts = _load_dictionaries(args.dictionary)
        try:
            target = read_dictionary(args.target)
        except (StorageFailure, ParseError, SchemaError) as e:
            raise EnvError(str(e)) from None
        policy, output_name = args.error_policy, args.name
        by_dataset = {}
        for entry in replay_log:
            by_dataset.setdefault(entry.dataset, entry.action.source.dictionary)
        sources = []
        for ds, dname in by_dataset.items():
            if dname not in dicts:
                raise EnvError(f"dictionary {dname!r} for dataset {ds!r} was not given")
            sources.append((ds, f"{ds}.csv", dicts[dname]))

    for ds, fname, d in sources:
        path = originals_dir / fname
        if not path.exists():
            raise EnvError(str(MissingOriginal(ds)) + f" (looked for {path})")
        try:
            originals[ds] = parse_data_file(_read_text(str(path)), d, ds)
        except (HeaderMismatch, CellParseError, ParseError) as e:
            raise EnvError(f"{path}: {e}") from None

    try:
        output = replay(replay_log, originals, target, policy=policy, output_name=output_name)
    except MissingOriginal as e:
        raise EnvError(str(e)) from None
    except (JobConfigError, DataError, ConformanceError) as e:
        raise DomainError(f"{type(e).__name__}: {e}") from None

    if args.output:
        data = data_file_bytes(output, CanonicalWriterConfig(labels=args.labels))
        if args.output == "-":
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        else:
            _write(args.output, data)

    status = OK
    payload = {"rows": len(output.rows), "log_entries": len(replay_log)}
    lines = [f"replayed {len(replay_log)} log entries into {len(output.rows)} rows"]
    if args.verify:
        try:
            prior = Path(args.verify).read_bytes()
        except OSError as e:
            raise EnvError(f"cannot read {args.verify}: {e.strerror or e}") from None
        match = prior == data_file_bytes(output)
        payload["verify"] = "MATCH" if match else "MISMATCH"
        lines.append(payload["verify"])
        status = OK if match else FAILED
    _emit(args, payload, lines, sys.stderr if args.output == "-" else sys.stdout)
    return status


# --- rules ---------------------------------------------------------------------


def cmd_rules(args) -> int:
    store = _open_store(args.store)
    try:
        if args.action == "put":
            return _rules_put(args, store)
        if args.action == "remove":
            if not (args.source and args.target and ":" in args.source and ":" in args.target):
                raise EnvError("remove needs --source DICT:ELEMENT and --target DICT:ELEMENT")
            removed = store.remove(ElementRef.parse(args.source), ElementRef.parse(args.target))
            _emit(args, {"removed": removed}, ["removed" if removed else "no such rule"])
            return OK if removed else FAILED
        source, target = _ref_filter(args.source), _ref_filter(args.target)
        if source is None and target is None:
            rules = store.all()
        else:
            rules = store.query(source, target)
    except StorageFailure as e:
        raise EnvError(str(e)) from None

    if args.action == "list":
        lines = [f"{r.source} -> {r.target}  [{', '.join(op.name for op in r.operations)}]" for r in rules]
        payload = {
            "rules": [
                {"source": str(r.source), "target": str(r.target), "operations": [op.name for op in r.operations]}
                for r in rules
            ]
        }
        _emit(args, payload, lines)
    else:
        if args.format == "json":
            _emit(args, {"rules": [rule_to_dict(r) for r in rules]}, [])
        else:
            sys.stdout.write("".join(serialize_rule(r) for r in rules))
    return OK


def _rules_put(args, store: RuleStore) -> int:
    rules = _load_rule_files(args.files)
    dicts = _load_dictionaries(args.dictionary) if args.dictionary else None
    if dicts is not None:
        bad = []
        for path, rule in rules:
            problems = validate_rule(rule, dicts)
            if problems:
                bad.append((path, rule, problems))
        if bad:
            lines = []
            for path, rule, problems in bad:
                lines.append(f"INVALID {path}: {rule}")
                lines.extend(f"  {v}" for v in problems)
            _emit(args, {"stored": [], "invalid": [str(r) for _, r, _ in bad]}, lines)
            return FAILED
    stored = []
    lines = []
    for _, rule in rules:
        res = store.put(rule)
        stored.append({"source": str(rule.source), "target": str(rule.target), "id": res.identity, "overwrote": res.overwrote})
        lines.append(f"{'replaced' if res.overwrote else 'stored'} {rule.source} -> {rule.target} ({res.identity[:12]})")
    _emit(args, {"stored": stored}, lines)
    return OK


# --- fixtures ------------------------------------------------------------------


def cmd_fixtures(args) -> int:
    from .fixtures import write_fixtures

    try:
        paths = write_fixtures(args.outdir, seed=args.seed)
    except OSError as e:
        raise EnvError(f"cannot write fixtures: {e}") from None
    _emit(args, {"written": [str(p) for p in paths]}, [str(p) for p in paths])
    return OK


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text", help="report format")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = argparse.ArgumentParser(prog="harmonize", description="Rule-based tabular data harmonization.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="type-check rules against dictionaries")
    v.add_argument("rules", nargs="+", help="rule files (.rule.json or batch documents)")
    v.add_argument("-d", "--dictionary", action="append", default=[], help="dictionary JSON file")
    v.set_defaults(func=cmd_validate)

    h = sub.add_parser("harmonize", parents=[common], help="harmonize and integrate data files")
    h.add_argument("-i", "--input", action="append", required=True,
                   help="CSV file, optionally PATH=DICTIONARY; '-' reads stdin")
    h.add_argument("-d", "--dictionary", action="append", default=[], help="source dictionary JSON file")
    h.add_argument("-t", "--target", required=True, help="target dictionary JSON file")
    h.add_argument("-r", "--rules", action="append", default=[], help="rule file")
    h.add_argument("--store", help=f"rule store directory (default ${STORE_ENV})")
    h.add_argument("-o", "--output", required=True, help="output CSV; '-' writes stdout")
    h.add_argument("--log", help="replay log path (default: OUTPUT stem + .log.jsonl)")
    h.add_argument("--error-policy", choices=[e.value for e in ErrorPolicy], default="fail-fast")
    h.add_argument("--labels", action="store_true", help="write enum labels instead of codes")
    h.add_argument("--name", default="harmonized", help="name of the integrated dataset")
    h.add_argument("--dataset-name", default="stdin", help="dataset name for data read from stdin")
    h.add_argument("--workers", type=int, default=1)
    h.set_defaults(func=cmd_harmonize)

    r = sub.add_parser("replay", parents=[common], help="re-run a replay log against original files")
    r.add_argument("log", help="replay log (.jsonl)")
    r.add_argument("--originals", default=".", help="directory holding the original CSV files")
    r.add_argument("-o", "--output", help="output CSV; '-' writes stdout")
    r.add_argument("--verify", help="compare the replayed output byte for byte with this file")
    r.add_argument("--manifest", help="job manifest (default: LOG with .job.json suffix)")
    r.add_argument("-t", "--target", help="target dictionary, when there is no manifest")
    r.add_argument("-d", "--dictionary", action="append", default=[], help="source dictionary, when there is no manifest")
    r.add_argument("--error-policy", choices=[e.value for e in ErrorPolicy], default="fail-fast")
    r.add_argument("--name", default="harmonized")
    r.add_argument("--labels", action="store_true")
    r.set_defaults(func=cmd_replay)

    s = sub.add_parser("rules", parents=[common], help="query and edit a rule store")
    s.add_argument("--store", help=f"rule store directory (default ${STORE_ENV})")
    s.add_argument("action", choices=("list", "show", "put", "remove"))
    s.add_argument("files", nargs="*", help="rule files for put")
    s.add_argument("--source", help="DICTIONARY:ELEMENT or ELEMENT")
    s.add_argument("--target", help="DICTIONARY:ELEMENT or ELEMENT")
    s.add_argument("-d", "--dictionary", action="append", default=[], help="validate put rules against these")
    s.set_defaults(func=cmd_rules)

    f = sub.add_parser("fixtures", parents=[common], help="write the bundled example fixtures")
    f.add_argument("outdir")
    f.add_argument("--seed", type=int, default=None)
    f.set_defaults(func=cmd_fixtures)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "command", None) == "fixtures" and args.seed is None:
        from .fixtures import SEED

        args.seed = SEED
    if getattr(args, "command", None) == "rules" and args.action == "put" and not args.files:
        parser.error("rules put needs at least one rule file")
    try:
        return args.func(args)
    except EnvError as e:
        print(f"error: {e}", file=sys.stderr)
        return ENV_ERROR
    except DomainError as e:
        print(f"error: {e}", file=sys.stderr)
        return FAILED


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
