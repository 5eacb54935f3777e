"""Rule-based harmonization of tabular data with replayable provenance logs."""

from __future__ import annotations

__version__ = "0.1.0"

from .engine import (
    ErrorPolicy,
    FileReport,
    HarmonizationJob,
    JobResult,
    LogEntry,
    ReplayLog,
    harmonize_file,
    integrate,
    replay,
    run_job,
    trace,
)
from .model import DataDictionary, DataElement, DataFile, validate_file
from .primitives import (
    Bin,
    Cast,
    ConvertDate,
    ConvertUnits,
    EnumToEnum,
    Interval,
    Reduce,
    Round,
    Threshold,
    Truncate,
)
from .rules import ElementRef, HarmonizationRule, deserialize_rule, serialize_rule, validate_rule
from .store import RuleStore
from .values import MISSING, CodedValueSet, Value, ValueType

__all__ = [
    "Bin", "Cast", "CodedValueSet", "ConvertDate", "ConvertUnits", "DataDictionary",
    "DataElement", "DataFile", "ElementRef", "EnumToEnum", "ErrorPolicy", "FileReport",
    "HarmonizationJob", "HarmonizationRule", "Interval", "JobResult", "LogEntry", "MISSING",
    "Reduce", "ReplayLog", "Round", "RuleStore", "Threshold", "Truncate", "Value", "ValueType",
    "deserialize_rule", "harmonize_file", "integrate", "replay", "run_job", "serialize_rule",
    "trace", "validate_file", "validate_rule",
]
