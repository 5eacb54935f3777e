"""Worked-example fixtures: the age survey and the two employment/commute
studies, with a seeded generator for the synthetic study data.

Run ``python -m harmonize.fixtures OUTDIR`` (or ``harmonize fixtures OUTDIR``)
to write dictionaries, data files, rules and expected outputs to disk.
"""

from __future__ import annotations

import random
import sys
from pathlib import Path

from .engine import HarmonizationJob, run_job
from .io import JobManifest, ManifestInput, dictionary_to_json, dumps_data_file, manifest_path
from .model import DataDictionary, DataFile, make_element
from .primitives import Bin, Cast, ConvertUnits, EnumToEnum, Interval, MAX, MIN, Round
from .rules import ElementRef, HarmonizationRule, serialize_rule
from .values import Value

SEED = 20250314

# --- age survey ----------------------------------------------------------------

AGE_RANGES = ("30 or Under", "31-40", "41-50", "51-60", "61-70", "Over 70")
AGE_BINS = (
    Interval(MIN, 30, "30 or Under"),
    Interval(31, 40, "31-40"),
    Interval(41, 50, "41-50"),
    Interval(51, 60, "51-60"),
    Interval(61, 70, "61-70"),
    Interval(71, MAX, "Over 70"),
)
SEX_CODES = {0: "Female", 1: "Male", 2: "Intersex", 3: "Prefer not to answer"}
VACCINATION_CODES = {0: "Yes", 1: "No", 2: "Do not know", 3: "Prefer not to answer"}

SURVEY_RECORDS = (
    (1, "23", 1, 0),
    (2, "47", 1, 0),
    (3, "31", 0, 0),
    (4, "56", 1, 1),
    (5, "23", 0, 0),
    (6, "45", 0, 3),
    (7, "68", 3, 0),
    (8, "25", 1, 0),
    (9, "34", 1, 1),
    (10, "93", 0, 0),
)


def _record_id():
    return make_element("record_id", "integer", variable="record identifier", prompt="Record identifier")


def _sex():
    return make_element(
        "sex", "enum", variable="sex assigned at birth",
        prompt="What is your biological sex assigned at birth?", codes=SEX_CODES,
    )


def _vaccination():
    return make_element(
        "cov19_vaccination_status", "enum", variable="COVID-19 vaccination status",
        prompt="Are you vaccinated against COVID-19?", codes=VACCINATION_CODES,
    )


def age_text_element():
    return make_element("age_text", "string", variable="age", prompt="What is your age?")


def age_range_element():
    return make_element(
        "age_range", "enum", variable="age", prompt="What is your age?",
        codes=dict(enumerate(AGE_RANGES)),
    )


def survey_dictionary() -> DataDictionary:
    return DataDictionary("health_survey", (_record_id(), age_text_element(), _sex(), _vaccination()))


def survey_target_dictionary() -> DataDictionary:
    return DataDictionary("health_survey_harmonized", (_record_id(), age_range_element(), _sex(), _vaccination()))


def age_dictionaries() -> tuple[DataDictionary, DataDictionary]:
    """The two single-element implementations of "age"."""
    return (
        DataDictionary("age_text_survey", (age_text_element(),)),
        DataDictionary("age_range_survey", (age_range_element(),)),
    )


def survey_file() -> DataFile:
    rows = tuple(
        (Value.integer(rid), Value.text(age), Value.enum(sex), Value.enum(vax))
        for rid, age, sex, vax in SURVEY_RECORDS
    )
    return DataFile("health_survey", survey_dictionary(), rows)


def age_rule(source_dictionary: str = "health_survey", target_dictionary: str = "health_survey_harmonized") -> HarmonizationRule:
    return HarmonizationRule(
        ElementRef(source_dictionary, "age_text"),
        ElementRef(target_dictionary, "age_range"),
        (Cast("string", "integer"), Bin(AGE_BINS)),
    )


# --- employment / commute studies ------------------------------------------------

UP_EMPLOYMENT = {
    1: "Working now",
    2: "Only temporarily laid off, sick leave, or maternity leave",
    3: "Looking for work, unemployed",
    4: "Retired",
    5: "Disabled, permanently or temporarily",
    6: "Keeping house",
    7: "Student",
    8: "Other",
}
RAD_EMPLOYMENT = {
    0: "Employed full-time",
    1: "Employed part-time",
    2: "Unemployed",
    3: "Retired",
    4: "Student",
    5: "Other",
    6: "Prefer not to answer",
}
NIH_EMPLOYMENT = {
    0: "Employed",
    1: "Unemployed",
    2: "Retired",
    3: "Student",
    4: "Other",
    5: "Prefer not to answer",
}
UP_TO_NIH = {1: 0, 2: 0, 3: 1, 4: 2, 5: 4, 6: 4, 7: 3, 8: 4}
RAD_TO_NIH = {0: 0, 1: 0, 2: 1, 3: 2, 4: 3, 5: 4, 6: 5}


def _commute_miles():
    return make_element(
        "commute_distance_miles", "decimal", variable="commute distance",
        prompt="How far is your commute to work or school, in miles?",
    )


def employment_dictionaries() -> tuple[DataDictionary, DataDictionary, DataDictionary]:
    """(RADx-UP style source, RADx-rad style source, harmonized target)."""
    up = DataDictionary(
        "radx_up",
        (
            make_element(
                "current_employment_status", "enum", variable="employment status",
                prompt="What is your current employment status?", codes=UP_EMPLOYMENT,
            ),
            _commute_miles(),
        ),
    )
    rad = DataDictionary(
        "radx_rad",
        (
            make_element(
                "employment", "enum", variable="employment status",
                prompt="Which best describes your employment?", codes=RAD_EMPLOYMENT,
            ),
            make_element(
                "commute_distance_km", "decimal", variable="commute distance",
                prompt="How far is your commute to work or school, in kilometers?",
            ),
        ),
    )
    target = DataDictionary(
        "nih_harmonized",
        (
            make_element(
                "nih_employment", "enum", variable="employment status",
                prompt="What is your current employment status?", codes=NIH_EMPLOYMENT,
            ),
            _commute_miles(),
        ),
    )
    return up, rad, target


def employment_files(seed: int = SEED, up_rows: int = 12, rad_rows: int = 10) -> tuple[DataFile, DataFile]:
    """Synthetic records for the two studies. The first RADx-rad record has
    a 10 km commute."""
    rng = random.Random(seed)
    up, rad, _ = employment_dictionaries()
    up_data = tuple(
        (Value.enum(rng.choice(sorted(UP_EMPLOYMENT))), Value.decimal(round(rng.uniform(0.5, 40.0), 2)))
        for _ in range(up_rows)
    )
    rad_data = [
        (Value.enum(rng.choice(sorted(RAD_EMPLOYMENT))), Value.decimal(round(rng.uniform(1.0, 60.0), 1)))
        for _ in range(rad_rows)
    ]
    if rad_data:
        rad_data[0] = (rad_data[0][0], Value.decimal(10.0))
    return DataFile("radx_up", up, up_data), DataFile("radx_rad", rad, tuple(rad_data))


def employment_rules() -> tuple[HarmonizationRule, HarmonizationRule, HarmonizationRule]:
    rule1 = HarmonizationRule(
        ElementRef("radx_up", "current_employment_status"),
        ElementRef("nih_harmonized", "nih_employment"),
        (EnumToEnum(tuple(UP_TO_NIH.items())),),
    )
    rule2 = HarmonizationRule(
        ElementRef("radx_rad", "employment"),
        ElementRef("nih_harmonized", "nih_employment"),
        (EnumToEnum(tuple(RAD_TO_NIH.items())),),
    )
    rule3 = HarmonizationRule(
        ElementRef("radx_rad", "commute_distance_km"),
        ElementRef("nih_harmonized", "commute_distance_miles"),
        (ConvertUnits("km", "mile"), Round(2)),
    )
    return rule1, rule2, rule3


def employment_job(seed: int = SEED) -> HarmonizationJob:
    up_file, rad_file = employment_files(seed)
    rule1, rule2, rule3 = employment_rules()
    _, _, target = employment_dictionaries()
    return HarmonizationJob([(up_file, [rule1]), (rad_file, [rule2, rule3])], target)


def survey_job() -> HarmonizationJob:
    return HarmonizationJob([(survey_file(), [age_rule()])], survey_target_dictionary())


# --- writing to disk -------------------------------------------------------------


def write_fixtures(outdir: str | Path, seed: int = SEED) -> list[Path]:
    """Write both examples under ``outdir/survey`` and ``outdir/employment``."""
    outdir = Path(outdir)
    written = []

    def put(path: Path, text: str):
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
        written.append(path)

    for sub, job, dicts, rules in (
        ("survey", survey_job(), [survey_dictionary(), survey_target_dictionary()], [age_rule()]),
        ("employment", employment_job(seed), list(employment_dictionaries()), list(employment_rules())),
    ):
        base = outdir / sub
        for d in dicts:
            put(base / "dictionaries" / f"{d.name}.json", dictionary_to_json(d))
        for f, _ in job.inputs:
            put(base / "data" / f"{f.name}.csv", dumps_data_file(f))
        for i, r in enumerate(rules, start=1):
            put(base / "rules" / f"rule{i}_{r.source.element}.rule.json", serialize_rule(r))
        result = run_job(job)
        put(base / "expected" / "harmonized.csv", dumps_data_file(result.output))
        log_path = base / "expected" / "harmonize.log.jsonl"
        put(log_path, result.log.dumps())
        manifest = JobManifest(
            job.target,
            tuple(ManifestInput(f.name, f"{f.name}.csv", f.dictionary) for f, _ in job.inputs),
            job.policy.value,
            job.output_name,
        )
        put(manifest_path(log_path), manifest.to_json())
    return written


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    outdir = args[0] if args else "fixtures"
    for p in write_fixtures(outdir):
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
