from __future__ import annotations

import csv
import io as stdio
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmonize.errors import CellParseError, HeaderMismatch, ParseError, SchemaError, StorageFailure
from harmonize.fixtures import survey_dictionary, survey_file, survey_target_dictionary
from harmonize.io import (
    CanonicalWriterConfig,
    JobManifest,
    ManifestInput,
    data_file_bytes,
    dataset_name,
    dictionary_from_json,
    dictionary_to_json,
    dumps_data_file,
    join_record,
    manifest_path,
    parse_cell,
    parse_data_file,
    read_data_file,
    read_dictionary,
    render_cell,
    split_records,
    write_data_file,
    write_dictionary,
)
from harmonize.model import DataDictionary, DataFile, make_element
from harmonize.values import (
    BOOLEAN,
    DATE,
    DECIMAL,
    INTEGER,
    MISSING,
    STRING,
    Value,
    ValueType,
)

fields = st.one_of(st.none(), st.text(alphabet=st.characters(blacklist_categories=("Cs",))))

typed_values = st.one_of(
    st.tuples(st.just(STRING), st.text().map(Value.text)),
    st.tuples(st.just(INTEGER), st.integers(-(2**63), 2**63 - 1).map(Value.integer)),
    st.tuples(st.just(DECIMAL), st.floats(allow_nan=False, allow_infinity=False).map(Value.decimal)),
    st.tuples(st.just(BOOLEAN), st.booleans().map(Value.boolean)),
    st.tuples(st.just(DATE), st.text().map(Value.date)),
    st.tuples(st.just(ValueType.enum()), st.integers(0, 99).map(Value.enum)),
    st.tuples(
        st.just(ValueType.vector(DECIMAL)),
        st.lists(st.floats(allow_nan=False, allow_infinity=False).map(Value.decimal), max_size=4).map(Value.vector),
    ),
    st.tuples(
        st.just(ValueType.vector(STRING)),
        st.lists(st.text().map(Value.text), max_size=4).map(Value.vector),
    ),
)


class TestCells:
    @given(typed_values)
    def test_render_parse_identity(self, tv):
        t, v = tv
        assert parse_cell(render_cell(v), t) == v

    def test_missing_is_none(self):
        assert render_cell(MISSING) is None
        assert parse_cell(None, STRING) is MISSING

    def test_rounded_decimal_keeps_places(self):
        assert render_cell(Value.decimal(6.2, places=2)) == "6.20"
        assert render_cell(Value.decimal(0.1 + 0.2)) == "0.30000000000000004"

    def test_enum_labels(self):
        el = survey_dictionary().elements[2]
        assert render_cell(Value.enum(1), el) == "1"
        assert render_cell(Value.enum(1), el, labels=True) == "Male"

    def test_vector_form(self):
        v = Value.vector([Value.integer(i) for i in (0, 0, 1, 0)])
        assert render_cell(v) == "[0,0,1,0]"

    @pytest.mark.parametrize(
        "text, t",
        [("x", INTEGER), ("1.5.2", DECIMAL), ("yes", BOOLEAN), ("[1,", ValueType.vector(INTEGER)),
         ("[true]", ValueType.vector(INTEGER)), ("[NaN]", ValueType.vector(DECIMAL)), ("{}", ValueType.vector(INTEGER))],
    )
    def test_malformed(self, text, t):
        with pytest.raises(ValueError):
            parse_cell(text, t)


class TestRecords:
    @given(st.lists(st.lists(fields, min_size=1, max_size=5), min_size=1, max_size=5))
    def test_join_split_identity(self, records):
        # a lone missing field is written as an empty line; keep records unambiguous
        records = [r for r in records if r != [None]] or [["x"]]
        text = "".join(join_record(r) for r in records)
        assert split_records(text) == records

    @settings(max_examples=50)
    @given(st.lists(st.lists(st.text(alphabet="ab,\"\n ", min_size=1), min_size=2, max_size=4), min_size=1, max_size=4))
    def test_agrees_with_stdlib_reader(self, records):
        text = "".join(join_record(r) for r in records)
        assert split_records(text) == list(csv.reader(stdio.StringIO(text, newline="")))

    def test_empty_vs_missing(self):
        assert split_records('a,,""\n') == [["a", None, ""]]
        assert join_record(["a", None, ""]) == 'a,,""\n'

    def test_crlf_and_bom(self):
        assert split_records('\ufeffa,b\r\n1,2\r\n') == [["a", "b"], ["1", "2"]]

    def test_no_trailing_newline(self):
        assert split_records("a\n1") == [["a"], ["1"]]

    @pytest.mark.parametrize("text", ['"abc', 'a"b\n', '"a"b\n'])
    def test_bad_quoting(self, text):
        with pytest.raises(ParseError):
            split_records(text)


class TestDataFiles:
    def test_round_trip(self):
        f = survey_file()
        text = dumps_data_file(f)
        assert text.splitlines()[:2] == ["record_id,age_text,sex,cov19_vaccination_status", "1,23,1,0"]
        assert parse_data_file(text, f.dictionary, f.name) == f

    def test_columns_in_any_order(self):
        d = survey_dictionary()
        text = "sex,cov19_vaccination_status,age_text,record_id\n1,0,23,1\n"
        f = parse_data_file(text, d, "x")
        assert f.rows[0] == (Value.integer(1), Value.text("23"), Value.enum(1), Value.enum(0))

    def test_header_mismatch(self):
        with pytest.raises(HeaderMismatch) as info:
            parse_data_file("record_id,age,sex,sex\n", survey_dictionary(), "x")
        e = info.value
        assert e.missing == ["age_text", "cov19_vaccination_status"]
        assert e.unknown == ["age"] and e.duplicated == ["sex"]

    def test_cell_error_position(self):
        text = "record_id,age_text,sex,cov19_vaccination_status\n1,23,1,0\n2,47,male,0\n"
        with pytest.raises(CellParseError) as info:
            parse_data_file(text, survey_dictionary(), "x")
        assert (info.value.row, info.value.column) == (2, "sex")

    def test_ragged_record(self):
        with pytest.raises(CellParseError):
            parse_data_file("record_id,age_text,sex,cov19_vaccination_status\n1,23\n", survey_dictionary(), "x")

    def test_empty_text(self):
        with pytest.raises(HeaderMismatch):
            parse_data_file("", survey_dictionary(), "x")

    def test_label_output(self):
        f = survey_file()
        text = dumps_data_file(f, CanonicalWriterConfig(labels=True))
        assert text.splitlines()[1] == "1,23,Male,Yes"

    def test_zero_columns(self):
        d = DataDictionary("empty", ())
        f = DataFile("e", d, ((), ()))
        assert parse_data_file(dumps_data_file(f), d, "e") == f

    def test_files_on_disk(self, tmp_path):
        f = survey_file()
        path = tmp_path / "health_survey.csv"
        write_data_file(f, path)
        assert read_data_file(path, f.dictionary) == f
        assert path.read_bytes() == data_file_bytes(f)
        assert [p.name for p in tmp_path.iterdir()] == ["health_survey.csv"]

    def test_unreadable(self, tmp_path):
        with pytest.raises(StorageFailure):
            read_data_file(tmp_path / "nope.csv", survey_dictionary())

    def test_not_utf8(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_bytes(b"record_id\n\xff\n")
        with pytest.raises(ParseError):
            read_data_file(path, survey_dictionary())

    def test_decimal_element(self):
        d = DataDictionary("d", (make_element("x", "decimal"),))
        f = DataFile("d", d, ((Value.decimal(1e-7),), (MISSING,)))
        assert dumps_data_file(f) == "x\n1e-07\n\n"
        assert parse_data_file(dumps_data_file(f), d, "d") == f

    def test_dataset_name(self):
        assert dataset_name("data/radx_up.csv") == "radx_up"
        assert dataset_name("plain") == "plain"


class TestDictionaries:
    def test_round_trip(self, tmp_path):
        d = survey_target_dictionary()
        path = tmp_path / "d.json"
        write_dictionary(d, path)
        assert read_dictionary(path) == d
        assert dictionary_from_json(dictionary_to_json(d)) == d

    @pytest.mark.parametrize(
        "mutate, where",
        [
            (lambda doc: doc["elements"][0].update(type="int"), "$.elements[0].type"),
            (lambda doc: doc["elements"][1].pop("prompt"), "$.elements[1]"),
            (lambda doc: doc["elements"][2].pop("codes"), "$.elements[2]"),
            (lambda doc: doc["elements"][0].update(codes=[]), "$.elements[0]"),
            (lambda doc: doc["elements"][2]["codes"].append({"code": 0, "label": "Zero"}), "$.elements[2].codes"),
            (lambda doc: doc["elements"].append(dict(doc["elements"][0])), "$.elements[4].name"),
            (lambda doc: doc.update(extra=1), "$"),
        ],
    )
    def test_schema_errors_name_the_location(self, mutate, where):
        doc = json.loads(dictionary_to_json(survey_dictionary()))
        mutate(doc)
        with pytest.raises(SchemaError) as info:
            dictionary_from_json(json.dumps(doc))
        assert str(info.value).startswith(where)

    def test_malformed_json(self):
        with pytest.raises(ParseError):
            dictionary_from_json("{")

    def test_error_names_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{}")
        with pytest.raises(SchemaError, match="bad.json"):
            read_dictionary(path)


class TestManifest:
    def test_round_trip(self):
        m = JobManifest(
            survey_target_dictionary(),
            (ManifestInput("health_survey", "health_survey.csv", survey_dictionary()),),
            "collect",
            "out",
        )
        assert JobManifest.from_json(m.to_json()) == m

    def test_path(self):
        assert manifest_path("run/harmonize.log.jsonl").name == "harmonize.log.job.json"

    def test_malformed(self):
        with pytest.raises(ParseError):
            JobManifest.from_json('{"inputs": []}')
