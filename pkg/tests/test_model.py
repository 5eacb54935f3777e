from __future__ import annotations

import pytest

from harmonize.errors import NotFound
from harmonize.fixtures import SEX_CODES, survey_dictionary, survey_file
from harmonize.model import (
    DataDictionary,
    DataElement,
    DataFile,
    Variable,
    catalog,
    dictionary_from_dict,
    dictionary_to_dict,
    element_by_name,
    make_element,
    parse_type_name,
    type_name,
    validate_file,
)
from harmonize.values import INTEGER, NUMERIC, STRING, CodedValueSet, Value, ValueType


def test_element_keeps_enum_type_and_codes_in_step():
    el = make_element("sex", "enum", codes=SEX_CODES)
    assert el.response_type.codes == frozenset(SEX_CODES)
    assert el.label(3) == "Prefer not to answer"


def test_enum_needs_codes():
    with pytest.raises(ValueError):
        DataElement("sex", Variable("sex"), "", ValueType.enum(), None)
    with pytest.raises(ValueError):
        DataElement("age", Variable("age"), "", INTEGER, CodedValueSet.of({0: "x"}))


def test_abstract_types_are_not_storable():
    with pytest.raises(ValueError):
        make_element("n", NUMERIC)


def test_two_elements_can_share_a_variable():
    a = make_element("age_text", "string", variable="age")
    b = make_element("age_range", "enum", variable="age", codes={0: "young"})
    assert a.variable == b.variable


def test_dictionary_lookup():
    d = survey_dictionary()
    assert d.names == ["record_id", "age_text", "sex", "cov19_vaccination_status"]
    assert "sex" in d and "age" not in d
    assert element_by_name(d, "age_text").response_type == STRING
    with pytest.raises(NotFound):
        d.index("age")


def test_duplicate_element_names():
    el = make_element("x", "integer")
    with pytest.raises(ValueError):
        DataDictionary("d", (el, el))


def test_survey_file_conforms():
    f = survey_file()
    assert len(f) == 10
    assert validate_file(f) == []
    assert [v.data for v in f.column("age_text")][:3] == ["23", "47", "31"]


def test_violations_are_one_based_and_ordered():
    d = survey_dictionary()
    rows = [
        (Value.integer(1), Value.text("23"), Value.enum(9), Value.enum(0)),
        (Value.text("2"), Value.text("47"), Value.enum(1), Value.enum(0)),
    ]
    problems = validate_file(DataFile("bad", d, rows))
    assert [(p.row, p.element) for p in problems] == [(1, "sex"), (2, "record_id")]
    assert "coded value set" in problems[0].reason


def test_short_row():
    d = survey_dictionary()
    [problem] = validate_file(DataFile("bad", d, [(Value.integer(1),)]))
    assert problem.element == "*"


@pytest.mark.parametrize("name", ["string", "integer", "decimal", "boolean", "date", "enum", "vector<integer>", "vector<enum>"])
def test_type_names_round_trip(name):
    assert type_name(parse_type_name(name)) == name


@pytest.mark.parametrize("name", ["int", "vector<vector<integer>>", "vector<>"])
def test_unknown_type_names(name):
    with pytest.raises(ValueError):
        parse_type_name(name)


def test_dictionary_document_round_trip():
    d = survey_dictionary()
    doc = dictionary_to_dict(d)
    assert doc["elements"][2]["codes"][0] == {"code": 0, "label": "Female"}
    assert dictionary_from_dict(doc) == d


def test_catalog_rejects_conflicting_names():
    d = survey_dictionary()
    other = DataDictionary(d.name, d.elements[:1])
    assert catalog([d, d]) == {d.name: d}
    with pytest.raises(ValueError):
        catalog([d, other])
