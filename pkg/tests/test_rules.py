from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from harmonize.errors import CastError, InvalidParams, ParseError, UnknownPrimitive
from harmonize.fixtures import age_rule, employment_dictionaries, employment_rules, survey_dictionary, survey_target_dictionary
from harmonize.primitives import Bin, Cast, ConvertUnits, Round, Truncate
from harmonize.rules import (
    ElementRef,
    HarmonizationRule,
    compose_apply,
    deserialize_rule,
    deserialize_rules,
    serialize_rule,
    serialize_rules,
    validate_rule,
)
from harmonize.values import DECIMAL, Value

from jobgen import random_rule

SURVEY = [survey_dictionary(), survey_target_dictionary()]

AGE_RULE_JSON = """{
  "Source": {
    "dictionary": "health_survey",
    "element": "age_text"
  },
  "Target": {
    "dictionary": "health_survey_harmonized",
    "element": "age_range"
  },
  "Operations": [
    {
      "primitive": "Cast",
      "params": {
        "source": "string",
        "target": "integer"
      }
    },
    {
      "primitive": "Bin",
      "params": {
        "bins": [
          {
            "lower": "MIN",
            "upper": 30,
            "label": "30 or Under"
          },
          {
            "lower": 31,
            "upper": 40,
            "label": "31-40"
          },
          {
            "lower": 41,
            "upper": 50,
            "label": "41-50"
          },
          {
            "lower": 51,
            "upper": 60,
            "label": "51-60"
          },
          {
            "lower": 61,
            "upper": 70,
            "label": "61-70"
          },
          {
            "lower": 71,
            "upper": "MAX",
            "label": "Over 70"
          }
        ]
      }
    }
  ]
}
"""


class TestElementRef:
    def test_parse(self):
        assert ElementRef.parse("radx_rad:employment") == ElementRef("radx_rad", "employment")

    def test_parse_requires_colon(self):
        with pytest.raises(ValueError):
            ElementRef.parse("employment")

    def test_ordering(self):
        assert ElementRef("a", "z") < ElementRef("b", "a")


class TestConstruction:
    def test_needs_operations(self):
        with pytest.raises(InvalidParams):
            HarmonizationRule(ElementRef("a", "x"), ElementRef("b", "y"), ())

    def test_operations_must_be_primitives(self):
        with pytest.raises(TypeError):
            HarmonizationRule(ElementRef("a", "x"), ElementRef("b", "y"), ("Round",))


class TestCompose:
    def test_age(self):
        rule = age_rule()
        assert compose_apply(rule, Value.text("47")) == Value.enum(2)

    def test_error_names_the_operation(self):
        with pytest.raises(CastError) as info:
            compose_apply(age_rule(), Value.text("forty"))
        assert info.value.op_index == 1 and info.value.primitive == "Cast"
        assert str(info.value).startswith("operation 1 (Cast): ")

    def test_widens_for_decimal_target(self):
        rule = HarmonizationRule(ElementRef("a", "x"), ElementRef("b", "y"), (Cast("string", "integer"),))
        assert compose_apply(rule, Value.text("4"), DECIMAL) == Value.decimal(4.0)


class TestValidate:
    def test_age_rule_is_valid(self):
        assert validate_rule(age_rule(), SURVEY) == []

    def test_employment_rules_are_valid(self):
        dicts = employment_dictionaries()
        for rule in employment_rules():
            assert validate_rule(rule, dicts) == []

    def test_reversed_chain_breaks(self):
        rule = age_rule()
        reversed_rule = HarmonizationRule(rule.source, rule.target, rule.operations[::-1])
        problems = validate_rule(reversed_rule, SURVEY)
        assert problems[0].op_index == 1
        assert problems[0].kind == "type-chain"
        assert problems[0].message == "Bin input expects numeric, source provides string"

    def test_unresolved_elements(self):
        rule = HarmonizationRule(ElementRef("health_survey", "age"), ElementRef("nowhere", "x"), (Truncate(2),))
        kinds = {p.kind for p in validate_rule(rule, SURVEY)}
        assert kinds == {"unresolved-source", "unresolved-target"}

    def test_output_must_fit_target(self):
        rule = HarmonizationRule(
            ElementRef("health_survey", "age_text"),
            ElementRef("health_survey_harmonized", "age_range"),
            (Cast("string", "integer"),),
        )
        [problem] = validate_rule(rule, SURVEY)
        assert problem.kind == "target-type"

    def test_bin_labels_must_match_target_codes(self):
        bins = list(age_rule().operations[1].bins)
        bins[0] = type(bins[0])(bins[0].lower, bins[0].upper, "Young")
        rule = HarmonizationRule(age_rule().source, age_rule().target, (Cast("string", "integer"), Bin(tuple(bins))))
        assert [p.kind for p in validate_rule(rule, SURVEY)] == ["target-type"]

    def test_accepts_dictionary_mapping(self):
        assert validate_rule(age_rule(), {d.name: d for d in SURVEY}) == []


class TestSerialization:
    def test_age_rule_text(self):
        assert serialize_rule(age_rule()) == AGE_RULE_JSON

    def test_age_rule_parse(self):
        assert deserialize_rule(AGE_RULE_JSON) == age_rule()

    def test_key_order_is_fixed(self):
        doc = json.loads(serialize_rule(employment_rules()[2]))
        assert list(doc) == ["Source", "Target", "Operations"]
        assert doc["Operations"][0] == {"primitive": "ConvertUnits", "params": {"source": "km", "target": "mile"}}

    def test_bytes_input(self):
        assert deserialize_rule(AGE_RULE_JSON.encode()) == age_rule()

    @pytest.mark.parametrize(
        "text, error",
        [
            ("{", ParseError),
            ("[]", ParseError),
            ('{"Source": {}, "Target": {}}', ParseError),
            (AGE_RULE_JSON.replace('"Cast"', '"Smash"'), UnknownPrimitive),
            (AGE_RULE_JSON.replace('"upper": 30', '"upper": NaN'), ParseError),
            (AGE_RULE_JSON.replace('"upper": 30', '"upper": 31'), InvalidParams),
            (AGE_RULE_JSON.replace('"Operations": [', '"Operations": [], "x": ['), ParseError),
        ],
    )
    def test_malformed(self, text, error):
        with pytest.raises(error):
            deserialize_rule(text)

    def test_batch(self):
        rules = list(employment_rules())
        text = serialize_rules(rules)
        assert deserialize_rules(text) == rules
        assert deserialize_rules(serialize_rule(rules[0])) == rules[:1]

    def test_unicode_is_kept_readable(self):
        rule = HarmonizationRule(ElementRef("d", "größe"), ElementRef("t", "taille"), (Round(1),))
        assert "größe" in serialize_rule(rule)
        assert deserialize_rule(serialize_rule(rule)) == rule

    def test_float_params_survive(self):
        rule = HarmonizationRule(ElementRef("d", "x"), ElementRef("t", "y"), (ConvertUnits("m", "km"), Round(3)))
        assert deserialize_rule(serialize_rule(rule)) == rule

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32))
    def test_random_rules_round_trip(self, seed):
        rule = random_rule(random.Random(seed))
        text = serialize_rule(rule)
        again = deserialize_rule(text)
        assert again == rule
        assert serialize_rule(again) == text
