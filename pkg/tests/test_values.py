from __future__ import annotations

import pickle

import pytest
from hypothesis import given
from hypothesis import strategies as st

from harmonize.values import (
    BOOLEAN,
    DATE,
    DECIMAL,
    INTEGER,
    MISSING,
    NUMERIC,
    SCALAR,
    STRING,
    TEXT,
    UNKNOWN,
    CodedValueSet,
    Kind,
    Value,
    ValueType,
    compatible,
    conforms,
    format_decimal,
    round_half_away,
    truthy,
    type_of,
)

SEX = CodedValueSet.of({0: "Female", 1: "Male", 2: "Intersex", 3: "Prefer not to answer"})

scalars = st.one_of(
    st.text().map(Value.text),
    st.integers(-(2**63), 2**63 - 1).map(Value.integer),
    st.floats(allow_nan=False, allow_infinity=False).map(Value.decimal),
    st.booleans().map(Value.boolean),
    st.integers(0, 3).map(Value.enum),
)
values = st.one_of(
    scalars,
    st.lists(st.integers(-5, 5).map(Value.integer), max_size=5).map(Value.vector),
    st.just(MISSING),
)
types = st.sampled_from([STRING, INTEGER, DECIMAL, BOOLEAN, DATE, ValueType.enum(SEX),
                         ValueType.vector(INTEGER), NUMERIC, TEXT, SCALAR, UNKNOWN])


class TestTypeOf:
    def test_integer(self):
        assert type_of(Value.integer(23)) == INTEGER

    def test_vector(self):
        v = Value.vector([Value.integer(i) for i in (0, 0, 1, 0)])
        assert type_of(v) == ValueType.vector(INTEGER)

    def test_missing_is_unknown(self):
        assert type_of(MISSING) == UNKNOWN


class TestConforms:
    def test_code_in_set(self):
        assert conforms(Value.enum(2), ValueType.enum(), SEX)

    def test_code_outside_set(self):
        assert not conforms(Value.enum(7), ValueType.enum(), SEX)

    def test_variant_mismatch(self):
        assert not conforms(Value.text("23"), INTEGER)

    def test_missing_conforms_everywhere(self):
        for t in (STRING, INTEGER, ValueType.enum(SEX), ValueType.vector(BOOLEAN)):
            assert conforms(MISSING, t)

    def test_vectors_check_elements(self):
        assert conforms(Value.vector([Value.integer(1)]), ValueType.vector(INTEGER))
        assert not conforms(Value.vector([Value.boolean(True)]), ValueType.vector(INTEGER))

    def test_non_value_is_false(self):
        assert conforms("23", STRING) is False

    @given(scalars)
    def test_value_conforms_to_its_own_type(self, v):
        codes = SEX if v.kind is Kind.ENUM else None
        assert conforms(v, type_of(v), codes)

    @given(values, types)
    def test_total(self, v, t):
        assert conforms(v, t) in (True, False)


class TestValue:
    def test_missing_differs_from_empty_and_zero(self):
        assert MISSING != Value.text("")
        assert MISSING != Value.integer(0)
        assert MISSING.is_missing and not Value.text("").is_missing

    def test_integer_range(self):
        with pytest.raises(OverflowError):
            Value.integer(2**63)
        with pytest.raises(TypeError):
            Value.integer(True)

    def test_decimal_must_be_finite(self):
        with pytest.raises(ValueError):
            Value.decimal(float("nan"))

    def test_vector_rejects_nesting_and_mixing(self):
        with pytest.raises((TypeError, ValueError)):
            Value.vector([Value.vector([])])
        with pytest.raises((TypeError, ValueError)):
            Value.vector([Value.integer(1), Value.text("a")])

    def test_immutable(self):
        v = Value.integer(3)
        with pytest.raises(AttributeError):
            v.data = 4

    def test_places_do_not_affect_equality(self):
        assert Value.decimal(1.5, places=2) == Value.decimal(1.5)
        assert hash(Value.decimal(1.5, places=2)) == hash(Value.decimal(1.5))

    def test_kinds_distinguish(self):
        assert Value.enum(1) != Value.integer(1)
        assert Value.date("2025-03-14") != Value.text("2025-03-14")

    @given(values)
    def test_pickles(self, v):
        assert pickle.loads(pickle.dumps(v)) == v


class TestCodedValueSet:
    def test_lookup_both_ways(self):
        assert SEX.label(1) == "Male"
        assert SEX.code("Intersex") == 2
        assert 3 in SEX and 4 not in SEX

    def test_unique_codes_and_labels(self):
        with pytest.raises(ValueError):
            CodedValueSet(((0, "a"), (0, "b")))
        with pytest.raises(ValueError):
            CodedValueSet(((0, "a"), (1, "a")))


class TestCompatible:
    def test_integer_widens_to_decimal_only(self):
        assert compatible(INTEGER, DECIMAL)
        assert not compatible(DECIMAL, INTEGER)

    def test_abstract_kinds(self):
        assert compatible(INTEGER, NUMERIC) and compatible(DECIMAL, NUMERIC)
        assert compatible(DATE, TEXT) and not compatible(BOOLEAN, TEXT)
        assert compatible(BOOLEAN, SCALAR)

    def test_enum_subset(self):
        small = ValueType.enum([0, 1])
        assert compatible(small, ValueType.enum(SEX))
        assert not compatible(ValueType.enum([0, 9]), ValueType.enum(SEX))

    def test_enum_labels_must_agree(self):
        other = ValueType.enum(CodedValueSet.of({0: "Male"}))
        assert not compatible(other, ValueType.enum(SEX))

    def test_vectors(self):
        assert compatible(ValueType.vector(INTEGER), ValueType.vector(NUMERIC))
        assert not compatible(INTEGER, ValueType.vector(INTEGER))

    def test_unknown_never(self):
        assert not compatible(UNKNOWN, STRING)


class TestNumbers:
    @pytest.mark.parametrize(
        "x, places, expected",
        [(13.226, 2, 13.23), (2.675, 2, 2.68), (-2.5, 0, -3.0), (0.5, 0, 1.0), (1.005, 2, 1.01), (-0.004, 2, 0.0)],
    )
    def test_round_half_away(self, x, places, expected):
        assert round_half_away(x, places) == expected

    def test_negative_zero_is_normalised(self):
        assert format_decimal(round_half_away(-0.004, 2), 2) == "0.00"

    def test_format(self):
        assert format_decimal(0.1) == "0.1"
        assert format_decimal(6.2, 2) == "6.20"
        assert format_decimal(1e21) == "1e+21"

    @given(st.floats(-1e12, 1e12), st.integers(0, 8))
    def test_round_idempotent(self, x, p):
        once = round_half_away(x, p)
        assert round_half_away(once, p) == once

    def test_truthy(self):
        assert truthy(Value.integer(2)) and not truthy(Value.integer(0))
        assert truthy(Value.boolean(True)) and not truthy(Value.text(""))
