from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from annobench.errors import DuplicateCode, InvalidWeight, SchemaParseError
from annobench.schema import (
    COLUMNS,
    BLANK,
    dump_schema,
    load_schema,
    parse_data_type,
    severity_to_percent,
    validate_value,
    validate_value_for_type,
)

REFERENCE_CODES = {
    "cortex_present",
    "medulla_present",
    "n_total",
    "n_segmental",
    "n_global",
    "abnormal_glomeruli",
    "chronic_change",
    "transplant",
    "final_diagnosis",
}


def test_reference_schema_has_the_nine_entities(ref_schema):
    assert set(ref_schema.codes) == REFERENCE_CODES
    assert len(ref_schema.entities) == 9


def test_reference_schema_weights(ref_schema):
    weights = {e.code: e.priority_weight for e in ref_schema.entities}
    assert {c for c, w in weights.items() if w == 3} == {
        "n_total",
        "n_global",
        "abnormal_glomeruli",
        "transplant",
        "final_diagnosis",
    }
    assert {c for c, w in weights.items() if w == 2} == {
        "chronic_change",
        "cortex_present",
        "medulla_present",
    }
    assert {c for c, w in weights.items() if w == 1} == {"n_segmental"}
    assert sum(weights.values()) == 22
    tiers = sorted(weights.values())
    assert tiers.count(3) == 5 and tiers.count(2) == 3 and tiers.count(1) == 1


def test_reference_defaults_encode_lack_of_mention_rules(ref_schema):
    assert ref_schema.spec("cortex_present").default_on_missing is True
    assert ref_schema.spec("medulla_present").default_on_missing is False
    assert ref_schema.spec("n_segmental").default_on_missing == 0
    assert ref_schema.spec("n_global").default_on_missing == 0
    assert ref_schema.spec("final_diagnosis").default_on_missing == "[missing]"
    assert ref_schema.spec("n_total").default_on_missing == BLANK


def test_groups_partition_the_codes(ref_schema):
    member_codes = [c for g in ref_schema.groups for c in g.member_codes]
    assert sorted(member_codes) == sorted(ref_schema.codes)
    assert len(member_codes) == len(set(member_codes))


def test_schema_roundtrips_via_tsv(ref_schema, tmp_path):
    dumped = dump_schema(ref_schema)
    path = tmp_path / "schema.tsv"
    path.write_text(dumped, encoding="utf-8")
    reloaded = load_schema(path, schema_id=ref_schema.schema_id)
    assert reloaded == ref_schema
    assert dump_schema(reloaded) == dumped


def test_duplicate_code_rejected(tmp_path):
    header = "\t".join(COLUMNS)
    row = "Q?\tnumerical\tG\tn_total\tCQ\tCG\tg1\t3\t"
    path = tmp_path / "dup.tsv"
    path.write_text(f"{header}\n{row}\n{row}\n", encoding="utf-8")
    with pytest.raises(DuplicateCode):
        load_schema(path)


def test_invalid_weight_rejected(tmp_path):
    header = "\t".join(COLUMNS)
    row = "Q?\tnumerical\tG\tn_total\tCQ\tCG\tg1\t5\t"
    path = tmp_path / "w.tsv"
    path.write_text(f"{header}\n{row}\n", encoding="utf-8")
    with pytest.raises(InvalidWeight):
        load_schema(path)


def test_bad_header_row_rejected(tmp_path):
    path = tmp_path / "h.tsv"
    path.write_text("question\tnope\n", encoding="utf-8")
    with pytest.raises(SchemaParseError):
        load_schema(path)


def test_union_type_parsing():
    union = parse_data_type("numerical/string_simple")
    assert union.kind == "union"
    assert [m.kind for m in union.members] == ["numerical", "string_simple"]
    assert union.has_string_member
    assert union.spelled() == "numerical/string_simple"


def test_categorical_type_parsing():
    cat = parse_data_type("categorical{low;medium;high}")
    assert cat.labels == ("low", "medium", "high")
    assert validate_value_for_type(cat, "MEDIUM").value == "medium"
    assert validate_value_for_type(cat, "nope").type_mismatch


# --- validate_value -------------------------------------------------------


def test_binary_accepts_word_forms(ref_schema):
    spec = ref_schema.spec("cortex_present")
    for raw, expected in (("True", True), ("false", False), ("yes", True), ("no", False), (True, True)):
        typed = validate_value(spec, raw)
        assert typed.value is expected and not typed.type_mismatch


def test_numerical_is_nonnegative_integer(ref_schema):
    spec = ref_schema.spec("n_total")
    assert validate_value(spec, "15").value == 15
    assert validate_value(spec, 15).value == 15
    assert validate_value(spec, "15.0").value == 15
    fifteen = validate_value(spec, "fifteen")
    assert fifteen.type_mismatch and fifteen.value == "fifteen"
    negative = validate_value(spec, "-3")
    assert negative.type_mismatch


def test_union_tries_members_in_declared_order(ref_schema):
    spec = ref_schema.spec("chronic_change")
    assert validate_value(spec, "15").value == 15
    mild = validate_value(spec, "mild")
    assert mild.value == "mild" and not mild.type_mismatch


def test_blank_passes_through_untouched(ref_schema):
    for code in ref_schema.codes:
        typed = validate_value(ref_schema.spec(code), "")
        assert typed.value == BLANK and not typed.type_mismatch


@given(
    raw=st.one_of(
        st.booleans(),
        st.integers(min_value=0, max_value=10**6),
        st.text(alphabet="abcdefg 0123456789%", max_size=20),
    )
)
def test_validate_value_is_idempotent(ref_schema, raw):
    for code in ("cortex_present", "n_total", "chronic_change", "final_diagnosis"):
        spec = ref_schema.spec(code)
        once = validate_value(spec, raw)
        twice = validate_value(spec, once.value)
        assert twice.value == once.value
        assert type(twice.value) is type(once.value)


def test_severity_anchor_lookup():
    assert severity_to_percent("minimal") == "5-10%"
    assert severity_to_percent("Small") == "5-10%"
    assert severity_to_percent("florid") == "75-100%"
    assert severity_to_percent("complete") == "75-100%"
    assert severity_to_percent("moderate") == "moderate"
