from __future__ import annotations

import json
import threading

import pytest

from harmonize.errors import StorageFailure
from harmonize.fixtures import age_rule, employment_rules
from harmonize.primitives import Round
from harmonize.rules import ElementRef, HarmonizationRule, serialize_rule
from harmonize.store import RuleStore, rule_hash


@pytest.fixture
def store(tmp_path):
    s = RuleStore(tmp_path / "store")
    for rule in employment_rules():
        s.put(rule)
    return s


def test_content_addressed_files(store):
    rule1 = employment_rules()[0]
    path = store.rules_dir / (rule_hash(serialize_rule(rule1)) + ".rule.json")
    assert path.read_text() == serialize_rule(rule1)
    assert len(list(store.rules_dir.iterdir())) == 3


def test_get(store):
    rule3 = employment_rules()[2]
    assert store.get(rule3.source, rule3.target) == rule3
    assert store.get(ElementRef("x", "y"), rule3.target) is None


def test_query_by_target_name(store):
    rule1, rule2, _ = employment_rules()
    assert store.query(target="nih_employment") == [rule2, rule1]


def test_query_by_full_reference(store):
    rule3 = employment_rules()[2]
    assert store.query(source=ElementRef("radx_rad", "commute_distance_km")) == [rule3]
    assert store.query(source="commute_distance_km", target="nih_employment") == []


def test_query_needs_a_filter(store):
    with pytest.raises(ValueError):
        store.query()


def test_all_is_ordered(store):
    rules = store.all()
    assert [(r.source, r.target) for r in rules] == sorted((r.source, r.target) for r in rules)


def test_put_replaces_same_pair(store):
    rule3 = employment_rules()[2]
    newer = HarmonizationRule(rule3.source, rule3.target, rule3.operations[:1] + (Round(1),))
    result = store.put(newer)
    assert result.overwrote
    assert store.get(rule3.source, rule3.target) == newer
    assert len(list(store.rules_dir.iterdir())) == 3


def test_put_identical_is_a_no_op_on_disk(store):
    rule1 = employment_rules()[0]
    before = {p.name: p.read_bytes() for p in store.rules_dir.iterdir()}
    result = store.put(rule1)
    assert result.overwrote
    assert {p.name: p.read_bytes() for p in store.rules_dir.iterdir()} == before


def test_reopen(store):
    again = RuleStore(store.root)
    assert again.all() == store.all()


def test_index_rebuilt_when_lost(store):
    store.index_path.unlink()
    again = RuleStore(store.root)
    assert len(again) == 3
    again.rebuild_index()
    assert json.loads(store.index_path.read_text())["rules"]


def test_remove(store):
    rule1 = employment_rules()[0]
    assert store.remove(rule1.source, rule1.target)
    assert not store.remove(rule1.source, rule1.target)
    assert len(RuleStore(store.root)) == 2


def test_empty_store(tmp_path):
    s = RuleStore(tmp_path / "nothing")
    assert s.all() == []
    assert s.query(target="age_range") == []


def test_corrupt_rule_file(store):
    victim = next(store.rules_dir.iterdir())
    victim.write_text("{ nope")
    with pytest.raises(StorageFailure, match=victim.name):
        RuleStore(store.root).all()


def test_tampered_rule_file(store):
    victim = store.rules_dir / (rule_hash(serialize_rule(employment_rules()[0])) + ".rule.json")
    victim.write_text(serialize_rule(age_rule()))
    with pytest.raises(StorageFailure, match="hash"):
        RuleStore(store.root).all()


def test_corrupt_index(store):
    store.index_path.write_text("[]")
    with pytest.raises(StorageFailure):
        RuleStore(store.root).all()


def test_root_is_a_file(tmp_path):
    path = tmp_path / "file"
    path.write_text("x")
    with pytest.raises(StorageFailure):
        RuleStore(path).put(age_rule())


def test_concurrent_readers(store):
    expected = [r for r in store.all() if r.target.element == "nih_employment"]
    results = []

    def read():
        results.append(RuleStore(store.root).query(target="nih_employment"))

    threads = [threading.Thread(target=read) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [expected] * 8
