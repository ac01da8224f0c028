import pytest

from schema_aug.overlap import (
    OverlapError,
    external_overlap,
    overlap_count,
    slot_matrix,
    suggest_holdout,
    suggestions_csv,
)
from schema_aug.schema_model import Schema, SlotDef, bundled_schema

from tables import MULTIWOZ_TABLE, SPOKENWOZ_TABLE

MWOZ = bundled_schema("multiwoz")


@pytest.mark.parametrize("name,table", [("multiwoz", MULTIWOZ_TABLE), ("spokenwoz", SPOKENWOZ_TABLE)])
def test_matrix_matches_reference_table(name, table):
    columns, rows = table
    m = slot_matrix(bundled_schema(name))
    assert m.columns == columns
    assert m.rows == tuple(rows)
    for slot, marks in rows.items():
        assert [m[slot, d] for d in columns] == marks, slot


def test_matrix_cells():
    m = slot_matrix(MWOZ)
    assert m["arriveby", "taxi"] and not m["arriveby", "hotel"]


def test_single_domain_and_empty():
    m = slot_matrix(Schema([SlotDef("a", "x"), SlotDef("a", "y")]))
    assert m.to_lists() == [[True], [True]]
    empty = slot_matrix(Schema())
    assert empty.rows == () and empty.columns == ()


def test_overlap_counts():
    assert overlap_count(MWOZ, "taxi", "train") == 4
    assert overlap_count(MWOZ, "bus", "train") == 4
    assert overlap_count(MWOZ, "taxi", "taxi") == 6
    for a in MWOZ.domains:
        for b in MWOZ.domains:
            assert overlap_count(MWOZ, a, b) == overlap_count(MWOZ, b, a)
    with pytest.raises(OverlapError):
        overlap_count(MWOZ, "taxi", "spaceship")


def _brute_external(schema, subset):
    shared = set()
    for s in schema:
        if s.domain not in subset:
            continue
        for t in schema:
            if t.domain not in subset and t.base_name == s.base_name:
                shared.add(s.base_name)
    return len(shared)


def test_suggest_k3_against_enumeration():
    ranked = suggest_holdout(MWOZ, 3)
    assert len(ranked) == 56
    assert [score for _, score in ranked] == sorted(score for _, score in ranked)
    for combo, score in ranked:
        assert score == _brute_external(MWOZ, set(combo))
    best = min(score for _, score in ranked)
    assert dict(ranked)[("bus", "taxi", "train")] == best


def test_suggest_edge_cases():
    n = len(MWOZ.domains)
    assert suggest_holdout(MWOZ, n) == [(tuple(sorted(MWOZ.domains)), 0)]
    schema = Schema([SlotDef("a", "x"), SlotDef("b", "y"), SlotDef("b", "x")])
    assert ("b",) in [c for c, _ in suggest_holdout(schema, 1)]
    solo = Schema([SlotDef("a", "x"), SlotDef("b", "y")])
    assert all(score == 0 for _, score in suggest_holdout(solo, 1))
    for k in (0, n + 1):
        with pytest.raises(OverlapError):
            suggest_holdout(MWOZ, k)


def test_ties_broken_by_names():
    schema = Schema([SlotDef(d, "x") for d in "cab"])
    assert [c for c, _ in suggest_holdout(schema, 1)] == [("a",), ("b",), ("c",)]


def test_text_and_csv_output():
    m = slot_matrix(MWOZ)
    assert m.to_text().splitlines()[0].split("|")[1].strip() == "attraction"
    assert m.to_csv().splitlines()[0] == "slot,attraction,bus,hospital,hotel,police,restaurant,taxi,train"
    assert suggestions_csv(suggest_holdout(MWOZ, 3)).splitlines()[1] == '1,"bus,taxi,train",4'
