from __future__ import annotations

import itertools
import random

import pytest

from helpers import random_instance, result_fingerprint, row_fingerprint
from lakefuse.align import IntegrationMapping, assign_integration_ids
from lakefuse.errors import InputError, OperationError
from lakefuse.integrate import (
    IntegratedTable,
    OperatorRegistry,
    WideTuple,
    complement_merge,
    fd_oracle,
    full_disjunction,
    integrate_with,
    load_integrated,
    outer_join_integrate,
    outer_union,
    register_integration_operator,
    save_integrated,
    subsumption_filter,
)
from lakefuse.tables import Cell, NullKind, Table


def _table(table_id, cols, rows):
    def cell(v):
        if v is None:
            return Cell.missing()
        return Cell.of(v)

    return Table(table_id, tuple(cols), tuple(tuple(cell(v) for v in r) for r in rows))


def _mapping(pairs, ids):
    return IntegrationMapping(dict(pairs), tuple(ids))


def wt(values, origins, kinds=None):
    cells = []
    for i, v in enumerate(values):
        if v is not None:
            cells.append(Cell.of(v))
        elif kinds and kinds[i] == "missing":
            cells.append(Cell.missing())
        else:
            cells.append(Cell.produced())
    return WideTuple(tuple(cells), frozenset(origins))


def two_disjoint_tables():
    t1 = _table("t1", ["a"], [["1"], ["2"]])
    t2 = _table("t2", ["b"], [["x"], ["y"], ["z"]])
    mapping = _mapping({("t1", "a"): "I0", ("t2", "b"): "I1"}, ["I0", "I1"])
    return [t1, t2], mapping


def test_outer_union_single_table_identity():
    t = _table("t", ["a", "b"], [["1", None], ["2", "3"]])
    mapping = _mapping({("t", "a"): "I0", ("t", "b"): "I1"}, ["I0", "I1"])
    rows = outer_union([t], mapping)
    assert len(rows) == 2
    assert all(c.kind is not NullKind.PRODUCED for row in rows for c in row.cells)
    assert rows[0].cells[0].value == "1" and rows[0].cells[1].kind is NullKind.MISSING


def test_outer_union_disjoint_schemas():
    tables, mapping = two_disjoint_tables()
    rows = outer_union(tables, mapping)
    assert len(rows) == 5
    for row in rows:
        produced = [c for c in row.cells if c.kind is NullKind.PRODUCED]
        assert len(produced) == 1


def test_outer_union_counts_fixture(example1_set):
    mapping, _ = assign_integration_ids(example1_set)
    rows = outer_union(example1_set, mapping)
    assert len(rows) == sum(len(t.rows) for t in example1_set)


def test_outer_union_requires_total_mapping():
    t = _table("t", ["a"], [["1"]])
    with pytest.raises(InputError):
        outer_union([t], _mapping({}, []))


def test_complement_merge_idempotent():
    t = wt(["1", "2"], [("t", 0)])
    assert complement_merge(t, t) == t


def test_complement_merge_fills_null():
    a = wt(["1", None], [("t", 0)])
    b = wt(["1", "2"], [("u", 0)])
    merged = complement_merge(a, b)
    assert merged is not None
    assert [c.value for c in merged.cells] == ["1", "2"]
    assert merged.origins == frozenset({("t", 0), ("u", 0)})


def test_complement_merge_conflict_is_none():
    a = wt(["1", "2"], [("t", 0)])
    b = wt(["1", "3"], [("u", 0)])
    assert complement_merge(a, b) is None


def test_complement_merge_requires_shared_value():
    a = wt(["1", None], [("t", 0)])
    b = wt([None, "2"], [("u", 0)], kinds=[None, None])
    assert complement_merge(a, b) is None


def test_complement_merge_rejects_conflicting_origins():
    a = wt(["1", None], [("t", 0)])
    b = wt(["1", "2"], [("t", 1)])
    assert complement_merge(a, b) is None


def test_merge_null_kind_missing_wins():
    a = wt(["1", None], [("t", 0)], kinds=[None, "missing"])
    b = wt(["1", None], [("u", 0)], kinds=[None, "produced"])
    merged = complement_merge(a, b)
    assert merged.cells[1].kind is NullKind.MISSING


def test_subsumption_drops_dominated():
    rows = [wt(["1", None], [("t", 0)]), wt(["1", "2"], [("u", 0)])]
    kept = subsumption_filter(rows)
    assert [row_fingerprint(r) for r in kept] == [row_fingerprint(rows[1])]


def test_subsumption_keeps_incomparable():
    rows = [wt(["1", "2"], [("t", 0)]), wt(["3", None], [("u", 0)])]
    kept = subsumption_filter(rows)
    assert len(kept) == 2


def test_subsumption_collapses_duplicates():
    rows = [wt(["1", "2"], [("t", 0)]), wt(["1", "2"], [("t", 1)])]
    kept = subsumption_filter(rows)
    assert len(kept) == 1
    assert kept[0].origins == frozenset({("t", 0), ("t", 1)})


def test_fd_single_table_is_itself():
    t = _table("t", ["a", "b"], [["1", "4"], ["1", "5"], ["2", "7"], ["2", "7"]])
    mapping = _mapping({("t", "a"): "I0", ("t", "b"): "I1"}, ["I0", "I1"])
    result = full_disjunction([t], mapping)
    got = {tuple(c.value for c in row.cells) for row in result.rows}
    assert got == {("1", "4"), ("1", "5"), ("2", "7")}


def test_fd_never_merges_rows_of_one_table():
    # ("1", _, "2") and ("1", "5", _) are join-consistent but come from the
    # same table, so the combined ("1", "5", "2") must never appear
    t = _table("t", ["a", "b", "c"], [["1", None, "2"], ["1", "5", None]])
    mapping = _mapping(
        {("t", "a"): "I0", ("t", "b"): "I1", ("t", "c"): "I2"}, ["I0", "I1", "I2"]
    )
    result = full_disjunction([t], mapping)
    got = {tuple(c.value for c in row.cells) for row in result.rows}
    assert got == {("1", None, "2"), ("1", "5", None)}


def test_fd_two_disjoint_tables():
    tables, mapping = two_disjoint_tables()
    result = full_disjunction(tables, mapping)
    assert len(result.rows) == 5


def test_fd_equals_outer_join_for_two_clean_tables():
    rng = random.Random(11)
    for _ in range(40):
        tables, mapping = random_instance(rng, n_tables=2, null_rate_range=(0.0, 0.0))
        fd = full_disjunction(tables, mapping)
        oj = outer_join_integrate(tables, mapping)
        filtered = subsumption_filter(oj.rows)
        assert result_fingerprint(fd) == frozenset(row_fingerprint(r) for r in filtered)


def test_fd_oracle_matches_on_random_instances():
    rng = random.Random(21)
    for _ in range(60):
        tables, mapping = random_instance(rng)
        fd = full_disjunction(tables, mapping)
        oracle = fd_oracle(tables, mapping)
        assert result_fingerprint(fd) == result_fingerprint(oracle)


def test_fd_order_invariance_smoke():
    rng = random.Random(31)
    tables, mapping = random_instance(rng, n_tables=3)
    outputs = {
        result_fingerprint(full_disjunction(list(perm), mapping))
        for perm in itertools.permutations(tables)
    }
    assert len(outputs) == 1


def test_fd_row_limit_guard():
    tables, mapping = two_disjoint_tables()
    with pytest.raises(OperationError) as err:
        full_disjunction(tables, mapping, row_limit=3)
    assert err.value.code == "row_limit_exceeded"


def test_fd_oracle_size_guard():
    t = _table("t", ["a"], [[str(i)] for i in range(7)])
    mapping = _mapping({("t", "a"): "I0"}, ["I0"])
    with pytest.raises(InputError):
        fd_oracle([t], mapping)


def _example4_mapping(example4_set):
    mapping, warnings = assign_integration_ids(example4_set, tau=0.5)
    assert warnings == []
    return mapping


def _values_by_id(result: IntegratedTable, row) -> dict[str, str | None]:
    return {iid: (c.value if not c.is_null else None) for iid, c in zip(result.columns, row.cells)}


def _jj_agency_rows(result: IntegratedTable, vaccine_id: str, agency_id: str):
    rows = []
    for row in result.rows:
        values = _values_by_id(result, row)
        vaccine = (values[vaccine_id] or "").lower()
        if (vaccine == "j&j" or "johnson" in vaccine) and values[agency_id] is not None:
            rows.append(values)
    return rows


def test_example4_fd_connects_transitively(example4_set):
    mapping = _example4_mapping(example4_set)
    t4, t5, t6 = [t.table_id for t in example4_set]
    vaccine_id = mapping.id_for(t4, "Vaccine")
    agency_id = mapping.id_for(t5, "Agency")

    fd = full_disjunction(example4_set, mapping)
    fd_jj = _jj_agency_rows(fd, vaccine_id, agency_id)
    assert any(v[vaccine_id] == "Johnson & Johnson" for v in fd_jj)

    oj = outer_join_integrate(example4_set, mapping, order=[t6, t4, t5])
    assert _jj_agency_rows(oj, vaccine_id, agency_id) == []


def test_example4_outer_join_not_associative(example4_set):
    mapping = _example4_mapping(example4_set)
    t4, t5, t6 = [t.table_id for t in example4_set]
    a = outer_join_integrate(example4_set, mapping, order=[t4, t5, t6])
    b = outer_join_integrate(example4_set, mapping, order=[t6, t4, t5])
    multiset_a = sorted(row_fingerprint(r) for r in a.rows)
    multiset_b = sorted(row_fingerprint(r) for r in b.rows)
    assert multiset_a != multiset_b


def test_outer_join_single_table_identity():
    t = _table("t", ["a", "b"], [["1", "2"], ["3", None]])
    mapping = _mapping({("t", "a"): "I0", ("t", "b"): "I1"}, ["I0", "I1"])
    result = outer_join_integrate([t], mapping)
    assert len(result.rows) == 2


def test_outer_join_null_never_matches():
    t1 = _table("t1", ["k", "v"], [["1", "x"], [None, "y"]])
    t2 = _table("t2", ["k", "w"], [["1", "p"], [None, "q"]])
    mapping = _mapping(
        {("t1", "k"): "I0", ("t1", "v"): "I1", ("t2", "k"): "I0", ("t2", "w"): "I2"},
        ["I0", "I1", "I2"],
    )
    result = outer_join_integrate([t1, t2], mapping)
    fingerprints = {tuple(c.value for c in row.cells) for row in result.rows}
    # the two null-keyed rows stay unmatched
    assert ("1", "x", "p") in fingerprints
    assert (None, "y", None) in fingerprints
    assert (None, None, "q") in fingerprints
    assert len(result.rows) == 3


def test_operator_registry():
    registry = OperatorRegistry()
    register_integration_operator("fd", lambda t, m: full_disjunction(t, m), registry)
    with pytest.raises(InputError):
        register_integration_operator("fd", lambda t, m: full_disjunction(t, m), registry)
    with pytest.raises(InputError):
        registry.get("nope")


def test_registered_outer_join_equals_direct(example4_set):
    mapping = _example4_mapping(example4_set)
    via_registry = integrate_with("outer-join", example4_set, mapping)
    direct = outer_join_integrate(example4_set, mapping)
    assert result_fingerprint(via_registry) == result_fingerprint(direct)
    assert sorted(row_fingerprint(r) for r in via_registry.rows) == sorted(
        row_fingerprint(r) for r in direct.rows
    )


def test_save_load_integrated_round_trip(tmp_path, example1_set):
    mapping, _ = assign_integration_ids(example1_set)
    fd = full_disjunction(example1_set, mapping)
    csv_path = tmp_path / "out.csv"
    save_integrated(fd, csv_path)
    loaded = load_integrated(csv_path)
    assert loaded.columns == fd.columns
    assert [row_fingerprint(r) for r in loaded.rows] == [row_fingerprint(r) for r in fd.rows]
    assert [r.origins for r in loaded.rows] == [r.origins for r in fd.rows]


def test_fd_deterministic_row_order(example1_set):
    mapping, _ = assign_integration_ids(example1_set)
    a = full_disjunction(example1_set, mapping)
    b = full_disjunction(list(reversed(example1_set)), mapping)
    assert [row_fingerprint(r) for r in a.rows] == [row_fingerprint(r) for r in b.rows]


def test_fd_example1_merges_boston(example1_set):
    mapping, _ = assign_integration_ids(example1_set)
    t1 = example1_set[0].table_id
    city_id = mapping.id_for(t1, "City")
    cases_id = mapping.id_for(example1_set[2].table_id, "Cases")
    rate_id = mapping.id_for(t1, "VaccinationRate")
    fd = full_disjunction(example1_set, mapping)
    rows = {row.cells[fd.columns.index(city_id)].value: row for row in fd.rows}
    boston = rows["Boston"]
    assert boston.cells[fd.columns.index(cases_id)].value == "12000"
    assert boston.cells[fd.columns.index(rate_id)].value == "51.0"
    toronto = rows["Toronto"]
    assert toronto.cells[fd.columns.index(cases_id)].value == "8000"
