"""Integration operators over an aligned set: full disjunction and outer join.

Full disjunction is computed as a fixpoint: start from the outer union of all
input rows, repeatedly merge pairs of join-consistent tuples that share at
least one agreeing non-null integration ID, then drop subsumed tuples. A merge
is only allowed when the two tuples do not draw on two different rows of the
same source table; the origin sets carried by every tuple enforce that, which
is what keeps a single table integrating to itself and makes the result
independent of merge order.

Null semantics: nulls (either kind) never match anything. When both sides of a
merge are null at an ID, a missing null wins over a produced one, since it
asserts the attribute is applicable.

The outer-join baseline is a left fold of full outer joins. Its match
predicate is the strict one: every integration ID shared by the accumulated
schema and the next table must be non-null on both sides and equal. That makes
it order-sensitive, which is the point of keeping it around for comparison.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .align import IntegrationMapping
from .errors import InputError, OperationError
from .jsonio import read_json, write_json, write_text
from .tables import Cell, NullKind, Table, load_table, normalize_value

DEFAULT_ROW_LIMIT = 100_000

ORACLE_MAX_TABLES = 4
ORACLE_MAX_ROWS = 6


@dataclass(frozen=True)
class WideTuple:
    """A tuple over the full integration-ID schema plus its provenance."""

    cells: tuple[Cell, ...]
    origins: frozenset[tuple[str, int]]  # (table_id, row index)

    def non_null_count(self) -> int:
        return sum(1 for c in self.cells if not c.is_null)


def _norm(cell: Cell) -> str | None:
    return None if cell.is_null else normalize_value(cell.value)


def _key(row: WideTuple) -> tuple:
    cells = tuple((c.kind.value, None if c.is_null else c.value) for c in row.cells)
    return (cells, row.origins)


def _value_key(row: WideTuple) -> tuple:
    return tuple(None if c.is_null else _norm(c) for c in row.cells)


def _sort_key(row: WideTuple) -> tuple:
    return tuple((1, "") if c.is_null else (0, c.value) for c in row.cells)


@dataclass(frozen=True)
class IntegratedTable:
    columns: tuple[str, ...]  # integration IDs
    rows: tuple[WideTuple, ...]
    operator: str
    mapping: IntegrationMapping | None = None

    def cell_rows(self) -> tuple[tuple[Cell, ...], ...]:
        return tuple(row.cells for row in self.rows)


def _check_mapping_total(tables: list[Table], mapping: IntegrationMapping) -> None:
    for table in tables:
        for column in table.columns:
            if (table.table_id, column) not in mapping.assignments:
                raise InputError(
                    "mapping_not_total",
                    f"mapping misses ({table.table_id!r}, {column!r})",
                )


def covered_ids(table: Table, mapping: IntegrationMapping) -> set[str]:
    return {mapping.assignments[(table.table_id, c)] for c in table.columns}


def outer_union(tables: list[Table], mapping: IntegrationMapping) -> list[WideTuple]:
    """One WideTuple per input row; IDs the row's table lacks become produced nulls."""
    _check_mapping_total(tables, mapping)
    ids = mapping.integration_ids
    id_pos = {iid: i for i, iid in enumerate(ids)}
    out: list[WideTuple] = []
    for table in tables:
        positions = [id_pos[mapping.assignments[(table.table_id, c)]] for c in table.columns]
        for r, row in enumerate(table.rows):
            cells: list[Cell] = [Cell.produced()] * len(ids)
            for col_idx, pos in enumerate(positions):
                cells[pos] = row[col_idx]
            out.append(WideTuple(tuple(cells), frozenset({(table.table_id, r)})))
    return out


def _origins_compatible(a: frozenset[tuple[str, int]], b: frozenset[tuple[str, int]]) -> bool:
    rows_by_table: dict[str, int] = {t: r for t, r in a}
    for t, r in b:
        if rows_by_table.get(t, r) != r:
            return False
    return True


def _merge_null(a: Cell, b: Cell) -> Cell:
    if a.kind is NullKind.MISSING or b.kind is NullKind.MISSING:
        return Cell.missing()
    return Cell.produced()


def complement_merge(t1: WideTuple, t2: WideTuple) -> WideTuple | None:
    """Merge two join-consistent tuples into one carrying both tuples' facts.

    Defined iff the tuples agree at every ID where both are non-null, share at
    least one such agreeing ID, and no source table contributes two different
    rows to the combined origins. Returns None otherwise.
    """
    if not _origins_compatible(t1.origins, t2.origins):
        return None
    shared_agreeing = 0
    merged: list[Cell] = []
    for a, b in zip(t1.cells, t2.cells):
        if not a.is_null and not b.is_null:
            if _norm(a) != _norm(b):
                return None
            shared_agreeing += 1
            merged.append(a if a.value <= b.value else b)
        elif not a.is_null:
            merged.append(a)
        elif not b.is_null:
            merged.append(b)
        else:
            merged.append(_merge_null(a, b))
    if shared_agreeing == 0:
        return None
    return WideTuple(tuple(merged), t1.origins | t2.origins)


def _subsumes(a: WideTuple, b: WideTuple) -> bool:
    """True when a agrees with b wherever b is non-null and has strictly more values."""
    more = False
    for ca, cb in zip(a.cells, b.cells):
        if not cb.is_null:
            if ca.is_null or _norm(ca) != _norm(cb):
                return False
        elif not ca.is_null:
            more = True
    return more


def subsumption_filter(rows: Iterable[WideTuple]) -> list[WideTuple]:
    """Collapse exact duplicates (origins unioned) and drop subsumed rows."""
    by_values: dict[tuple, WideTuple] = {}
    for row in rows:
        vk = _value_key(row)
        prior = by_values.get(vk)
        if prior is None:
            by_values[vk] = row
        else:
            cells = tuple(
                a if not a.is_null else _merge_null(a, b)
                for a, b in zip(prior.cells, row.cells)
            )
            by_values[vk] = WideTuple(cells, prior.origins | row.origins)
    unique = list(by_values.values())
    kept = []
    for row in unique:
        if not any(other is not row and _subsumes(other, row) for other in unique):
            kept.append(row)
    return kept


def full_disjunction(
    tables: list[Table],
    mapping: IntegrationMapping,
    row_limit: int = DEFAULT_ROW_LIMIT,
) -> IntegratedTable:
    """Fixpoint of complement merges over the outer union, then subsumption.

    The result is independent of table order and of merge scheduling. The
    fixpoint can blow up on adversarial inputs, so it fails loudly once the
    intermediate tuple count passes ``row_limit``.
    """
    base = outer_union(tables, mapping)
    seen: dict[tuple, WideTuple] = {}
    frontier: deque[WideTuple] = deque()
    # bucket tuples by each non-null (position, value): merge partners must share one
    buckets: dict[tuple[int, str], list[WideTuple]] = {}

    def admit(row: WideTuple) -> None:
        key = _key(row)
        if key in seen:
            return
        if len(seen) >= row_limit:
            raise OperationError(
                "row_limit_exceeded",
                f"integration exceeded the {row_limit} intermediate tuple limit "
                f"({len(seen)} tuples so far)",
                stage="integrate",
            )
        seen[key] = row
        frontier.append(row)
        for pos, cell in enumerate(row.cells):
            if not cell.is_null:
                buckets.setdefault((pos, _norm(cell)), []).append(row)

    for row in base:
        admit(row)
    while frontier:
        row = frontier.popleft()
        candidates: list[WideTuple] = []
        seen_ids = set()
        for pos, cell in enumerate(row.cells):
            if cell.is_null:
                continue
            for other in buckets.get((pos, _norm(cell)), ()):
                if id(other) not in seen_ids:
                    seen_ids.add(id(other))
                    candidates.append(other)
        for other in candidates:
            merged = complement_merge(row, other)
            if merged is not None:
                admit(merged)

    rows = subsumption_filter(seen.values())
    rows.sort(key=_sort_key)
    return IntegratedTable(mapping.integration_ids, tuple(rows), "fd", mapping)


def _merge_all(rows: list[WideTuple], edges: set[tuple[int, int]]) -> WideTuple:
    # fold in BFS order over the agreement graph so every step shares an
    # agreeing non-null ID with the partial merge
    order = [0]
    pending = set(range(1, len(rows)))
    while pending:
        nxt = next(
            i
            for i in sorted(pending)
            if any((i, j) in edges or (j, i) in edges for j in order)
        )
        order.append(nxt)
        pending.remove(nxt)
    merged = rows[order[0]]
    for i in order[1:]:
        step = complement_merge(merged, rows[i])
        assert step is not None
        merged = step
    return merged


def fd_oracle(
    tables: list[Table],
    mapping: IntegrationMapping,
) -> IntegratedTable:
    """Brute-force reference: enumerate row subsets with at most one row per table.

    A subset survives iff it is pairwise join-consistent and its agreement
    graph (edges between rows sharing an agreeing non-null ID) is connected.
    Only for tiny inputs.
    """
    if len(tables) > ORACLE_MAX_TABLES or any(len(t.rows) > ORACLE_MAX_ROWS for t in tables):
        raise InputError(
            "oracle_too_large",
            f"oracle accepts at most {ORACLE_MAX_TABLES} tables of {ORACLE_MAX_ROWS} rows",
        )
    base = outer_union(tables, mapping)
    by_table: dict[str, list[WideTuple]] = {}
    for row in base:
        table_id = next(iter(row.origins))[0]
        by_table.setdefault(table_id, []).append(row)
    groups = [by_table[t.table_id] for t in tables if t.table_id in by_table]

    def consistent(a: WideTuple, b: WideTuple) -> tuple[bool, bool]:
        agree = 0
        for ca, cb in zip(a.cells, b.cells):
            if not ca.is_null and not cb.is_null:
                if _norm(ca) != _norm(cb):
                    return False, False
                agree += 1
        return True, agree > 0

    def connected(chosen: list[WideTuple], edges: set[tuple[int, int]]) -> bool:
        if len(chosen) <= 1:
            return True
        seen = {0}
        stack = [0]
        while stack:
            cur = stack.pop()
            for i in range(len(chosen)):
                if i not in seen and ((cur, i) in edges or (i, cur) in edges):
                    seen.add(i)
                    stack.append(i)
        return len(seen) == len(chosen)

    results: list[WideTuple] = []
    combos: list[list[WideTuple]] = [[]]
    for group in groups:
        combos = [combo + pick for combo in combos for pick in ([[]] + [[row] for row in group])]
    for combo in combos:
        if not combo:
            continue
        edges: set[tuple[int, int]] = set()
        ok = True
        for i in range(len(combo)):
            for j in range(i + 1, len(combo)):
                cons, agree = consistent(combo[i], combo[j])
                if not cons:
                    ok = False
                    break
                if agree:
                    edges.add((i, j))
            if not ok:
                break
        if not ok or not connected(combo, edges):
            continue
        results.append(_merge_all(combo, edges) if len(combo) > 1 else combo[0])

    rows = subsumption_filter(results)
    rows.sort(key=_sort_key)
    return IntegratedTable(mapping.integration_ids, tuple(rows), "fd-oracle", mapping)


def _strict_match(left: WideTuple, right: WideTuple, shared_positions: list[int]) -> bool:
    for pos in shared_positions:
        a, b = left.cells[pos], right.cells[pos]
        if a.is_null or b.is_null or _norm(a) != _norm(b):
            return False
    return True


def outer_join_integrate(
    tables: list[Table],
    mapping: IntegrationMapping,
    order: list[str] | None = None,
) -> IntegratedTable:
    """Left fold of full outer joins in the given table order.

    Rows pair up only when every shared integration ID is non-null on both
    sides and equal: a null never equals a null or a value. Tables with no
    shared IDs concatenate. No subsumption removal afterwards; this operator
    is the baseline the default integrator is compared against.
    """
    _check_mapping_total(tables, mapping)
    by_id = {t.table_id: t for t in tables}
    if order is None:
        ordered = tables
    else:
        unknown = [t for t in order if t not in by_id]
        if unknown or len(order) != len(tables):
            raise InputError("bad_order", f"order must permute the integration set, got {order}")
        ordered = [by_id[t] for t in order]
    if not ordered:
        raise InputError("empty_set", "integration set is empty")

    ids = mapping.integration_ids
    id_pos = {iid: i for i, iid in enumerate(ids)}

    acc = outer_union([ordered[0]], mapping)
    acc_cover = covered_ids(ordered[0], mapping)
    for table in ordered[1:]:
        right = outer_union([table], mapping)
        right_cover = covered_ids(table, mapping)
        shared = sorted(acc_cover & right_cover)
        shared_positions = [id_pos[iid] for iid in shared]
        next_rows: list[WideTuple] = []
        matched_right: set[int] = set()
        for left in acc:
            matched = False
            if shared_positions:
                for ri, r in enumerate(right):
                    if _strict_match(left, r, shared_positions):
                        matched = True
                        matched_right.add(ri)
                        cells = []
                        for a, b in zip(left.cells, r.cells):
                            if not a.is_null and not b.is_null:
                                cells.append(a if a.value <= b.value else b)
                            elif not a.is_null:
                                cells.append(a)
                            elif not b.is_null:
                                cells.append(b)
                            else:
                                cells.append(_merge_null(a, b))
                        next_rows.append(WideTuple(tuple(cells), left.origins | r.origins))
            if not matched:
                next_rows.append(left)
        for ri, r in enumerate(right):
            if ri not in matched_right:
                next_rows.append(r)
        acc = next_rows
        acc_cover |= right_cover

    return IntegratedTable(ids, tuple(acc), "outer-join", mapping)


IntegrationOperator = Callable[[list[Table], IntegrationMapping], IntegratedTable]


class OperatorRegistry:
    def __init__(self):
        self._operators: dict[str, IntegrationOperator] = {}

    def register(self, name: str, fn: IntegrationOperator) -> None:
        if name in self._operators:
            raise InputError("duplicate_operator", f"operator {name!r} already registered")
        self._operators[name] = fn

    def get(self, name: str) -> IntegrationOperator:
        if name not in self._operators:
            raise InputError("unknown_operator", f"unknown integration operator {name!r}")
        return self._operators[name]

    def names(self) -> list[str]:
        return sorted(self._operators)

    def unregister(self, name: str) -> None:
        self._operators.pop(name, None)


def default_operator_registry() -> OperatorRegistry:
    registry = OperatorRegistry()
    registry.register("fd", lambda tables, mapping: full_disjunction(tables, mapping))
    registry.register("outer-join", lambda tables, mapping: outer_join_integrate(tables, mapping))
    return registry


GLOBAL_OPERATORS = default_operator_registry()


def register_integration_operator(
    name: str, fn: IntegrationOperator, registry: OperatorRegistry | None = None
) -> None:
    (registry or GLOBAL_OPERATORS).register(name, fn)


def integrate_with(
    name: str,
    tables: list[Table],
    mapping: IntegrationMapping,
    registry: OperatorRegistry | None = None,
) -> IntegratedTable:
    return (registry or GLOBAL_OPERATORS).get(name)(tables, mapping)


def integrated_to_csv_text(result: IntegratedTable) -> str:
    import csv as _csv
    import io as _io

    buf = _io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow(["" if c.is_null else c.value for c in row.cells])
    return buf.getvalue()


def lineage_obj(result: IntegratedTable) -> dict:
    return {
        "operator": result.operator,
        "columns": list(result.columns),
        "null_kinds": [[c.kind.value for c in row.cells] for row in result.rows],
        "origins": [sorted([t, r] for t, r in row.origins) for row in result.rows],
    }


def save_integrated(result: IntegratedTable, csv_path: str | Path) -> tuple[Path, Path]:
    """CSV with empty cells for both null kinds, plus a lineage sidecar."""
    csv_path = Path(csv_path)
    write_text(csv_path, integrated_to_csv_text(result))
    sidecar = csv_path.with_name(csv_path.name + ".lineage.json")
    write_json(sidecar, lineage_obj(result))
    return csv_path, sidecar


def load_integrated(csv_path: str | Path) -> IntegratedTable:
    """Reload an exported integrated table, using the sidecar when present."""
    csv_path = Path(csv_path)
    table = load_table(csv_path, header_mode="present", table_id=csv_path.name)
    sidecar = csv_path.with_name(csv_path.name + ".lineage.json")
    kinds = None
    origins = None
    operator = "imported"
    if sidecar.exists():
        obj = read_json(sidecar)
        kinds = obj.get("null_kinds")
        origins = obj.get("origins")
        operator = obj.get("operator", operator)
    rows = []
    for i, row in enumerate(table.rows):
        cells = []
        for j, cell in enumerate(row):
            if cell.is_null and kinds is not None:
                cells.append(Cell.produced() if kinds[i][j] == "produced" else Cell.missing())
            else:
                cells.append(cell)
        origin = (
            frozenset((t, r) for t, r in origins[i]) if origins is not None else frozenset()
        )
        rows.append(WideTuple(tuple(cells), origin))
    return IntegratedTable(table.columns, tuple(rows), operator)
