"""Holistic column alignment: cluster columns across an integration set.

Every column of every table gets exactly one integration ID; two columns of
the same table never share an ID. Columns are matched by a blend of value
overlap and header similarity, clustered by connected components, and
same-table conflicts are resolved by deleting the weakest edge involved.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InputError
from .tables import Table, column_values

DEFAULT_TAU = 0.5

VALUE_WEIGHT = 0.7
NAME_WEIGHT = 0.3


def levenshtein(a: str, b: str) -> int:
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def name_similarity(a: str, b: str) -> float:
    a, b = a.strip().lower(), b.strip().lower()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def value_jaccard(a: set[str], b: set[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


@dataclass(frozen=True)
class ColumnProfile:
    table_id: str
    column: str
    values: frozenset[str]
    synthetic: bool

    @staticmethod
    def from_table(table: Table, column: str) -> "ColumnProfile":
        return ColumnProfile(
            table.table_id,
            column,
            frozenset(column_values(table, column)),
            table.is_synthetic(column),
        )

    @property
    def node(self) -> tuple[str, str]:
        return (self.table_id, self.column)


def column_similarity(a: ColumnProfile, b: ColumnProfile) -> float:
    """Blend of value-set Jaccard and header similarity.

    When either header is synthetic the name signal is unreliable, so its
    weight is redistributed onto the values.
    """
    jac = value_jaccard(set(a.values), set(b.values))
    if a.synthetic or b.synthetic:
        return jac
    return VALUE_WEIGHT * jac + NAME_WEIGHT * name_similarity(a.column, b.column)


@dataclass(frozen=True)
class IntegrationMapping:
    """Total assignment of (table_id, column) pairs to integration IDs."""

    assignments: dict[tuple[str, str], str]
    integration_ids: tuple[str, ...]

    def columns_for(self, integration_id: str) -> list[tuple[str, str]]:
        return sorted(node for node, i in self.assignments.items() if i == integration_id)

    def id_for(self, table_id: str, column: str) -> str:
        try:
            return self.assignments[(table_id, column)]
        except KeyError:
            raise InputError(
                "mapping_not_total", f"mapping has no assignment for ({table_id!r}, {column!r})"
            )

    def to_json_obj(self) -> dict[str, list[list[str]]]:
        return {
            iid: [[t, c] for t, c in self.columns_for(iid)]
            for iid in self.integration_ids
        }


def _components(nodes: list[tuple[str, str]], edges: dict[tuple, float]) -> list[list[tuple[str, str]]]:
    adjacency: dict[tuple[str, str], set[tuple[str, str]]] = {n: set() for n in nodes}
    for (u, v) in edges:
        adjacency[u].add(v)
        adjacency[v].add(u)
    seen: set[tuple[str, str]] = set()
    components = []
    for node in sorted(nodes):
        if node in seen:
            continue
        stack, comp = [node], []
        seen.add(node)
        while stack:
            cur = stack.pop()
            comp.append(cur)
            for nxt in adjacency[cur]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        components.append(sorted(comp))
    return components


def _same_table_conflict(component: list[tuple[str, str]]) -> bool:
    tables = [t for t, _ in component]
    return len(tables) != len(set(tables))


def validate_mapping(mapping: IntegrationMapping, tables: list[Table]) -> None:
    """Check totality and same-table separation against an integration set."""
    expected = {(t.table_id, c) for t in tables for c in t.columns}
    got = set(mapping.assignments)
    if got != expected:
        extra = sorted(got - expected)
        skipped = sorted(expected - got)
        raise InputError(
            "mapping_not_total",
            f"mapping does not cover the integration set exactly "
            f"(missing {skipped[:3]}, unexpected {extra[:3]})",
        )
    for iid in mapping.integration_ids:
        members = mapping.columns_for(iid)
        if _same_table_conflict(members):
            raise InputError(
                "mapping_conflict", f"integration id {iid!r} holds two columns of one table"
            )


def mapping_from_json_obj(obj: dict, tables: list[Table]) -> IntegrationMapping:
    assignments: dict[tuple[str, str], str] = {}
    for iid, members in obj.items():
        for member in members:
            if len(member) != 2:
                raise InputError("bad_mapping", f"mapping members must be [table, column]: {member!r}")
            node = (member[0], member[1])
            if node in assignments:
                raise InputError("bad_mapping", f"column {node!r} assigned to two integration ids")
            assignments[node] = iid
    mapping = IntegrationMapping(assignments, tuple(obj))
    validate_mapping(mapping, tables)
    return mapping


def assign_integration_ids(
    tables: list[Table], tau: float = DEFAULT_TAU
) -> tuple[IntegrationMapping, list[str]]:
    """Cluster the columns of an integration set into integration IDs.

    Builds inter-table similarity edges at threshold ``tau``, takes connected
    components, and while a component holds two columns of one table deletes
    its lowest-weight edge (ties: lexicographically smallest endpoint pair).
    Returns the mapping plus warnings for all-null columns, which are never
    matched and keep singleton IDs.
    """
    if not tables:
        raise InputError("empty_set", "integration set is empty")
    ids = [t.table_id for t in tables]
    if len(ids) != len(set(ids)):
        raise InputError("duplicate_table", "integration set has duplicate table ids")

    profiles = [ColumnProfile.from_table(t, c) for t in tables for c in t.columns]
    nodes = [p.node for p in profiles]
    warnings = [
        f"column ({p.table_id!r}, {p.column!r}) is all-null; kept as its own integration id"
        for p in profiles
        if not p.values
    ]

    edges: dict[tuple[tuple[str, str], tuple[str, str]], float] = {}
    for i, a in enumerate(profiles):
        for b in profiles[i + 1 :]:
            if a.table_id == b.table_id:
                continue
            if not a.values or not b.values:
                continue
            weight = column_similarity(a, b)
            if weight >= tau:
                key = tuple(sorted((a.node, b.node)))
                edges[key] = weight

    components = _components(nodes, edges)
    while True:
        conflicted = next((c for c in components if _same_table_conflict(c)), None)
        if conflicted is None:
            break
        members = set(conflicted)
        component_edges = [(w, pair) for pair, w in edges.items() if pair[0] in members]
        weakest = min(component_edges, key=lambda e: (e[0], e[1]))
        del edges[weakest[1]]
        components = _components(nodes, edges)

    assignments: dict[tuple[str, str], str] = {}
    integration_ids = []
    for n, comp in enumerate(sorted(components, key=lambda c: c[0])):
        iid = f"I{n}"
        integration_ids.append(iid)
        for node in comp:
            assignments[node] = iid
    return IntegrationMapping(assignments, tuple(integration_ids)), warnings
