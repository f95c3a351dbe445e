"""Downstream analytics over integrated tables.

All three analyses are null-aware: both null kinds are simply absent values.
Aggregation drops nulls from the measure, correlation uses pairwise-complete
deletion, and the entity-resolution pass scores row pairs only on the IDs
where both rows hold values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import InputError
from .tables import Cell, normalize_value, parse_number

AGGREGATE_FUNCS = ("min", "max", "mean", "sum", "count")

DEFAULT_ER_THRESHOLD = 0.85


class TableLike(Protocol):
    columns: tuple[str, ...]

    def cell_rows(self) -> Sequence[Sequence[Cell]]: ...


def _column_index(table: TableLike, name: str) -> int:
    try:
        return list(table.columns).index(name)
    except ValueError:
        raise InputError("unknown_column", f"no column {name!r} in {list(table.columns)}")


@dataclass(frozen=True)
class AnalysisSpec:
    kind: str  # aggregate | correlate | resolve
    group_by: tuple[str, ...] = ()
    measure: str | None = None
    func: str | None = None
    x: str | None = None
    y: str | None = None
    threshold: float = DEFAULT_ER_THRESHOLD

    @staticmethod
    def from_json_obj(obj: dict) -> "AnalysisSpec":
        kind = obj.get("kind")
        if kind not in ("aggregate", "correlate", "resolve"):
            raise InputError("bad_spec", f"unknown analysis kind {kind!r}")
        return AnalysisSpec(
            kind=kind,
            group_by=tuple(obj.get("group_by", ())),
            measure=obj.get("measure"),
            func=obj.get("func"),
            x=obj.get("x"),
            y=obj.get("y"),
            threshold=float(obj.get("threshold", DEFAULT_ER_THRESHOLD)),
        )

    def to_json_obj(self) -> dict:
        obj: dict = {"kind": self.kind}
        if self.kind == "aggregate":
            obj.update(group_by=list(self.group_by), measure=self.measure, func=self.func)
        elif self.kind == "correlate":
            obj.update(x=self.x, y=self.y)
        else:
            obj.update(threshold=self.threshold)
        return obj


@dataclass(frozen=True)
class AggregateResult:
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]  # group key values (str | None) + aggregate (float | int | None)


def aggregate(
    table: TableLike,
    group_by: Sequence[str],
    measure: str,
    func: str,
) -> AggregateResult:
    """Group rows and aggregate the measure column, nulls excluded.

    Groups whose measure is entirely null report a null aggregate. ``count``
    counts non-null cells and works on any column; the numeric functions
    require at least one parseable value overall.
    """
    if func not in AGGREGATE_FUNCS:
        raise InputError("bad_spec", f"aggregate must be one of {AGGREGATE_FUNCS}, got {func!r}")
    key_idx = [_column_index(table, c) for c in group_by]
    m_idx = _column_index(table, measure)

    groups: dict[tuple, list[Cell]] = {}
    labels: dict[tuple, tuple] = {}
    for row in table.cell_rows():
        key = tuple(
            None if row[i].is_null else normalize_value(row[i].value) for i in key_idx
        )
        if key not in groups:
            groups[key] = []
            labels[key] = tuple(None if row[i].is_null else row[i].value for i in key_idx)
        groups[key].append(row[m_idx])

    if func != "count":
        parseable = sum(
            1
            for cells in groups.values()
            for c in cells
            if not c.is_null and parse_number(c.value) is not None
        )
        if parseable == 0:
            raise InputError(
                "non_numeric_measure", f"column {measure!r} has no numeric-parseable values"
            )

    def agg(cells: list[Cell]):
        if func == "count":
            return sum(1 for c in cells if not c.is_null)
        values = [
            v for c in cells if not c.is_null for v in [parse_number(c.value)] if v is not None
        ]
        if not values:
            return None
        if func == "min":
            return min(values)
        if func == "max":
            return max(values)
        if func == "sum":
            return sum(values)
        return sum(values) / len(values)

    def order_key(key: tuple) -> tuple:
        return tuple((1, "") if part is None else (0, part) for part in key)

    out_rows = [
        labels[key] + (agg(groups[key]),) for key in sorted(groups, key=order_key)
    ]
    return AggregateResult(tuple(group_by) + (f"{func}_{measure}",), tuple(out_rows))


def pearson(table: TableLike, x: str, y: str) -> float:
    """Pearson correlation with pairwise-complete deletion.

    Rows where either side is null or non-numeric are dropped; errors when
    fewer than two complete pairs remain or either side has zero variance.
    """
    xi, yi = _column_index(table, x), _column_index(table, y)
    pairs: list[tuple[float, float]] = []
    for row in table.cell_rows():
        cx, cy = row[xi], row[yi]
        if cx.is_null or cy.is_null:
            continue
        vx, vy = parse_number(cx.value), parse_number(cy.value)
        if vx is None or vy is None:
            continue
        pairs.append((vx, vy))
    if len(pairs) < 2:
        raise InputError(
            "insufficient_pairs", f"need >= 2 complete numeric pairs, found {len(pairs)}"
        )
    n = len(pairs)
    mean_x = sum(p[0] for p in pairs) / n
    mean_y = sum(p[1] for p in pairs) / n
    sxx = sum((p[0] - mean_x) ** 2 for p in pairs)
    syy = sum((p[1] - mean_y) ** 2 for p in pairs)
    if sxx == 0.0 or syy == 0.0:
        raise InputError("zero_variance", "one of the columns has zero variance")
    sxy = sum((p[0] - mean_x) * (p[1] - mean_y) for p in pairs)
    return sxy / math.sqrt(sxx * syy)


def jaro(a: str, b: str) -> float:
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    window = max(len(a), len(b)) // 2 - 1
    window = max(window, 0)
    a_match = [False] * len(a)
    b_match = [False] * len(b)
    matches = 0
    for i, ch in enumerate(a):
        lo, hi = max(0, i - window), min(i + window + 1, len(b))
        for j in range(lo, hi):
            if b_match[j] or b[j] != ch:
                continue
            a_match[i] = b_match[j] = True
            matches += 1
            break
    if matches == 0:
        return 0.0
    transpositions = 0
    k = 0
    for i, ch in enumerate(a):
        if not a_match[i]:
            continue
        while not b_match[k]:
            k += 1
        if ch != b[k]:
            transpositions += 1
        k += 1
    transpositions //= 2
    m = matches
    return (m / len(a) + m / len(b) + (m - transpositions) / m) / 3.0


def jaro_winkler(a: str, b: str, prefix_scale: float = 0.1) -> float:
    base = jaro(a, b)
    prefix = 0
    for ca, cb in zip(a[:4], b[:4]):
        if ca != cb:
            break
        prefix += 1
    return base + prefix * min(prefix_scale, 0.25) * (1.0 - base)


def row_similarity(a: Sequence[Cell], b: Sequence[Cell]) -> float:
    """Mean per-ID similarity over IDs where both rows are non-null; 0 if none."""
    scores = []
    for ca, cb in zip(a, b):
        if ca.is_null or cb.is_null:
            continue
        va, vb = normalize_value(ca.value), normalize_value(cb.value)
        scores.append(1.0 if va == vb else jaro_winkler(va, vb))
    if not scores:
        return 0.0
    return sum(scores) / len(scores)


def resolve_entities(table: TableLike, threshold: float = DEFAULT_ER_THRESHOLD) -> list[list[int]]:
    """Cluster row indices by linking pairs whose similarity reaches ``threshold``.

    Pairs sharing no non-null ID never link, whatever the threshold. Clusters
    are connected components, each sorted, ordered by first member; singletons
    included.
    """
    rows = list(table.cell_rows())
    if not rows:
        raise InputError("empty_table", "cannot resolve entities on an empty table")
    parent = list(range(len(rows)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(rows)):
        for j in range(i + 1, len(rows)):
            shared = any(
                not rows[i][p].is_null and not rows[j][p].is_null for p in range(len(rows[i]))
            )
            if not shared:
                continue
            if row_similarity(rows[i], rows[j]) >= threshold:
                parent[find(i)] = find(j)

    clusters: dict[int, list[int]] = {}
    for i in range(len(rows)):
        clusters.setdefault(find(i), []).append(i)
    return sorted((sorted(c) for c in clusters.values()), key=lambda c: c[0])


def run_analysis(table: TableLike, spec: AnalysisSpec) -> dict:
    """Dispatch an AnalysisSpec; the result always carries the spec it ran."""
    if spec.kind == "aggregate":
        if not spec.measure or not spec.func:
            raise InputError("bad_spec", "aggregate needs 'measure' and 'func'")
        result = aggregate(table, spec.group_by, spec.measure, spec.func)
        payload = {"columns": list(result.columns), "rows": [list(r) for r in result.rows]}
    elif spec.kind == "correlate":
        if not spec.x or not spec.y:
            raise InputError("bad_spec", "correlate needs 'x' and 'y'")
        payload = {"x": spec.x, "y": spec.y, "coefficient": pearson(table, spec.x, spec.y)}
    else:
        clusters = resolve_entities(table, spec.threshold)
        payload = {"threshold": spec.threshold, "clusters": clusters}
    return {"spec": spec.to_json_obj(), "result": payload}
