"""Shared generators for randomized tests: integration instances, planted lakes."""

from __future__ import annotations

import random
from pathlib import Path

from lakefuse.align import IntegrationMapping
from lakefuse.integrate import IntegratedTable, WideTuple
from lakefuse.tables import Cell, Table

ALPHABET = ["a", "b", "c", "d"]


def random_instance(
    rng: random.Random,
    n_tables: int | None = None,
    max_ids: int = 5,
    max_rows: int = 6,
    null_rate_range: tuple[float, float] = (0.2, 0.4),
    alphabet: list[str] = ALPHABET,
) -> tuple[list[Table], IntegrationMapping]:
    """Random aligned integration set: shared ID pool, per-table coverage."""
    if n_tables is None:
        n_tables = rng.randint(2, 4)
    n_ids = rng.randint(2, max_ids)
    ids = [f"I{i}" for i in range(n_ids)]
    null_rate = rng.uniform(*null_rate_range)

    tables: list[Table] = []
    assignments: dict[tuple[str, str], str] = {}
    for t in range(n_tables):
        table_id = f"t{t}"
        width = rng.randint(1, n_ids)
        covered = rng.sample(ids, width)
        covered.sort()
        columns = tuple(f"c_{iid}" for iid in covered)
        for iid, col in zip(covered, columns):
            assignments[(table_id, col)] = iid
        n_rows = rng.randint(1, max_rows)
        rows = []
        for _ in range(n_rows):
            cells = []
            for _col in columns:
                if rng.random() < null_rate:
                    cells.append(Cell.missing())
                else:
                    cells.append(Cell.of(rng.choice(alphabet)))
            rows.append(tuple(cells))
        tables.append(Table(table_id, columns, tuple(rows)))
    return tables, IntegrationMapping(assignments, tuple(ids))


def row_fingerprint(row: WideTuple) -> tuple:
    return tuple((c.kind.value, c.value) for c in row.cells)


def result_fingerprint(result: IntegratedTable) -> frozenset:
    return frozenset(row_fingerprint(row) for row in result.rows)


def write_planted_lake(
    root: Path,
    seed: int,
    n_background: int = 700,
    n_per_level: int = 100,
    levels: tuple[float, ...] = (0.2, 0.5, 0.8),
    query_size: int = 80,
) -> tuple[Path, dict[str, float]]:
    """Single-column lake with columns planted at exact containments of a query.

    Planted columns are strict subsets of the query's value set, so their true
    Jaccard equals their containment. Returns the query CSV path plus the
    planted containment per table id.
    """
    rng = random.Random(seed)
    root.mkdir(parents=True, exist_ok=True)
    query_values = [f"s{seed}q{i}" for i in range(query_size)]

    def write_column(name: str, values: list[str]) -> None:
        lines = ["val"] + values
        (root / name).write_text("\n".join(lines) + "\n", encoding="utf-8")

    planted: dict[str, float] = {}
    idx = 0
    for level in levels:
        take = round(level * query_size)
        for _ in range(n_per_level):
            name = f"plant_{idx:04d}.csv"
            values = rng.sample(query_values, take)
            write_column(name, values)
            planted[name] = level
            idx += 1
    for b in range(n_background):
        size = rng.randint(20, 200)
        values = [f"s{seed}bg{b}_{i}" for i in range(size)]
        write_column(f"bg_{b:04d}.csv", values)

    query_path = root.parent / f"query_{seed}.csv"
    query_path.write_text("\n".join(["val"] + query_values) + "\n", encoding="utf-8")
    return query_path, planted
