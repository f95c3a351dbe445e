"""Table and lake data model: CSV ingestion, null handling, value normalization.

Tables are immutable once loaded. Cells distinguish two null kinds: ``missing``
nulls come from the input data ("value unknown"), ``produced`` nulls are created
later by integration when a source table lacks an attribute entirely. A freshly
loaded table never contains produced nulls.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import InputError
from .jsonio import read_json, write_json

MANIFEST_NAME = "lake.manifest.json"

NULL_TOKENS = {"", "na", "null"}

_SYNTHETIC_RE = re.compile(r"^col_\d+$")


class NullKind(str, Enum):
    NONE = "none"  # not a null: the cell has a value
    MISSING = "missing"
    PRODUCED = "produced"


@dataclass(frozen=True)
class Cell:
    value: str | None
    kind: NullKind

    @staticmethod
    def of(value: str) -> "Cell":
        return Cell(value, NullKind.NONE)

    @staticmethod
    def missing() -> "Cell":
        return _MISSING

    @staticmethod
    def produced() -> "Cell":
        return _PRODUCED

    @property
    def is_null(self) -> bool:
        return self.kind is not NullKind.NONE


_MISSING = Cell(None, NullKind.MISSING)
_PRODUCED = Cell(None, NullKind.PRODUCED)


@dataclass(frozen=True)
class Table:
    table_id: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]
    provenance: str = ""
    synthetic_headers: frozenset[str] = frozenset()

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise InputError("unknown_column", f"table {self.table_id!r} has no column {name!r}")

    def cell_rows(self) -> tuple[tuple[Cell, ...], ...]:
        return self.rows

    def is_synthetic(self, column: str) -> bool:
        return column in self.synthetic_headers or bool(_SYNTHETIC_RE.match(column))


def normalize_value(value: str) -> str:
    """Normalization used for all value matching: trim whitespace, lowercase."""
    return value.strip().lower()


def is_null_token(raw: str) -> bool:
    return normalize_value(raw) in NULL_TOKENS


def parse_number(raw: str) -> float | None:
    """Lenient numeric parse: thousands separators stripped, optional trailing %.

    Returns None when the text is not a finite number; callers treat that as a
    null for numeric operations only.
    """
    text = raw.strip().replace(",", "")
    if text.endswith("%"):
        text = text[:-1].strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    if not math.isfinite(value):
        return None
    return value


def _dedupe_headers(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    result = []
    for name in names:
        base = name
        if base in seen:
            n = seen[base] + 1
            candidate = f"{base}_{n}"
            while candidate in seen:
                n += 1
                candidate = f"{base}_{n}"
            seen[base] = n
            name = candidate
        seen.setdefault(name, 1)
        result.append(name)
    return result


def _cell_from_raw(raw: str) -> Cell:
    if is_null_token(raw):
        return Cell.missing()
    return Cell.of(raw)


def _parse_csv_text(text: str, header_mode: str, table_id: str, provenance: str) -> Table:
    records = list(csv.reader(io.StringIO(text)))
    if not records:
        return Table(table_id, (), (), provenance)

    if header_mode == "present":
        has_header = True
    elif header_mode == "absent":
        has_header = False
    elif header_mode == "auto":
        has_header = all(parse_number(cell) is None for cell in records[0])
    else:
        raise InputError("bad_header_mode", f"unknown header mode {header_mode!r}")

    synthetic: frozenset[str] = frozenset()
    if has_header:
        columns = _dedupe_headers([name.strip() for name in records[0]])
        data = records[1:]
    else:
        width = len(records[0])
        columns = [f"col_{i}" for i in range(width)]
        synthetic = frozenset(columns)
        data = records

    rows = []
    for i, record in enumerate(data):
        if not record:  # fully blank line
            continue
        if len(record) != len(columns):
            raise InputError(
                "inconsistent_row",
                f"{table_id}: row {i + 1} has {len(record)} fields, expected {len(columns)}",
            )
        rows.append(tuple(_cell_from_raw(raw) for raw in record))

    return Table(table_id, tuple(columns), tuple(rows), provenance, synthetic)


def load_table(path: str | Path, header_mode: str = "auto", table_id: str | None = None) -> Table:
    """Load an RFC-4180 CSV file.

    ``auto`` treats the first row as a header iff none of its cells parses as
    a number. Empty fields and the tokens NA / null (case-insensitive) become
    missing nulls. Duplicate headers are deduplicated by suffixing.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError("unreadable_file", f"cannot read {path}: {exc}")
    except UnicodeDecodeError as exc:
        raise InputError("unreadable_file", f"{path} is not valid UTF-8: {exc}")
    tid = table_id if table_id is not None else path.name
    return _parse_csv_text(text, header_mode, tid, str(path))


def load_table_from_text(text: str, header_mode: str = "auto", table_id: str = "inline") -> Table:
    return _parse_csv_text(text, header_mode, table_id, "inline")


def table_to_csv_text(table: Table) -> str:
    """Render a table back to CSV. Both null kinds render as empty fields."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(["" if cell.is_null else cell.value for cell in row])
    return buf.getvalue()


def save_table(table: Table, path: str | Path) -> None:
    Path(path).write_text(table_to_csv_text(table), encoding="utf-8", newline="")


def column_values(table: Table, column: str) -> set[str]:
    """Distinct normalized values of a column, nulls excluded."""
    idx = table.column_index(column)
    return {
        normalize_value(row[idx].value)
        for row in table.rows
        if not row[idx].is_null
    }


@dataclass(frozen=True)
class LakeEntry:
    table_id: str
    path: str  # relative to the lake root, POSIX separators
    rows: int
    cols: int
    sha256: str


@dataclass
class Lake:
    """Catalog over a directory of CSV files. Immutable after ingestion."""

    root: Path
    entries: dict[str, LakeEntry]
    warnings: list[dict] = field(default_factory=list)
    _cache: dict[str, Table] = field(default_factory=dict, repr=False)

    def table_ids(self) -> list[str]:
        return sorted(self.entries)

    def __contains__(self, table_id: str) -> bool:
        return table_id in self.entries

    def load(self, table_id: str) -> Table:
        if table_id not in self.entries:
            raise InputError("unknown_table", f"lake has no table {table_id!r}")
        if table_id not in self._cache:
            entry = self.entries[table_id]
            self._cache[table_id] = load_table(self.root / entry.path, table_id=table_id)
        return self._cache[table_id]

    def manifest_obj(self) -> dict:
        return {
            "tables": [
                {
                    "table_id": e.table_id,
                    "path": e.path,
                    "rows": e.rows,
                    "cols": e.cols,
                    "sha256": e.sha256,
                }
                for e in sorted(self.entries.values(), key=lambda e: e.table_id)
            ],
            "warnings": self.warnings,
        }

    def write_manifest(self) -> Path:
        path = self.root / MANIFEST_NAME
        write_json(path, self.manifest_obj())
        return path


def ingest_lake(root: str | Path) -> Lake:
    """Catalog every CSV under ``root``.

    Unparsable files are skipped and recorded as warnings; they never abort
    the ingest. table_id is the relative path, entries sorted lexicographically.
    Re-running on an unchanged directory yields an identical catalog.
    """
    root = Path(root)
    if not root.is_dir():
        raise InputError("unreadable_file", f"lake root {root} is not a directory")
    entries: dict[str, LakeEntry] = {}
    warnings: list[dict] = []
    for path in sorted(root.rglob("*.csv")):
        rel = path.relative_to(root).as_posix()
        try:
            table = load_table(path, table_id=rel)
        except InputError as exc:
            warnings.append({"path": rel, "error": exc.message})
            continue
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        entries[rel] = LakeEntry(rel, rel, len(table.rows), len(table.columns), digest)
    return Lake(root=root, entries=entries, warnings=warnings)


def load_lake(root: str | Path) -> Lake:
    """Open a lake, reusing the persisted manifest when it is still accurate."""
    root = Path(root)
    manifest = root / MANIFEST_NAME
    if manifest.exists():
        obj = read_json(manifest)
        entries = {
            t["table_id"]: LakeEntry(t["table_id"], t["path"], t["rows"], t["cols"], t["sha256"])
            for t in obj.get("tables", [])
        }
        if all((root / e.path).exists() for e in entries.values()):
            return Lake(root=root, entries=entries, warnings=list(obj.get("warnings", [])))
    return ingest_lake(root)
