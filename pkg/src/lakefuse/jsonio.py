"""Canonical JSON serialization and atomic file writes.

Every artifact the CLI or the service persists goes through these helpers so
that identical inputs yield byte-identical files regardless of entry point.
"""

from __future__ import annotations

import json
import os
from pathlib import Path


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def write_json(path: Path, obj) -> None:
    write_text(path, dumps_canonical(obj))


def read_json(path: Path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_text(path: Path, text: str) -> None:
    """Write via a temp file + rename so readers never see partial content."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


def write_bytes(path: Path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(data)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)
