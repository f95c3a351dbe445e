"""Query-table generation from a text prompt.

The offline stub is fully deterministic: headers come from the prompt's
keywords and cell values are derived by hashing (prompt, row, column), so the
same prompt always yields the same table. A remote provider can be configured
with an HTTP endpoint whose text response is parsed as CSV; it is disabled
unless configured.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass
from typing import Callable, Protocol

from .errors import InputError, OperationError
from .tables import Cell, Table, load_table_from_text


class TableGenProvider(Protocol):
    name: str

    def generate(self, prompt: str, rows: int, cols: int) -> Table: ...


def _check_shape(prompt: str, rows: int, cols: int) -> None:
    if rows < 1 or cols < 1:
        raise InputError("bad_shape", f"rows and cols must be >= 1, got {rows}x{cols}")
    if not prompt.strip():
        raise InputError("bad_prompt", "prompt must not be empty")


def _digest_int(*parts: str) -> int:
    joined = "\x1f".join(parts)
    return int.from_bytes(hashlib.blake2b(joined.encode("utf-8"), digest_size=8).digest(), "little")


@dataclass(frozen=True)
class StubProvider:
    name: str = "stub"

    def generate(self, prompt: str, rows: int, cols: int) -> Table:
        _check_shape(prompt, rows, cols)
        words = []
        for word in re.findall(r"[A-Za-z0-9]+", prompt.lower()):
            if word.isdigit():
                continue
            if word not in words:
                words.append(word)
        headers = (words + [f"field_{i}" for i in range(cols)])[:cols]
        headers = [h if headers.count(h) == 1 else f"{h}_{i}" for i, h in enumerate(headers)]
        table_rows = []
        for r in range(rows):
            cells = []
            for c, header in enumerate(headers):
                if c == 0:
                    cells.append(Cell.of(f"{header}_{r + 1}"))
                else:
                    value = _digest_int(prompt, str(r), str(c)) % 900 + 100
                    cells.append(Cell.of(str(value)))
            table_rows.append(tuple(cells))
        return Table(
            table_id="generated-query",
            columns=tuple(headers),
            rows=tuple(table_rows),
            provenance=f"textgen:{self.name}",
        )


@dataclass(frozen=True)
class RemoteCsvProvider:
    """Calls a configured HTTP endpoint and parses its text response as CSV."""

    endpoint: str
    key_env: str = ""
    name: str = "remote"
    post: Callable | None = None  # injectable transport for tests

    def generate(self, prompt: str, rows: int, cols: int) -> Table:
        _check_shape(prompt, rows, cols)
        headers = {}
        if self.key_env:
            key = os.environ.get(self.key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        transport = self.post
        if transport is None:
            import requests

            transport = lambda url, **kw: requests.post(url, timeout=30, **kw)
        try:
            response = transport(
                self.endpoint, json={"prompt": prompt, "rows": rows, "cols": cols}, headers=headers
            )
            status = getattr(response, "status_code", 200)
            if status >= 400:
                raise OperationError("provider_error", f"provider returned HTTP {status}")
            text = response.text
        except OperationError:
            raise
        except Exception as exc:
            raise OperationError("provider_error", f"provider call failed: {exc}")
        try:
            table = load_table_from_text(text, header_mode="present", table_id="generated-query")
        except InputError as exc:
            raise OperationError("provider_error", f"malformed generated CSV: {exc.message}")
        if len(table.rows) != rows or len(table.columns) != cols:
            raise OperationError(
                "provider_error",
                f"provider returned {len(table.rows)}x{len(table.columns)}, wanted {rows}x{cols}",
            )
        return table


class ProviderRegistry:
    def __init__(self):
        self._providers: dict[str, TableGenProvider] = {}

    def register(self, provider: TableGenProvider) -> None:
        if provider.name in self._providers:
            raise InputError("duplicate_provider", f"provider {provider.name!r} already registered")
        self._providers[provider.name] = provider

    def get(self, name: str) -> TableGenProvider:
        if name not in self._providers:
            raise InputError("unknown_provider", f"unknown table provider {name!r}")
        return self._providers[name]

    def names(self) -> list[str]:
        return sorted(self._providers)


def default_provider_registry(
    remote_endpoint: str = "", remote_key_env: str = ""
) -> ProviderRegistry:
    registry = ProviderRegistry()
    registry.register(StubProvider())
    if remote_endpoint:
        registry.register(RemoteCsvProvider(endpoint=remote_endpoint, key_env=remote_key_env))
    return registry


def generate_query_table(
    prompt: str,
    rows: int,
    cols: int,
    provider: str = "stub",
    registry: ProviderRegistry | None = None,
) -> Table:
    registry = registry or default_provider_registry()
    table = registry.get(provider).generate(prompt, rows, cols)
    if len(table.rows) * len(table.columns) != rows * cols:
        raise OperationError("provider_error", "provider returned the wrong shape")
    return table
