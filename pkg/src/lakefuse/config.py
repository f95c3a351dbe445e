"""Service/CLI configuration: a flat file of ``key = value`` lines.

Blank lines and ``#`` comments are ignored. Unknown keys are rejected so
typos fail fast.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import InputError


@dataclass
class Config:
    lake_root: str = "."
    state_root: str = "./state"
    minhash_k: int = 128
    partitions: int = 8
    threshold: float = 0.5
    seed: int = 42
    tau: float = 0.5
    row_limit: int = 100_000
    er_threshold: float = 0.85
    provider_endpoint: str = ""
    provider_key_env: str = ""
    host: str = "127.0.0.1"
    port: int = 8765


_INT_KEYS = {"minhash_k", "partitions", "seed", "row_limit", "port"}
_FLOAT_KEYS = {"threshold", "tau", "er_threshold"}


def parse_config(text: str) -> Config:
    known = {f.name for f in fields(Config)}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError("bad_config", f"config line {lineno} is not 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise InputError("bad_config", f"unknown config key {key!r} (line {lineno})")
        try:
            if key in _INT_KEYS:
                values[key] = int(value)
            elif key in _FLOAT_KEYS:
                values[key] = float(value)
            else:
                values[key] = value
        except ValueError:
            raise InputError("bad_config", f"bad value for {key!r} on line {lineno}: {value!r}")
    return Config(**values)


def load_config(path: str | Path) -> Config:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError("bad_config", f"cannot read config {path}: {exc}")
    return parse_config(text)
