"""Top-k joinable and unionable table search over a lake.

Joinable search runs on a MinHash index: every lake column gets a K-minima
signature, columns are partitioned by distinct-value cardinality, and each
partition is banded so that a candidate whose containment of the query column
reaches the target threshold collides with the query in at least one band with
useful probability. Harvested candidates are re-scored with a containment
estimate derived from the signature Jaccard; tables are ranked by their best
column.

Unionable search is a linear scan that scores the best one-to-one matching
between the query's columns and a candidate's columns.

Binary index layout (little-endian) in ``join.index.bin``:

    header:  magic ``LFJINDEX`` (8s), version (u16), K (u16), seed (u64),
             partition count (u32), default threshold (f64)
    per partition: lower bound (u32), upper bound (u32), bands (u16),
             rows-per-band (u16), entry count (u32)
    per entry: table_id (u16 length + utf-8), column (u16 length + utf-8),
             cardinality (u32), K minima (u64 each)

A ``join.index.json`` sidecar records the same parameters for inspection.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .align import ColumnProfile, column_similarity
from .errors import InputError
from .tables import Lake, Table, column_values, normalize_value

DEFAULT_K = 128
DEFAULT_PARTITIONS = 8
DEFAULT_THRESHOLD = 0.5
DEFAULT_SEED = 42

INDEX_BIN_NAME = "join.index.bin"
INDEX_JSON_NAME = "join.index.json"

_MAGIC = b"LFJINDEX"
_VERSION = 1

# Signatures of empty columns use this sentinel in every position; they are
# never inserted into banding buckets, so they collide with nothing.
_EMPTY_SENTINEL = np.uint64(0xFFFFFFFFFFFFFFFF)


def _base_hash(value: str) -> int:
    return int.from_bytes(hashlib.blake2b(value.encode("utf-8"), digest_size=8).digest(), "little")


@lru_cache(maxsize=32)
def _hash_params(k: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seed))
    a = rng.integers(1, 1 << 63, size=k, dtype=np.uint64) * np.uint64(2) + np.uint64(1)
    b = rng.integers(0, 1 << 63, size=k, dtype=np.uint64)
    return a, b


@dataclass(frozen=True)
class ColumnSignature:
    table_id: str
    column: str
    cardinality: int
    minima: np.ndarray  # shape (K,), dtype uint64

    @property
    def k(self) -> int:
        return int(self.minima.shape[0])


def minhash_signature(
    values: set[str] | frozenset[str],
    k: int = DEFAULT_K,
    seed: int = DEFAULT_SEED,
    owner: tuple[str, str] = ("", ""),
) -> ColumnSignature:
    """K-minima signature over a set of normalized values.

    Position i holds the minimum of the i-th multiply-shift hash over the set.
    Identical sets always produce identical signatures for a given seed.
    """
    if k < 1:
        raise InputError("bad_k", "signature length must be >= 1")
    a, b = _hash_params(k, seed)
    if not values:
        minima = np.full(k, _EMPTY_SENTINEL, dtype=np.uint64)
    else:
        base = np.fromiter((_base_hash(v) for v in values), dtype=np.uint64, count=len(values))
        # uint64 wraparound is the intended modulus for the multiply-shift family
        grid = a[:, None] * base[None, :] + b[:, None]
        minima = grid.min(axis=1)
    minima.setflags(write=False)
    return ColumnSignature(owner[0], owner[1], len(values), minima)


def estimate_jaccard(sa: ColumnSignature, sb: ColumnSignature) -> float:
    if sa.cardinality == 0 or sb.cardinality == 0:
        return 0.0
    return float(np.count_nonzero(sa.minima == sb.minima)) / sa.k


def containment_to_jaccard(containment: float, q_card: float, x_card: float) -> float:
    """Jaccard of Q and X when |Q ∩ X| = containment * |Q|."""
    inter = containment * q_card
    union = q_card + x_card - inter
    if union <= 0:
        return 0.0
    return inter / union


def estimate_containment(sq: ColumnSignature, sx: ColumnSignature) -> float:
    """Containment of the query set in the candidate set, from signatures.

    Inverts the Jaccard estimate: |Q ∩ X| = J(|Q|+|X|)/(1+J), then divides by
    |Q| and clamps to [0, 1].
    """
    if sq.cardinality == 0:
        raise InputError("empty_query_column", "empty query column")
    if sx.cardinality == 0:
        return 0.0
    j = estimate_jaccard(sq, sx)
    intersection = j * (sq.cardinality + sx.cardinality) / (1.0 + j)
    return min(1.0, max(0.0, intersection / sq.cardinality))


def choose_banding(k: int, j_star: float, target: float) -> tuple[int, int]:
    """Pick (bands, rows) with bands*rows <= k.

    Minimizes |collision probability at j_star - target|; among choices within
    0.01 of the optimum prefers steeper curves (more rows per band), which cut
    false positives and lift recall above the threshold without moving the
    calibration point.
    """
    best: list[tuple[float, int, int]] = []
    for r in range(1, k + 1):
        p_band = j_star**r
        if p_band <= 0.0:
            continue
        for b in range(1, k // r + 1):
            p = 1.0 - (1.0 - p_band) ** b
            best.append((abs(p - target), r, b))
    if not best:
        return (1, k)
    optimum = min(d for d, _, _ in best)
    near = [(d, r, b) for d, r, b in best if d <= optimum + 0.01]
    near.sort(key=lambda e: (-e[1], e[0], -e[2]))
    _, r, b = near[0]
    return (b, r)


@dataclass
class IndexPartition:
    lower: int
    upper: int
    bands: int
    rows: int
    entries: list[ColumnSignature]
    _buckets: dict[tuple[int, int], list[dict[bytes, list[int]]]] = field(
        default_factory=dict, repr=False
    )

    def buckets(self, bands: int, rows: int) -> list[dict[bytes, list[int]]]:
        key = (bands, rows)
        if key not in self._buckets:
            tables: list[dict[bytes, list[int]]] = [{} for _ in range(bands)]
            for idx, sig in enumerate(self.entries):
                if sig.cardinality == 0:
                    continue
                raw = sig.minima.tobytes()
                for band in range(bands):
                    chunk = raw[band * rows * 8 : (band + 1) * rows * 8]
                    tables[band].setdefault(chunk, []).append(idx)
            self._buckets[key] = tables
        return self._buckets[key]


@dataclass
class JoinIndex:
    k: int
    seed: int
    threshold: float
    partitions: list[IndexPartition]

    def column_count(self) -> int:
        return sum(len(p.entries) for p in self.partitions)

    def params_obj(self) -> dict:
        return {
            "k": self.k,
            "seed": self.seed,
            "threshold": self.threshold,
            "partitions": [
                {
                    "lower": p.lower,
                    "upper": p.upper,
                    "bands": p.bands,
                    "rows": p.rows,
                    "columns": len(p.entries),
                }
                for p in self.partitions
            ],
        }


def build_join_index(
    lake: Lake,
    partitions: int = DEFAULT_PARTITIONS,
    threshold: float = DEFAULT_THRESHOLD,
    k: int = DEFAULT_K,
    seed: int = DEFAULT_SEED,
) -> JoinIndex:
    """Signature every lake column and partition by cardinality.

    Partition boundaries are equal-frequency over the sorted cardinalities.
    Each partition's banding is calibrated at the Jaccard corresponding to
    ``threshold`` containment at the partition's upper cardinality bound (the
    query cardinality is unknown offline, so both sides are taken at that
    bound).
    """
    signatures: list[ColumnSignature] = []
    for table_id in lake.table_ids():
        table = lake.load(table_id)
        for column in table.columns:
            values = column_values(table, column)
            signatures.append(minhash_signature(values, k, seed, owner=(table_id, column)))
    signatures.sort(key=lambda s: (s.cardinality, s.table_id, s.column))

    parts: list[IndexPartition] = []
    if signatures:
        n_parts = min(partitions, len(signatures))
        bounds = np.array_split(np.arange(len(signatures)), n_parts)
        for chunk in bounds:
            if len(chunk) == 0:
                continue
            entries = [signatures[i] for i in chunk]
            lower = entries[0].cardinality
            upper = entries[-1].cardinality
            j_star = containment_to_jaccard(threshold, max(upper, 1), max(upper, 1))
            bands, rows = choose_banding(k, j_star, threshold)
            parts.append(IndexPartition(lower, upper, bands, rows, entries))
    return JoinIndex(k=k, seed=seed, threshold=threshold, partitions=parts)


def save_join_index(index: JoinIndex, lake_root: str | Path) -> tuple[Path, Path]:
    root = Path(lake_root)
    parts = [
        struct.pack(
            "<8sHHQId",
            _MAGIC,
            _VERSION,
            index.k,
            index.seed,
            len(index.partitions),
            index.threshold,
        )
    ]
    for p in index.partitions:
        parts.append(struct.pack("<IIHHI", p.lower, p.upper, p.bands, p.rows, len(p.entries)))
        for sig in p.entries:
            tid = sig.table_id.encode("utf-8")
            col = sig.column.encode("utf-8")
            parts.append(struct.pack("<H", len(tid)) + tid)
            parts.append(struct.pack("<H", len(col)) + col)
            parts.append(struct.pack("<I", sig.cardinality))
            parts.append(sig.minima.astype("<u8").tobytes())
    bin_path = root / INDEX_BIN_NAME
    from .jsonio import write_bytes, write_json

    write_bytes(bin_path, b"".join(parts))
    json_path = root / INDEX_JSON_NAME
    write_json(json_path, index.params_obj())
    return bin_path, json_path


def load_join_index(lake_root: str | Path) -> JoinIndex:
    path = Path(lake_root) / INDEX_BIN_NAME
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise InputError("no_index", f"cannot read index {path}: {exc}")
    offset = 0

    def take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        out = struct.unpack_from(fmt, blob, offset)
        offset += size
        return out

    magic, version, k, seed, n_parts, threshold = take("<8sHHQId")
    if magic != _MAGIC or version != _VERSION:
        raise InputError("no_index", f"{path} is not a recognized index file")
    partitions = []
    for _ in range(n_parts):
        lower, upper, bands, rows, count = take("<IIHHI")
        entries = []
        for _ in range(count):
            (tid_len,) = take("<H")
            tid = blob[offset : offset + tid_len].decode("utf-8")
            offset += tid_len
            (col_len,) = take("<H")
            col = blob[offset : offset + col_len].decode("utf-8")
            offset += col_len
            (cardinality,) = take("<I")
            minima = np.frombuffer(blob, dtype="<u8", count=k, offset=offset).astype(np.uint64)
            minima.setflags(write=False)
            offset += k * 8
            entries.append(ColumnSignature(tid, col, cardinality, minima))
        partitions.append(IndexPartition(lower, upper, bands, rows, entries))
    return JoinIndex(k=int(k), seed=int(seed), threshold=float(threshold), partitions=partitions)


@dataclass(frozen=True)
class DiscoveryResult:
    method: str
    query_table_id: str
    query_column: str | None
    k: int
    entries: tuple[tuple[str, float], ...]  # (table_id, score), scores non-increasing
    threshold: float | None = None

    def table_ids(self) -> list[str]:
        return [table_id for table_id, _ in self.entries]

    def to_json_obj(self) -> dict:
        return {
            "method": self.method,
            "query": {"table_id": self.query_table_id, "column": self.query_column},
            "k": self.k,
            "threshold": self.threshold,
            "results": [{"table_id": t, "score": s} for t, s in self.entries],
        }


def _rank(scores: dict[str, float], k: int) -> tuple[tuple[str, float], ...]:
    ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return tuple(ordered[: max(k, 0)])


def query_joinable(
    index: JoinIndex,
    query: Table,
    query_column: str,
    k: int = 10,
    threshold: float | None = None,
) -> DiscoveryResult:
    """Top-k tables holding a column with high containment of the query column.

    Candidates are harvested from colliding buckets across all partitions and
    re-scored with the containment estimator; a table scores as its best
    column. ``threshold`` recalibrates the banding at query time and defaults
    to the index's build threshold. It does not filter the re-scored list.
    """
    values = column_values(query, query_column)
    if not values:
        raise InputError("empty_query_column", "empty query column")
    effective = index.threshold if threshold is None else threshold
    sq = minhash_signature(values, index.k, index.seed, owner=(query.table_id, query_column))
    raw = sq.minima.tobytes()

    table_scores: dict[str, float] = {}
    for partition in index.partitions:
        if effective == index.threshold:
            bands, rows = partition.bands, partition.rows
        else:
            j_star = containment_to_jaccard(
                effective, max(partition.upper, 1), max(partition.upper, 1)
            )
            bands, rows = choose_banding(index.k, j_star, effective)
        buckets = partition.buckets(bands, rows)
        hit: set[int] = set()
        for band in range(bands):
            chunk = raw[band * rows * 8 : (band + 1) * rows * 8]
            hit.update(buckets[band].get(chunk, ()))
        for idx in hit:
            sig = partition.entries[idx]
            if sig.table_id == query.table_id:
                continue
            score = estimate_containment(sq, sig)
            if score > table_scores.get(sig.table_id, -1.0):
                table_scores[sig.table_id] = score

    return DiscoveryResult(
        method="joinable-lsh",
        query_table_id=query.table_id,
        query_column=query_column,
        k=k,
        entries=_rank(table_scores, k),
        threshold=effective,
    )


def exact_containment(query: Table, query_column: str, candidate: Table) -> float:
    """Brute-force containment oracle: best column of the candidate."""
    qv = column_values(query, query_column)
    if not qv:
        raise InputError("empty_query_column", "empty query column")
    best = 0.0
    for column in candidate.columns:
        xv = column_values(candidate, column)
        best = max(best, len(qv & xv) / len(qv))
    return best


def unionability_score(query: Table, candidate: Table) -> float:
    """Best one-to-one column matching weight, normalized by the query width."""
    if not query.columns or not candidate.columns:
        return 0.0
    q_profiles = [ColumnProfile.from_table(query, c) for c in query.columns]
    x_profiles = [ColumnProfile.from_table(candidate, c) for c in candidate.columns]
    weights = np.zeros((len(q_profiles), len(x_profiles)))
    for i, qp in enumerate(q_profiles):
        for j, xp in enumerate(x_profiles):
            weights[i, j] = column_similarity(qp, xp)
    rows, cols = linear_sum_assignment(weights, maximize=True)
    total = float(weights[rows, cols].sum())
    return min(1.0, max(0.0, total / len(q_profiles)))


def query_unionable(lake: Lake, query: Table, k: int = 10) -> DiscoveryResult:
    scores = {
        table_id: unionability_score(query, lake.load(table_id))
        for table_id in lake.table_ids()
        if table_id != query.table_id
    }
    return DiscoveryResult(
        method="unionable-match",
        query_table_id=query.table_id,
        query_column=None,
        k=k,
        entries=_rank(scores, k),
    )


def inner_join_count_score(query: Table, candidate: Table, query_column: str | None = None) -> float:
    """Reference plugin: inner-join row count on the best column pair / |query rows|."""
    if not query.rows:
        return 0.0
    q_columns = [query_column] if query_column else list(query.columns)
    best = 0
    for qc in q_columns:
        qi = query.column_index(qc)
        counts_q: dict[str, int] = {}
        for row in query.rows:
            if not row[qi].is_null:
                key = normalize_value(row[qi].value)
                counts_q[key] = counts_q.get(key, 0) + 1
        for xc in candidate.columns:
            xi = candidate.column_index(xc)
            counts_x: dict[str, int] = {}
            for row in candidate.rows:
                if not row[xi].is_null:
                    key = normalize_value(row[xi].value)
                    counts_x[key] = counts_x.get(key, 0) + 1
            joined = sum(n * counts_x.get(v, 0) for v, n in counts_q.items())
            best = max(best, joined)
    return min(1.0, best / len(query.rows))


@dataclass(frozen=True)
class DiscoveryMethod:
    """Plugin contract: a deterministic pairwise scorer, or a full runner.

    A scorer is applied to every lake table in a linear scan. A runner takes
    over the whole search (used by the index-backed built-in).
    """

    name: str
    scorer: Callable[[Table, Table, str | None], float] | None = None
    runner: Callable[..., DiscoveryResult] | None = None


class MethodRegistry:
    def __init__(self):
        self._methods: dict[str, DiscoveryMethod] = {}

    def register(self, method: DiscoveryMethod) -> None:
        if method.name in self._methods:
            raise InputError("duplicate_method", f"method {method.name!r} already registered")
        if (method.scorer is None) == (method.runner is None):
            raise InputError("bad_method", "method needs exactly one of scorer or runner")
        self._methods[method.name] = method

    def get(self, name: str) -> DiscoveryMethod:
        if name not in self._methods:
            raise InputError("unknown_method", f"unknown discovery method {name!r}")
        return self._methods[name]

    def names(self) -> list[str]:
        return sorted(self._methods)

    def unregister(self, name: str) -> None:
        self._methods.pop(name, None)


def _run_joinable_lsh(
    lake: Lake,
    query: Table,
    query_column: str | None,
    k: int,
    threshold: float | None = None,
    index: JoinIndex | None = None,
    seed: int = DEFAULT_SEED,
) -> DiscoveryResult:
    if query_column is None:
        raise InputError("missing_query_column", "joinable search needs a query column")
    if index is None:
        bin_path = Path(lake.root) / INDEX_BIN_NAME
        if bin_path.exists():
            index = load_join_index(lake.root)
        else:
            index = build_join_index(lake, seed=seed)
    return query_joinable(index, query, query_column, k=k, threshold=threshold)


def _run_unionable(lake: Lake, query: Table, query_column, k, **_) -> DiscoveryResult:
    return query_unionable(lake, query, k=k)


def default_registry() -> MethodRegistry:
    registry = MethodRegistry()
    registry.register(DiscoveryMethod("joinable-lsh", runner=_run_joinable_lsh))
    registry.register(DiscoveryMethod("unionable-match", runner=_run_unionable))
    registry.register(DiscoveryMethod("inner-join-count", scorer=inner_join_count_score))
    return registry


GLOBAL_METHODS = default_registry()


def register_method(method: DiscoveryMethod, registry: MethodRegistry | None = None) -> None:
    (registry or GLOBAL_METHODS).register(method)


def discover_with(
    name: str,
    lake: Lake,
    query: Table,
    query_column: str | None = None,
    k: int = 10,
    registry: MethodRegistry | None = None,
    **kwargs,
) -> DiscoveryResult:
    method = (registry or GLOBAL_METHODS).get(name)
    if method.runner is not None:
        return method.runner(lake, query, query_column, k, **kwargs)
    scores = {
        table_id: method.scorer(query, lake.load(table_id), query_column)
        for table_id in lake.table_ids()
        if table_id != query.table_id
    }
    return DiscoveryResult(
        method=name,
        query_table_id=query.table_id,
        query_column=query_column,
        k=k,
        entries=_rank(scores, k),
    )


def assemble_integration_set(
    lake: Lake,
    results: list[DiscoveryResult],
    query: Table,
    selection: list[str] | None = None,
) -> list[Table]:
    """Union the tables found by all methods, query first, then lexicographic.

    ``selection`` restricts to a subset of the discovered table ids; naming an
    id no method returned is an error.
    """
    discovered = sorted({tid for result in results for tid in result.table_ids()})
    if selection is not None:
        unknown = sorted(set(selection) - set(discovered))
        if unknown:
            raise InputError(
                "selection_unknown_table",
                f"selection references tables not discovered: {unknown}",
            )
        discovered = [tid for tid in discovered if tid in set(selection)]
    tables = [query]
    for tid in discovered:
        if tid != query.table_id:
            tables.append(lake.load(tid))
    return tables
