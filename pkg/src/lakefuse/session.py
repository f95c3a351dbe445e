"""Persisted pipeline sessions.

A session is a directory of JSON and CSV artifacts under the state root. Each
stage's output is written atomically before ``session.json`` records the stage
as complete, so a restart always resumes from the last fully persisted stage.
Stages advance forward (query -> discover -> align -> integrate -> analyze);
re-running an earlier stage discards everything downstream. Discovery is
optional: an explicit selection of lake tables forms the integration set
directly.

Requests to one session are serialized by a per-session lock; distinct
sessions are fully independent.
"""

from __future__ import annotations

import datetime as _dt
import shutil
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path

from . import discovery as disc
from . import integrate as integ
from .align import IntegrationMapping, assign_integration_ids, mapping_from_json_obj
from .analyze import AnalysisSpec, run_analysis
from .config import Config
from .errors import InputError
from .jsonio import read_json, write_json, write_text
from .tables import Lake, Table, load_table_from_text, table_to_csv_text
from .textgen import ProviderRegistry, default_provider_registry, generate_query_table

STAGES = ("query", "discover", "align", "integrate", "analyze")

SESSION_FILE = "session.json"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _stage_index(stage: str) -> int:
    return STAGES.index(stage)


@dataclass
class SessionPaths:
    root: Path

    @property
    def meta(self) -> Path:
        return self.root / SESSION_FILE

    @property
    def query_csv(self) -> Path:
        return self.root / "query.csv"

    def results_json(self, method: str) -> Path:
        return self.root / f"results.{method}.json"

    @property
    def selection_json(self) -> Path:
        return self.root / "selection.json"

    @property
    def mapping_json(self) -> Path:
        return self.root / "mapping.json"

    def integrated_csv(self, operator: str) -> Path:
        return self.root / f"integrated.{operator}.csv"

    def analysis_json(self, index: int) -> Path:
        return self.root / f"analysis.{index}.json"


class Session:
    def __init__(self, store: "SessionStore", session_id: str):
        self.store = store
        self.session_id = session_id
        self.paths = SessionPaths(store.root / session_id)
        self.lock = threading.Lock()

    # --- persistence -----------------------------------------------------

    def _meta(self) -> dict:
        if not self.paths.meta.exists():
            raise InputError("unknown_session", f"no session {self.session_id!r}")
        return read_json(self.paths.meta)

    def _write_meta(self, meta: dict) -> None:
        meta["updated_at"] = _now()
        write_json(self.paths.meta, meta)

    def _require_stage(self, meta: dict, needed: str, attempting: str) -> None:
        done = meta.get("stages_done", [])
        if needed not in done:
            raise InputError(
                "stage_order",
                f"stage {attempting!r} requires completed stage {needed!r}",
                stage=attempting,
            )

    def _discard_from(self, meta: dict, stage: str) -> None:
        """Reset stage `stage` and everything after it."""
        cut = _stage_index(stage)
        kept = [s for s in meta.get("stages_done", []) if _stage_index(s) < cut]
        meta["stages_done"] = kept
        if cut <= _stage_index("discover"):
            for method in list(meta.get("discoveries", {})):
                self.paths.results_json(method).unlink(missing_ok=True)
            meta["discoveries"] = {}
            self.paths.selection_json.unlink(missing_ok=True)
            meta.pop("selection", None)
        if cut <= _stage_index("align"):
            self.paths.mapping_json.unlink(missing_ok=True)
            meta.pop("mapping_warnings", None)
            meta.pop("integration_set", None)
        if cut <= _stage_index("integrate"):
            for op in list(meta.get("integrations", {})):
                path = self.paths.integrated_csv(op)
                path.unlink(missing_ok=True)
                Path(str(path) + ".lineage.json").unlink(missing_ok=True)
            meta["integrations"] = {}
        if cut <= _stage_index("analyze"):
            for i in range(meta.get("analysis_count", 0)):
                self.paths.analysis_json(i).unlink(missing_ok=True)
            meta["analysis_count"] = 0

    def _mark_done(self, meta: dict, stage: str) -> None:
        done = set(meta.get("stages_done", []))
        done.add(stage)
        meta["stages_done"] = sorted(done, key=_stage_index)
        meta["stage"] = meta["stages_done"][-1]

    # --- stage operations -------------------------------------------------

    def create(self) -> dict:
        self.paths.root.mkdir(parents=True, exist_ok=True)
        meta = {
            "session_id": self.session_id,
            "created_at": _now(),
            "stage": "new",
            "stages_done": [],
            "discoveries": {},
            "integrations": {},
            "analysis_count": 0,
        }
        self._write_meta(meta)
        return meta

    def set_query_csv(self, csv_text: str) -> dict:
        with self.lock:
            meta = self._meta()
            table = load_table_from_text(csv_text, header_mode="auto", table_id="query.csv")
            self._discard_from(meta, "query")
            write_text(self.paths.query_csv, table_to_csv_text(table))
            meta["query"] = {
                "table_id": table.table_id,
                "columns": list(table.columns),
                "rows": len(table.rows),
                "source": "upload",
            }
            self._mark_done(meta, "query")
            self._write_meta(meta)
            return meta

    def generate_query(self, prompt: str, rows: int, cols: int, provider: str = "stub") -> dict:
        with self.lock:
            meta = self._meta()
            table = generate_query_table(
                prompt, rows, cols, provider=provider, registry=self.store.providers
            )
            self._discard_from(meta, "query")
            write_text(self.paths.query_csv, table_to_csv_text(table))
            meta["query"] = {
                "table_id": "query.csv",
                "columns": list(table.columns),
                "rows": len(table.rows),
                "source": f"generated:{provider}",
                "prompt": prompt,
            }
            self._mark_done(meta, "query")
            self._write_meta(meta)
            return meta

    def query_table(self) -> Table:
        meta = self._meta()
        if "query" not in meta:
            raise InputError("stage_order", "session has no query table yet", stage="query")
        text = self.paths.query_csv.read_text(encoding="utf-8")
        return load_table_from_text(text, header_mode="present", table_id="query.csv")

    def run_discover(
        self,
        method: str,
        k: int = 10,
        query_column: str | None = None,
        threshold: float | None = None,
    ) -> dict:
        with self.lock:
            meta = self._meta()
            self._require_stage(meta, "query", "discover")
            query = self.query_table()
            kwargs = {}
            if method == "joinable-lsh":
                kwargs = {"threshold": threshold, "seed": self.store.config.seed}
            result = disc.discover_with(
                method,
                self.store.lake,
                query,
                query_column=query_column,
                k=k,
                registry=self.store.methods,
                **kwargs,
            )
            self._discard_from(meta, "align")
            write_json(self.paths.results_json(method), result.to_json_obj())
            meta.setdefault("discoveries", {})[method] = result.to_json_obj()
            self._mark_done(meta, "discover")
            self._write_meta(meta)
            payload = result.to_json_obj()
            if not result.entries:
                payload["hint"] = (
                    "no tables matched; try another method, another query column, or a larger k"
                )
            return payload

    def set_selection(self, table_ids: list[str]) -> dict:
        """Choose the integration set: a subset of discovered tables, or any
        lake tables directly when discovery was skipped."""
        with self.lock:
            meta = self._meta()
            self._require_stage(meta, "query", "selection")
            discovered: set[str] = set()
            for obj in meta.get("discoveries", {}).values():
                discovered.update(r["table_id"] for r in obj["results"])
            universe = discovered if discovered else set(self.store.lake.table_ids())
            unknown = sorted(set(table_ids) - universe)
            if unknown:
                raise InputError(
                    "selection_unknown_table",
                    f"selection references unavailable tables: {unknown}",
                    stage="discover",
                )
            self._discard_from(meta, "align")
            meta["selection"] = sorted(set(table_ids))
            write_json(self.paths.selection_json, {"table_ids": meta["selection"]})
            self._mark_done(meta, "discover")
            self._write_meta(meta)
            return meta

    def _integration_set(self, meta: dict) -> list[Table]:
        query = self.query_table()
        if "selection" in meta:
            ids = meta["selection"]
        else:
            ids = sorted(
                {
                    r["table_id"]
                    for obj in meta.get("discoveries", {}).values()
                    for r in obj["results"]
                }
            )
        if not ids:
            raise InputError(
                "empty_set",
                "no integration set: run discovery or post a selection first",
                stage="align",
            )
        tables = [query]
        for tid in ids:
            if tid != query.table_id:
                tables.append(self.store.lake.load(tid))
        return tables

    def run_align(self, tau: float | None = None) -> dict:
        with self.lock:
            meta = self._meta()
            self._require_stage(meta, "query", "align")
            tables = self._integration_set(meta)
            mapping, warnings = assign_integration_ids(
                tables, tau if tau is not None else self.store.config.tau
            )
            self._discard_from(meta, "integrate")
            write_json(self.paths.mapping_json, mapping.to_json_obj())
            meta["integration_set"] = [t.table_id for t in tables]
            meta["mapping_warnings"] = warnings
            self._mark_done(meta, "align")
            self._write_meta(meta)
            return {
                "mapping": mapping.to_json_obj(),
                "warnings": warnings,
                "integration_set": meta["integration_set"],
            }

    def put_mapping(self, mapping_obj: dict) -> dict:
        with self.lock:
            meta = self._meta()
            self._require_stage(meta, "query", "mapping")
            tables = self._integration_set(meta)
            mapping = mapping_from_json_obj(mapping_obj, tables)
            self._discard_from(meta, "integrate")
            write_json(self.paths.mapping_json, mapping.to_json_obj())
            meta["integration_set"] = [t.table_id for t in tables]
            meta["mapping_warnings"] = []
            self._mark_done(meta, "align")
            self._write_meta(meta)
            return {"mapping": mapping.to_json_obj(), "warnings": []}

    def _mapping(self, meta: dict, tables: list[Table]) -> IntegrationMapping:
        if not self.paths.mapping_json.exists():
            raise InputError("stage_order", "align the integration set first", stage="integrate")
        return mapping_from_json_obj(read_json(self.paths.mapping_json), tables)

    def run_integrate(self, operator: str = "fd") -> dict:
        with self.lock:
            meta = self._meta()
            self._require_stage(meta, "align", "integrate")
            tables = self._integration_set(meta)
            mapping = self._mapping(meta, tables)
            result = integ.integrate_with(operator, tables, mapping, self.store.operators)
            integ.save_integrated(result, self.paths.integrated_csv(operator))
            meta.setdefault("integrations", {})[operator] = {
                "columns": list(result.columns),
                "rows": len(result.rows),
            }
            self._mark_done(meta, "integrate")
            self._write_meta(meta)
            return self._grid_payload(operator, result)

    def _grid_payload(self, operator: str, result: integ.IntegratedTable) -> dict:
        return {
            "operator": operator,
            "columns": list(result.columns),
            "rows": [
                {
                    "cells": [
                        {"value": c.value, "kind": c.kind.value} for c in row.cells
                    ],
                    "origins": sorted([t, r] for t, r in row.origins),
                }
                for row in result.rows
            ],
        }

    def integrated(self, operator: str) -> integ.IntegratedTable:
        path = self.paths.integrated_csv(operator)
        if not path.exists():
            raise InputError(
                "unknown_operator_result",
                f"session has no integrated table for operator {operator!r}",
                stage="analyze",
            )
        return integ.load_integrated(path)

    def run_analyze(self, spec: AnalysisSpec, operator: str | None = None) -> dict:
        with self.lock:
            meta = self._meta()
            self._require_stage(meta, "integrate", "analyze")
            integrations = meta.get("integrations", {})
            if operator is None:
                if len(integrations) == 1:
                    operator = next(iter(integrations))
                elif "fd" in integrations:
                    operator = "fd"
                else:
                    raise InputError(
                        "bad_spec",
                        f"specify 'operator'; session has {sorted(integrations)}",
                        stage="analyze",
                    )
            table = self.integrated(operator)
            payload = run_analysis(table, spec)
            payload["operator"] = operator
            index = meta.get("analysis_count", 0)
            write_json(self.paths.analysis_json(index), payload)
            meta["analysis_count"] = index + 1
            self._mark_done(meta, "analyze")
            self._write_meta(meta)
            return payload

    def describe(self) -> dict:
        meta = self._meta()
        out = dict(meta)
        out["analyses"] = []
        for i in range(meta.get("analysis_count", 0)):
            path = self.paths.analysis_json(i)
            if path.exists():
                out["analyses"].append(read_json(path))
        grids = {}
        for op in meta.get("integrations", {}):
            path = self.paths.integrated_csv(op)
            if path.exists():
                grids[op] = self._grid_payload(op, integ.load_integrated(path))
        out["integration_grids"] = grids
        if self.paths.mapping_json.exists():
            out["mapping"] = read_json(self.paths.mapping_json)
        return out


class SessionStore:
    def __init__(
        self,
        root: str | Path,
        lake: Lake,
        config: Config | None = None,
        methods: disc.MethodRegistry | None = None,
        operators: integ.OperatorRegistry | None = None,
        providers: ProviderRegistry | None = None,
    ):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.lake = lake
        self.config = config or Config()
        self.methods = methods or disc.default_registry()
        self.operators = operators or integ.default_operator_registry()
        self.providers = providers or default_provider_registry(
            self.config.provider_endpoint, self.config.provider_key_env
        )
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self) -> Session:
        session_id = uuid.uuid4().hex[:12]
        session = Session(self, session_id)
        session.create()
        with self._lock:
            self._sessions[session_id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                candidate = Session(self, session_id)
                if not candidate.paths.meta.exists():
                    raise InputError("unknown_session", f"no session {session_id!r}")
                self._sessions[session_id] = candidate
            return self._sessions[session_id]

    def drop(self, session_id: str) -> None:
        with self._lock:
            self._sessions.pop(session_id, None)
        shutil.rmtree(self.root / session_id, ignore_errors=True)
