"""HTTP facade over the pipeline with persisted sessions.

All endpoints speak JSON; errors come back as ``{code, message, stage}``.
The query table arrives either as a raw ``text/csv`` body (or multipart file
field ``file``), or as a JSON prompt for the table generator.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .analyze import AnalysisSpec
from .config import Config
from .errors import EngineError, InputError
from .session import SessionStore
from .tables import Lake, load_lake

_STATUS_BY_CODE = {
    "unknown_session": 404,
    "unknown_table": 404,
    "unknown_method": 404,
    "unknown_operator": 404,
    "unknown_operator_result": 404,
    "stage_order": 409,
}


class DiscoverRequest(BaseModel):
    method: str
    k: int = 10
    query_column: str | None = None
    threshold: float | None = None


class SelectionRequest(BaseModel):
    table_ids: list[str]


class AlignRequest(BaseModel):
    tau: float | None = None


class MappingRequest(BaseModel):
    mapping: dict[str, list[list[str]]]


class IntegrateRequest(BaseModel):
    operator: str = "fd"


class AnalyzeRequest(BaseModel):
    kind: str
    group_by: list[str] = []
    measure: str | None = None
    func: str | None = None
    x: str | None = None
    y: str | None = None
    threshold: float = 0.85
    operator: str | None = None


class GenerateRequest(BaseModel):
    prompt: str
    rows: int
    cols: int
    provider: str = "stub"


def create_app(config: Config, lake: Lake | None = None, store: SessionStore | None = None) -> FastAPI:
    lake = lake if lake is not None else load_lake(config.lake_root)
    store = store or SessionStore(Path(config.state_root) / "sessions", lake, config)
    app = FastAPI(title="lakefuse", version="0.1.0")
    app.state.store = store
    app.state.lake = lake

    @app.exception_handler(EngineError)
    async def engine_error_handler(_: Request, exc: EngineError):
        status = _STATUS_BY_CODE.get(exc.code, 400 if isinstance(exc, InputError) else 500)
        return JSONResponse(status_code=status, content=exc.to_json_obj())

    @app.post("/sessions")
    def create_session():
        session = store.create()
        return session.describe()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return store.get(session_id).describe()

    @app.post("/sessions/{session_id}/query-table")
    async def set_query_table(session_id: str, request: Request):
        session = store.get(session_id)
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("application/json"):
            body = GenerateRequest(**(await request.json()))
            return session.generate_query(body.prompt, body.rows, body.cols, body.provider)
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("file")
            if upload is None:
                raise InputError("bad_upload", "multipart upload needs a 'file' field")
            text = (await upload.read()).decode("utf-8")
            return session.set_query_csv(text)
        raw = await request.body()
        if not raw:
            raise InputError("bad_upload", "send CSV text or a JSON generation request")
        return session.set_query_csv(raw.decode("utf-8"))

    @app.post("/sessions/{session_id}/discover")
    def discover(session_id: str, body: DiscoverRequest):
        return store.get(session_id).run_discover(
            body.method, k=body.k, query_column=body.query_column, threshold=body.threshold
        )

    @app.post("/sessions/{session_id}/selection")
    def selection(session_id: str, body: SelectionRequest):
        return store.get(session_id).set_selection(body.table_ids)

    @app.post("/sessions/{session_id}/align")
    def align(session_id: str, body: AlignRequest):
        return store.get(session_id).run_align(body.tau)

    @app.put("/sessions/{session_id}/mapping")
    def put_mapping(session_id: str, body: MappingRequest):
        return store.get(session_id).put_mapping(body.mapping)

    @app.post("/sessions/{session_id}/integrate")
    def integrate(session_id: str, body: IntegrateRequest):
        return store.get(session_id).run_integrate(body.operator)

    @app.post("/sessions/{session_id}/analyze")
    def analyze(session_id: str, body: AnalyzeRequest):
        spec = AnalysisSpec.from_json_obj(body.model_dump(exclude={"operator"}))
        return store.get(session_id).run_analyze(spec, operator=body.operator)

    @app.get("/methods")
    def methods():
        return {"methods": store.methods.names()}

    @app.get("/operators")
    def operators():
        return {"operators": store.operators.names()}

    @app.get("/lake/tables")
    def lake_tables():
        return {
            "tables": [
                {
                    "table_id": e.table_id,
                    "rows": e.rows,
                    "cols": e.cols,
                }
                for e in sorted(lake.entries.values(), key=lambda e: e.table_id)
            ],
            "warnings": lake.warnings,
        }

    @app.get("/lake/tables/{table_id:path}/preview")
    def preview(table_id: str, rows: int = 10):
        table = lake.load(table_id)
        return {
            "table_id": table_id,
            "columns": list(table.columns),
            "total_rows": len(table.rows),
            "rows": [
                [{"value": c.value, "kind": c.kind.value} for c in row]
                for row in table.rows[: max(rows, 0)]
            ],
        }

    return app


def serve(config: Config) -> None:
    import uvicorn

    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")
