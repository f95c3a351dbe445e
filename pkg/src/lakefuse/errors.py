"""Error types shared by the engine, the CLI, and the HTTP service."""

from __future__ import annotations


class EngineError(Exception):
    """Base error carrying a stable machine-readable code.

    ``stage`` names the pipeline stage the error belongs to, when known
    (query, discover, align, integrate, analyze).
    """

    def __init__(self, code: str, message: str, stage: str | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.stage = stage

    def to_json_obj(self) -> dict:
        return {"code": self.code, "message": self.message, "stage": self.stage}


class InputError(EngineError):
    """Caller mistake: bad paths, unknown names, malformed requests. CLI exit 1."""


class OperationError(EngineError):
    """Engine-level failure such as an exceeded row limit. CLI exit 2."""
