from __future__ import annotations

from typing import Dict, Optional


class SodlabError(Exception):
    pass


class GeometryError(SodlabError, ValueError):
    """A predicate was called outside its precondition (point off plane, q == p, ...)."""


class SceneError(SodlabError, ValueError):
    pass


class SceneParseError(SceneError):
    def __init__(self, message: str, field: str = "", line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(field)
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class InvariantViolation(SodlabError, RuntimeError):
    """A guarantee of the theory failed on concrete data."""

    def __init__(self, message: str, details: Optional[Dict] = None):
        super().__init__(message)
        self.details = details or {}

    def to_dict(self) -> Dict:
        return {"error": type(self).__name__, "message": str(self), "details": self.details}


class BoundViolation(InvariantViolation):
    pass
