"""
Common Schemas
==============

Shared Pydantic base classes used by config and report schemas.
"""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field


class StrictSchema(BaseModel):
    """Immutable schema that rejects unknown keys."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class ReportSchema(BaseModel):
    """Base for report payloads serialized into the manifest."""

    model_config = ConfigDict(extra="forbid")


class ErrorDetail(ReportSchema):
    """Error detail structure recorded for failed runs."""

    code: str
    message: str
    field: Optional[str] = None
    extra: dict[str, Any] = Field(default_factory=dict)
