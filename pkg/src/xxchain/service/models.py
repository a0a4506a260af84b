"""Pydantic request/response models for the experiment service."""

from __future__ import annotations

from typing import Union

from pydantic import BaseModel, Field

ConfigValue = Union[int, float, str, list[Union[int, float, str]]]


class RunRequest(BaseModel):
    """One experiment execution request."""

    subcommand: str = Field(..., description="Experiment driver name, e.g. 'cnot'")
    config: dict[str, ConfigValue] = Field(
        default_factory=dict, description="Flat key = value overrides"
    )
    threads: int = Field(default=1, ge=1, le=64, description="Worker thread budget")


class TableResponse(BaseModel):
    """Result table: header metadata plus named real columns."""

    subcommand: str
    meta: dict[str, str]
    columns: list[str]
    rows: list[list[float]]


class SubcommandInfo(BaseModel):
    name: str
    defaults: dict[str, ConfigValue]


class ErrorResponse(BaseModel):
    error: str
    detail: str = ""
