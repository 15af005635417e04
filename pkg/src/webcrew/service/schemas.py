"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class TemplateInfo(BaseModel):
    id: str
    pattern: str
    domain: str
    record_schema: str
    placeholders: list[str]


class InstantiateRequest(BaseModel):
    template: str
    bindings: dict[str, str] = Field(default_factory=dict)


class InstantiateResponse(BaseModel):
    template: str
    instruction: str


class AttributeCountsModel(BaseModel):
    matched: int
    collected: int
    truth: int


class EvalRequest(BaseModel):
    collected: list[dict[str, Any]]
    truth: list[dict[str, Any]]
    key: str
    record_schema: str | None = None  # name in the registry; inferred when omitted
    average: str = "micro"


class EvalResponse(BaseModel):
    precision: float
    recall: float
    f1: float
    matched_units: int
    collected_units: int
    truth_units: int
    average: str
    degenerate: bool
    notes: list[str]
    per_attribute: dict[str, AttributeCountsModel]


class RunRequest(BaseModel):
    config: dict[str, Any]


class RunSummary(BaseModel):
    run_id: str
    phase: str
    rounds: int
    last_error: str | None
    output_dir: str
    trace_path: str
    dataset_path: str | None
    dataset_records: int
    report: dict[str, Any]


class RunsListResponse(BaseModel):
    runs: list[RunSummary]


class ReplayRequest(BaseModel):
    trace: str | None = None  # raw JSONL text
    trace_path: str | None = None


class ReplayResponse(BaseModel):
    ok: bool
    edges: int
    messages: int
    contexts_rendered: int
    violations: list[str]


class CacheEntryModel(BaseModel):
    id: str
    media_type: str
    byte_length: int
    description: str
    origin: str
    stored_at: int


class CacheListResponse(BaseModel):
    run_id: str
    entries: list[CacheEntryModel]
