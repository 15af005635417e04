"""FastAPI application exposing the engine over HTTP.

Endpoints wrap the core package directly: template instantiation, dataset
evaluation, collection runs (executed synchronously), offline trace
replay, and cache inspection for completed runs.
"""

from __future__ import annotations

import tempfile
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, Response

from .. import __version__
from ..cache import ArtifactCache
from ..config import config_from_dict
from ..errors import CacheNotFoundError, ConfigError, ValidationError, WebcrewError
from ..orchestrator import RunOutcome, replay as replay_trace, run as run_engine
from ..bench.metrics import compare
from ..bench.records import GroundTruth, RECORD_SCHEMAS, infer_schema
from ..bench.templates import TEMPLATES, instantiate_template
from .schemas import (
    AttributeCountsModel,
    CacheEntryModel,
    CacheListResponse,
    EvalRequest,
    EvalResponse,
    HealthResponse,
    InstantiateRequest,
    InstantiateResponse,
    ReplayRequest,
    ReplayResponse,
    RunRequest,
    RunSummary,
    RunsListResponse,
    TemplateInfo,
)


class _RunRegistry:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._runs: dict[str, RunOutcome] = {}

    def add(self, outcome: RunOutcome) -> str:
        run_id = "run-" + uuid.uuid4().hex[:10]
        with self._lock:
            self._runs[run_id] = outcome
        return run_id

    def get(self, run_id: str) -> RunOutcome:
        with self._lock:
            outcome = self._runs.get(run_id)
        if outcome is None:
            raise HTTPException(status_code=404, detail=f"unknown run: {run_id}")
        return outcome

    def items(self) -> list[tuple[str, RunOutcome]]:
        with self._lock:
            return list(self._runs.items())


def _summary(run_id: str, outcome: RunOutcome) -> RunSummary:
    return RunSummary(
        run_id=run_id,
        phase=outcome.state.phase.value,
        rounds=outcome.state.round,
        last_error=outcome.state.last_error,
        output_dir=str(outcome.output_dir),
        trace_path=str(outcome.trace_path),
        dataset_path=str(outcome.dataset_path) if outcome.dataset_path else None,
        dataset_records=len(outcome.records),
        report=outcome.accounting,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="webcrew", version=__version__)
    registry = _RunRegistry()

    @app.get("/healthz", response_model=HealthResponse)
    def healthz() -> HealthResponse:
        return HealthResponse(version=__version__)

    @app.get("/templates", response_model=list[TemplateInfo])
    def templates() -> list[TemplateInfo]:
        return [
            TemplateInfo(
                id=t.id,
                pattern=t.pattern,
                domain=t.domain,
                record_schema=t.record_schema,
                placeholders=t.placeholder_names,
            )
            for t in TEMPLATES.values()
        ]

    @app.post("/templates/instantiate", response_model=InstantiateResponse)
    def instantiate(req: InstantiateRequest) -> InstantiateResponse:
        template = TEMPLATES.get(req.template)
        if template is None:
            raise HTTPException(status_code=404, detail=f"unknown template: {req.template}")
        try:
            instruction = instantiate_template(template, req.bindings)
        except WebcrewError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return InstantiateResponse(template=req.template, instruction=instruction)

    @app.post("/eval", response_model=EvalResponse)
    def evaluate(req: EvalRequest) -> EvalResponse:
        try:
            if req.record_schema is not None:
                schema = RECORD_SCHEMAS.get(req.record_schema)
                if schema is None:
                    raise HTTPException(
                        status_code=404, detail=f"unknown schema: {req.record_schema}"
                    )
            else:
                schema = infer_schema(req.truth, req.key)
            truth = GroundTruth(records=tuple(req.truth), schema=schema, key_attribute=req.key)
            report = compare(req.collected, truth, average=req.average)
        except (WebcrewError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return EvalResponse(
            precision=report.precision,
            recall=report.recall,
            f1=report.f1,
            matched_units=report.matched_units,
            collected_units=report.collected_units,
            truth_units=report.truth_units,
            average=report.average,
            degenerate=report.degenerate,
            notes=list(report.notes),
            per_attribute={
                name: AttributeCountsModel(
                    matched=c.matched, collected=c.collected, truth=c.truth
                )
                for name, c in report.per_attribute.items()
            },
        )

    @app.post("/runs", response_model=RunSummary)
    def start_run(req: RunRequest) -> RunSummary:
        try:
            config = config_from_dict(req.config)
            outcome = run_engine(config)
        except (ConfigError, ValidationError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except WebcrewError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        run_id = registry.add(outcome)
        return _summary(run_id, outcome)

    @app.get("/runs", response_model=RunsListResponse)
    def list_runs() -> RunsListResponse:
        return RunsListResponse(runs=[_summary(rid, o) for rid, o in registry.items()])

    @app.get("/runs/{run_id}", response_model=RunSummary)
    def get_run(run_id: str) -> RunSummary:
        return _summary(run_id, registry.get(run_id))

    @app.get("/runs/{run_id}/trace", response_class=PlainTextResponse)
    def get_trace(run_id: str) -> str:
        outcome = registry.get(run_id)
        return outcome.trace_path.read_text(encoding="utf-8")

    @app.get("/runs/{run_id}/cache", response_model=CacheListResponse)
    def list_cache(run_id: str) -> CacheListResponse:
        outcome = registry.get(run_id)
        cache = ArtifactCache(outcome.output_dir / "cache")
        return CacheListResponse(
            run_id=run_id,
            entries=[
                CacheEntryModel(
                    id=e.id,
                    media_type=e.media_type,
                    byte_length=e.byte_length,
                    description=e.description,
                    origin=e.origin,
                    stored_at=e.stored_at,
                )
                for e in cache.list_entries()
            ],
        )

    @app.get("/runs/{run_id}/cache/{cache_id}")
    def get_artifact(run_id: str, cache_id: str) -> Response:
        outcome = registry.get(run_id)
        cache = ArtifactCache(outcome.output_dir / "cache")
        try:
            artifact = cache.retrieve(cache_id)
        except CacheNotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return Response(content=artifact.data, media_type=artifact.media_type)

    @app.post("/replay", response_model=ReplayResponse)
    def replay(req: ReplayRequest) -> ReplayResponse:
        if (req.trace is None) == (req.trace_path is None):
            raise HTTPException(
                status_code=400, detail="provide exactly one of trace, trace_path"
            )
        scratch: Path | None = None
        if req.trace_path is not None:
            path = Path(req.trace_path)
            if not path.is_file():
                raise HTTPException(status_code=404, detail=f"no trace at {path}")
        else:
            tmp = tempfile.NamedTemporaryFile(
                "w", suffix=".jsonl", delete=False, encoding="utf-8"
            )
            tmp.write(req.trace or "")
            tmp.close()
            path = scratch = Path(tmp.name)
        try:
            report = replay_trace(path)
        finally:
            if scratch is not None:
                scratch.unlink(missing_ok=True)
        return ReplayResponse(
            ok=report.ok,
            edges=report.edges,
            messages=report.messages,
            contexts_rendered=report.contexts_rendered,
            violations=list(report.violations),
        )

    return app
