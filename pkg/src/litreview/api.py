"""HTTP JSON API backing the browser frontend and remote callers.

All responses carry a version field; all errors use the envelope
{code, stage, message}. The service holds one gateway and one run store;
artifacts written here are the same files the CLI writes.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .errors import LitReviewError, MalformedPlan, PlanMissing, StageError
from .gateway import LlmGateway
from .pipeline import RunConfig, RunStore, compute_run_id, pipeline_generate, pipeline_retrieve
from .plans import CitationKey, derive_plan_from_ground_truth, parse_plan, render_plan
from .records import PaperRecord, QueryAbstract

API_VERSION = "1"


class RetrieveOptions(BaseModel):
    rerank_strategy: Optional[str] = None
    pool_target: Optional[int] = None
    query_count: Optional[int] = None
    sort: str = "relevance"  # relevance | citation_count | year


class RetrieveBody(BaseModel):
    abstract: str
    publication_date: Optional[str] = None
    options: RetrieveOptions = RetrieveOptions()


class GenerateBody(BaseModel):
    abstract: str
    paper_ids: list[str]
    strategy: str = "zero_shot"
    plan: Optional[str] = None
    run_id: Optional[str] = None
    idempotency_key: Optional[str] = None


class DerivePlanBody(BaseModel):
    gt_text: str
    num_keys: int


def _error(code: int, stage: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=code,
                        content={"code": code, "stage": stage, "message": message})


def _candidate_view(record: PaperRecord, evidence: dict) -> dict:
    return {
        "paper_id": record.paper_id,
        "title": record.title,
        "abstract": record.abstract,
        "publication_date": record.publication_date.isoformat(),
        "external_ids": record.external_ids,
        "citation_count": (record.raw or {}).get("citation_count",
                                                 (record.raw or {}).get("citationCount")),
        "evidence": evidence,
    }


def _apply_sort(views: list[dict], sort: str) -> tuple[list[dict], bool]:
    """Optional citation-count/year sorting, degrading to relevance order."""
    if sort == "citation_count":
        if any(v["citation_count"] is not None for v in views):
            return sorted(views, key=lambda v: -(v["citation_count"] or 0)), False
        return views, True
    if sort == "year":
        return sorted(views, key=lambda v: v["publication_date"], reverse=True), False
    return views, False


def create_app(cfg: RunConfig, *, gateway: Optional[LlmGateway] = None,
               store: Optional[RunStore] = None,
               static_dir: Optional[Path] = None) -> FastAPI:
    app = FastAPI(title="litreview service")
    gateway = gateway or cfg.build_gateway()
    store = store or RunStore(cfg.runs_dir)

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(422, "request", str(exc.errors()))

    @app.exception_handler(StageError)
    async def on_stage_error(request: Request, exc: StageError):
        return _error(500, exc.stage, str(exc.cause))

    @app.exception_handler(LitReviewError)
    async def on_domain_error(request: Request, exc: LitReviewError):
        code = 422 if isinstance(exc, (MalformedPlan, PlanMissing)) else 500
        return _error(code, "service", str(exc))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": API_VERSION}

    @app.post("/retrieve")
    def retrieve(body: RetrieveBody):
        from datetime import date

        options = body.options
        effective = cfg
        overrides = {}
        if options.rerank_strategy:
            overrides["rerank_strategy"] = options.rerank_strategy
        if options.pool_target:
            overrides["pool_target"] = options.pool_target
        if options.query_count:
            overrides["query_count"] = options.query_count
        if overrides:
            import dataclasses
            effective = dataclasses.replace(cfg, **overrides)
        abstract = QueryAbstract(
            text=body.abstract,
            publication_date=date.fromisoformat(body.publication_date)
            if body.publication_date else date.today(),
        )
        ranked, pool, run_id = pipeline_retrieve(abstract, effective, gateway=gateway, store=store)
        by_id = {p.paper_id: p for p in pool.candidates}
        views = [_candidate_view(by_id[pid], ranked.evidence[pid].to_json())
                 for pid in ranked.ordering]
        views, degraded = _apply_sort(views, options.sort)
        return {
            "version": API_VERSION,
            "run_id": run_id,
            "query_id": ranked.query_id,
            "strategy": ranked.strategy,
            "sort": "relevance" if degraded else options.sort,
            "sort_degraded": degraded,
            "candidates": views,
            "report": pool.report.to_json() if pool.report else None,
        }

    @app.post("/generate")
    def generate_review(body: GenerateBody):
        from datetime import date

        if body.idempotency_key and body.run_id:
            idem = store.idempotency_path(body.run_id, body.idempotency_key)
            if idem.is_file():
                return json.loads(idem.read_text(encoding="utf-8"))
        if not body.paper_ids:
            return _error(422, "generate", "paper_ids must be non-empty")
        run_id = body.run_id
        if run_id and store.exists(run_id, "pool"):
            pool_raw = store.read(run_id, "pool")
            records = {p["paper_id"]: PaperRecord.from_json(p) for p in pool_raw["candidates"]}
            missing = [pid for pid in body.paper_ids if pid not in records]
            if missing:
                return _error(422, "generate", f"paper ids not in run pool: {missing}")
            papers = [records[pid] for pid in body.paper_ids]
        else:
            return _error(422, "generate", "run_id with a stored pool is required")

        plan = None
        if body.plan:
            keys = {CitationKey(i) for i in range(1, len(papers) + 1)}
            plan = parse_plan(body.plan, keys)  # MalformedPlan -> 422 envelope
        abstract = QueryAbstract(text=body.abstract, publication_date=date.today())
        review = pipeline_generate(
            abstract, papers, body.strategy, plan,
            gateway=gateway, store=store, run_id=run_id,
        )
        payload = {
            "version": API_VERSION,
            "run_id": run_id,
            "review": review.to_json(),
            "plan": plan.to_json() if plan else None,
            "plan_string": render_plan(plan) if plan else None,
            "metrics": store.read(run_id, "metrics") if store.exists(run_id, "metrics") else None,
        }
        if body.idempotency_key and run_id:
            store.idempotency_path(run_id, body.idempotency_key).write_text(
                json.dumps(payload, sort_keys=True), encoding="utf-8")
        return payload

    @app.post("/plan/derive")
    def derive_plan(body: DerivePlanBody):
        if body.num_keys < 1:
            return _error(422, "plan", "num_keys must be >= 1")
        keys = {CitationKey(i) for i in range(1, body.num_keys + 1)}
        plan = derive_plan_from_ground_truth(body.gt_text, keys)
        return {
            "version": API_VERSION,
            "plan": plan.to_json(),
            "plan_string": render_plan(plan),
            "flags": list(plan.flags),
        }

    @app.get("/runs/{run_id}")
    def get_run(run_id: str):
        try:
            artifact = store.load_run(run_id)
        except KeyError:
            return _error(404, "runs", f"unknown run {run_id}")
        artifact["version"] = API_VERSION
        return artifact

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def serve(cfg: RunConfig, host: str = "127.0.0.1", port: int = 8000,
          static_dir: Optional[Path] = None) -> None:
    import uvicorn

    app = create_app(cfg, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port)
