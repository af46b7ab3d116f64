"""End-to-end orchestration: config, run artifacts, and the two pipelines.

A run directory holds every stage output as its own JSON file plus the
gateway transcript, so a run can be audited, re-loaded and replayed:

    runs/{run_id}/config.json
    runs/{run_id}/pool.json
    runs/{run_id}/ranked.json
    runs/{run_id}/review.json
    runs/{run_id}/metrics.json
    runs/{run_id}/transcript.jsonl

Run ids are deterministic functions of (seed, abstract, config), so repeated
fixture runs land on identical artifacts; timestamps live only in
config.json's created_at field and are excluded from equality checks.
"""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .embeddings import hashing_embedder
from .errors import StageError
from .gateway import LlmGateway, MockScript, ProviderConfig
from .generation import GeneratedReview, GenerationRequest, generate
from .plans import SentencePlan, dense_keys
from .queries import generate_queries
from .ranked import DebateConfig, RankedList
from .records import CandidateSet, PaperRecord, QueryAbstract
from .reranking import rerank
from .retrieval import SearchBackend, assemble_pool
from .evaluation import DEFAULT_K_GRID, coverage, plan_adherence


@dataclass
class RunConfig:
    backends: list[SearchBackend] = field(default_factory=list)
    query_count: int = 3
    pool_target: int = 100
    rerank_strategy: str = "embedding"
    debate: DebateConfig = field(default_factory=DebateConfig)
    generation_strategy: str = "zero_shot"
    top_k: int = 3
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    seed: int = 0
    budget_tokens: Optional[int] = None
    gateway_kind: str = "mock"  # mock | http
    mock_script_path: Optional[str] = None
    provider: Optional[ProviderConfig] = None
    embedding_dimension: int = 64
    cache_dir: Optional[str] = None
    runs_dir: str = "runs"

    def __post_init__(self) -> None:
        if self.pool_target < 1:
            raise ValueError("pool_target must be >= 1")
        if self.query_count < 1:
            raise ValueError("query_count must be >= 1")

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        gateway = raw.get("gateway", {})
        rerank_cfg = raw.get("rerank", {})
        debate_raw = rerank_cfg.get("debate", {})
        return cls(
            backends=[SearchBackend.from_dict(b) for b in raw.get("backends", [])],
            query_count=raw.get("query_count", 3),
            pool_target=raw.get("pool_target", 100),
            rerank_strategy=rerank_cfg.get("strategy", raw.get("rerank_strategy", "embedding")),
            debate=DebateConfig(
                max_attribution_retries=debate_raw.get("max_attribution_retries", 2),
                unverified_policy=debate_raw.get("unverified_policy", "demote_to_tail"),
                parallelism=debate_raw.get("parallelism", 1),
            ),
            generation_strategy=raw.get("generation", {}).get("strategy",
                                                              raw.get("generation_strategy", "zero_shot")),
            top_k=raw.get("top_k", 3),
            k_grid=tuple(raw.get("k_grid", DEFAULT_K_GRID)),
            seed=raw.get("seed", 0),
            budget_tokens=raw.get("budget_tokens"),
            gateway_kind=gateway.get("kind", "mock"),
            mock_script_path=gateway.get("script"),
            provider=ProviderConfig.from_dict(gateway) if gateway.get("kind") == "http" else None,
            embedding_dimension=raw.get("embedding", {}).get("dimension", 64),
            cache_dir=raw.get("cache_dir"),
            runs_dir=raw.get("runs_dir", "runs"),
        )

    def snapshot(self) -> dict:
        return {
            "backends": [{"kind": b.kind, "endpoint": b.endpoint, "page_limit": b.page_limit}
                         for b in self.backends],
            "query_count": self.query_count,
            "pool_target": self.pool_target,
            "rerank_strategy": self.rerank_strategy,
            "debate": {
                "max_attribution_retries": self.debate.max_attribution_retries,
                "unverified_policy": self.debate.unverified_policy,
                "parallelism": self.debate.parallelism,
            },
            "generation_strategy": self.generation_strategy,
            "top_k": self.top_k,
            "k_grid": list(self.k_grid),
            "seed": self.seed,
            "budget_tokens": self.budget_tokens,
            "gateway_kind": self.gateway_kind,
            "embedding_dimension": self.embedding_dimension,
        }

    def build_gateway(self) -> LlmGateway:
        if self.gateway_kind == "mock":
            if not self.mock_script_path:
                raise ValueError("mock gateway requires gateway.script in the config")
            gateway = LlmGateway(script=MockScript.from_file(self.mock_script_path))
        else:
            if self.provider is None:
                raise ValueError("http gateway requires endpoint configuration")
            gateway = LlmGateway(provider=self.provider)
        if self.budget_tokens:
            gateway.with_budget(self.budget_tokens)
        return gateway


class RunStore:
    """Per-run artifact directory with JSON parts."""

    PARTS = ("config", "pool", "ranked", "review", "metrics")

    def __init__(self, root: Union[str, Path]) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        path = self.root / run_id
        path.mkdir(parents=True, exist_ok=True)
        return path

    def write(self, run_id: str, part: str, payload: dict) -> Path:
        path = self.run_dir(run_id) / f"{part}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False),
                        encoding="utf-8")
        return path

    def read(self, run_id: str, part: str) -> dict:
        return json.loads((self.root / run_id / f"{part}.json").read_text(encoding="utf-8"))

    def exists(self, run_id: str, part: Optional[str] = None) -> bool:
        if part is None:
            return (self.root / run_id).is_dir()
        return (self.root / run_id / f"{part}.json").is_file()

    def write_transcript(self, run_id: str, gateway: LlmGateway) -> None:
        (self.run_dir(run_id) / "transcript.jsonl").write_bytes(gateway.transcript_bytes())

    def load_run(self, run_id: str) -> dict:
        """Re-load every existing artifact part of a run."""
        if not self.exists(run_id):
            raise KeyError(run_id)
        artifact = {"run_id": run_id}
        for part in self.PARTS:
            if self.exists(run_id, part):
                artifact[part] = self.read(run_id, part)
        transcript = self.root / run_id / "transcript.jsonl"
        if transcript.is_file():
            artifact["transcript"] = [
                json.loads(line) for line in transcript.read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
        return artifact

    def idempotency_path(self, run_id: str, key: str) -> Path:
        safe = hashlib.sha256(key.encode("utf-8")).hexdigest()[:32]
        directory = self.run_dir(run_id) / "idem"
        directory.mkdir(exist_ok=True)
        return directory / f"{safe}.json"


def compute_run_id(cfg: RunConfig, abstract: QueryAbstract) -> str:
    basis = json.dumps({"config": cfg.snapshot(), "abstract": abstract.text,
                        "seed": cfg.seed}, sort_keys=True)
    return "run-" + hashlib.sha256(basis.encode("utf-8")).hexdigest()[:12]


def pipeline_retrieve(abstract: QueryAbstract, cfg: RunConfig, *,
                      gateway: Optional[LlmGateway] = None,
                      store: Optional[RunStore] = None,
                      run_id: Optional[str] = None) -> tuple[RankedList, CandidateSet, str]:
    """Algorithm: keyword queries -> pooled search -> selected reranker.

    Module errors propagate wrapped in StageError with the stage label.
    Returns the ranked list, the pool it ranks, and the run id.
    """
    gateway = gateway or cfg.build_gateway()
    store = store or RunStore(cfg.runs_dir)
    run_id = run_id or compute_run_id(cfg, abstract)
    store.write(run_id, "config", {"config": cfg.snapshot(), "created_at": time.time(),
                                   "abstract": abstract.text, "run_id": run_id})
    try:
        queries = generate_queries(gateway, abstract, cfg.query_count)
    except Exception as exc:
        raise StageError("queries", exc) from exc
    try:
        pool = assemble_pool(
            abstract, cfg.backends, queries, cfg.pool_target,
            cache_dir=Path(cfg.cache_dir) if cfg.cache_dir else None,
        )
    except Exception as exc:
        raise StageError("retrieve", exc) from exc
    store.write(run_id, "pool", pool.to_json())
    try:
        embedder = hashing_embedder(cfg.embedding_dimension, cfg.seed)
        ranked = rerank(cfg.rerank_strategy, gateway, pool, abstract,
                        debate_cfg=cfg.debate, embedder=embedder)
    except Exception as exc:
        raise StageError("rerank", exc) from exc
    store.write(run_id, "ranked", ranked.to_json())
    store.write_transcript(run_id, gateway)
    return ranked, pool, run_id


def pipeline_generate(abstract: QueryAbstract, top_k_papers: list[PaperRecord],
                      strategy: str, plan: Optional[SentencePlan] = None, *,
                      gateway: LlmGateway, cfg: Optional[RunConfig] = None,
                      store: Optional[RunStore] = None,
                      run_id: Optional[str] = None) -> GeneratedReview:
    """Generate a review for the top-k papers, keys assigned by rank order.

    Coverage (against the requested key set) and plan adherence (when a plan
    is given) are computed and stored with the run.
    """
    if not top_k_papers:
        raise ValueError("top_k_papers must be non-empty")
    keys = dense_keys(len(top_k_papers))
    references = {key: paper.abstract for key, paper in zip(keys, top_k_papers)}
    request = GenerationRequest(
        query_abstract=abstract.text,
        references=references,
        strategy=strategy,
        plan=plan,
    )
    try:
        review = generate(gateway, request)
    except Exception as exc:
        raise StageError("generate", exc) from exc

    covered, found = coverage(review, set(keys))
    metrics: dict = {
        "coverage": covered,
        "found_keys": sorted(k.index for k in found),
        "hallucinated_keys": [k.index for k in review.hallucinated_keys],
    }
    if plan is not None:
        record = plan_adherence(review, plan)
        metrics["adherence"] = {
            "planned_lines": record.planned_lines,
            "generated_lines": record.generated_lines,
            "diff": record.diff,
            "exact": record.exact,
        }
    if store is not None and run_id is not None:
        payload = review.to_json()
        payload["strategy"] = strategy
        payload["paper_ids"] = [p.paper_id for p in top_k_papers]
        if plan is not None:
            payload["plan"] = plan.to_json()
        store.write(run_id, "review", payload)
        store.write(run_id, "metrics", metrics)
        store.write_transcript(run_id, gateway)
    return review
