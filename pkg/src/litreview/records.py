"""Core domain records shared across retrieval, reranking and generation."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import date
from typing import Optional


@dataclass(frozen=True)
class QueryAbstract:
    """The concise summary of the paper being written; sole retrieval input."""

    text: str
    publication_date: Optional[date] = None
    source_id: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("abstract text must be non-empty")

    @property
    def query_id(self) -> str:
        if self.source_id:
            return self.source_id
        return "q-" + hashlib.sha256(self.text.encode("utf-8")).hexdigest()[:10]


@dataclass(frozen=True)
class KeywordQuery:
    terms: str
    rank: int

    def __post_init__(self) -> None:
        if not self.terms.strip():
            raise ValueError("query terms must be non-empty")
        if "\n" in self.terms:
            raise ValueError("query terms must not contain newlines")
        if self.rank < 1:
            raise ValueError("rank must be positive")


@dataclass
class PaperRecord:
    """One scientific paper as normalized by a backend adapter."""

    paper_id: str
    title: str
    abstract: str
    publication_date: date
    external_ids: dict[str, str] = field(default_factory=dict)
    embedding: Optional[list[float]] = None
    raw: Optional[dict] = None  # unknown backend fields, preserved as-is

    def __post_init__(self) -> None:
        if not self.paper_id:
            raise ValueError("paper_id must be non-empty")

    def to_json(self) -> dict:
        out = {
            "paper_id": self.paper_id,
            "title": self.title,
            "abstract": self.abstract,
            "publication_date": self.publication_date.isoformat(),
            "external_ids": self.external_ids,
        }
        if self.embedding is not None:
            out["embedding"] = self.embedding
        if self.raw:
            out["raw"] = self.raw
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "PaperRecord":
        return cls(
            paper_id=raw["paper_id"],
            title=raw.get("title", ""),
            abstract=raw.get("abstract", ""),
            publication_date=date.fromisoformat(raw["publication_date"]),
            external_ids=dict(raw.get("external_ids", {})),
            embedding=list(raw["embedding"]) if raw.get("embedding") is not None else None,
            raw=raw.get("raw"),
        )


@dataclass(frozen=True)
class Provenance:
    query_rank: int   # 1-based rank of the source list that surfaced the paper
    result_rank: int  # 1-based rank within that source list


@dataclass
class PoolReport:
    """Drop and underflow counters surfaced in the run report."""

    dropped_records: int = 0
    drop_reasons: dict[str, int] = field(default_factory=dict)
    underflow: Optional[int] = None  # achieved size when union < target
    backend_requests: int = 0
    cache_hits: int = 0

    def count_drop(self, reason: str, n: int = 1) -> None:
        self.dropped_records += n
        self.drop_reasons[reason] = self.drop_reasons.get(reason, 0) + n

    def to_json(self) -> dict:
        return {
            "dropped_records": self.dropped_records,
            "drop_reasons": dict(sorted(self.drop_reasons.items())),
            "underflow": self.underflow,
            "backend_requests": self.backend_requests,
            "cache_hits": self.cache_hits,
        }


@dataclass
class CandidateSet:
    """Merged, deduplicated pool of retrieval candidates for one query."""

    candidates: list[PaperRecord]
    provenance: dict[str, Provenance]
    query: Optional[QueryAbstract] = None
    target: Optional[int] = None
    report: Optional[PoolReport] = None

    def __post_init__(self) -> None:
        ids = [p.paper_id for p in self.candidates]
        if len(ids) != len(set(ids)):
            raise ValueError("candidate set contains duplicate paper ids")

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def paper_ids(self) -> list[str]:
        return [p.paper_id for p in self.candidates]

    def get(self, paper_id: str) -> PaperRecord:
        for p in self.candidates:
            if p.paper_id == paper_id:
                return p
        raise KeyError(paper_id)

    def to_json(self) -> dict:
        out = {
            "candidates": [p.to_json() for p in self.candidates],
            "provenance": {
                pid: {"query_rank": pr.query_rank, "result_rank": pr.result_rank}
                for pid, pr in self.provenance.items()
            },
            "target": self.target,
        }
        if self.query is not None:
            out["query"] = {
                "text": self.query.text,
                "publication_date": self.query.publication_date.isoformat()
                if self.query.publication_date else None,
                "source_id": self.query.source_id,
            }
        if self.report is not None:
            out["report"] = self.report.to_json()
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "CandidateSet":
        query = None
        if raw.get("query"):
            q = raw["query"]
            query = QueryAbstract(
                text=q["text"],
                publication_date=date.fromisoformat(q["publication_date"])
                if q.get("publication_date") else None,
                source_id=q.get("source_id"),
            )
        report = None
        if raw.get("report"):
            r = raw["report"]
            report = PoolReport(
                dropped_records=r.get("dropped_records", 0),
                drop_reasons=dict(r.get("drop_reasons", {})),
                underflow=r.get("underflow"),
                backend_requests=r.get("backend_requests", 0),
                cache_hits=r.get("cache_hits", 0),
            )
        return cls(
            candidates=[PaperRecord.from_json(p) for p in raw["candidates"]],
            provenance={
                pid: Provenance(pr["query_rank"], pr["result_rank"])
                for pid, pr in raw.get("provenance", {}).items()
            },
            query=query,
            target=raw.get("target"),
            report=report,
        )
