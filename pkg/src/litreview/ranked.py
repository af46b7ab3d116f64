"""Ranked-list types shared by the reranking strategies."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass
class RankEvidence:
    """Per-candidate evidence attached to a ranked list.

    ``score`` is in [0,1]: the inclusion probability for debate ranking, the
    rescaled cosine similarity for embedding ranking, and (N-rank+1)/N for
    permutation ranking. ``verified`` means every excerpt survived verbatim
    attribution checking.
    """

    score: float
    arguments_for: list[str] = field(default_factory=list)
    arguments_against: list[str] = field(default_factory=list)
    excerpts: list[str] = field(default_factory=list)
    verified: bool = True
    attempts: int = 1
    flags: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "score": self.score,
            "arguments_for": self.arguments_for,
            "arguments_against": self.arguments_against,
            "excerpts": self.excerpts,
            "verified": self.verified,
            "attempts": self.attempts,
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, raw: dict) -> "RankEvidence":
        return cls(
            score=raw["score"],
            arguments_for=list(raw.get("arguments_for", [])),
            arguments_against=list(raw.get("arguments_against", [])),
            excerpts=list(raw.get("excerpts", [])),
            verified=raw.get("verified", True),
            attempts=raw.get("attempts", 1),
            flags=tuple(raw.get("flags", ())),
        )


RANK_STRATEGIES = ("permutation", "embedding", "debate")


@dataclass
class RankedList:
    """An ordering over a candidate pool plus per-candidate evidence."""

    query_id: str
    ordering: list[str]  # paper ids, best first
    evidence: dict[str, RankEvidence]
    strategy: str

    def __post_init__(self) -> None:
        if self.strategy not in RANK_STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if len(set(self.ordering)) != len(self.ordering):
            raise ValueError("ordering contains duplicate paper ids")

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "ordering": self.ordering,
            "evidence": {pid: ev.to_json() for pid, ev in self.evidence.items()},
            "strategy": self.strategy,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "RankedList":
        return cls(
            query_id=raw["query_id"],
            ordering=list(raw["ordering"]),
            evidence={pid: RankEvidence.from_json(ev) for pid, ev in raw.get("evidence", {}).items()},
            strategy=raw["strategy"],
        )


@dataclass(frozen=True)
class DebateConfig:
    max_attribution_retries: int = 2
    unverified_policy: str = "demote_to_tail"  # or "keep_with_flag"
    parallelism: int = 1

    def __post_init__(self) -> None:
        if not 0 <= self.max_attribution_retries <= 5:
            raise ValueError("max_attribution_retries must be in [0, 5]")
        if self.unverified_policy not in ("demote_to_tail", "keep_with_flag"):
            raise ValueError(f"unknown unverified_policy {self.unverified_policy!r}")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")


@dataclass(frozen=True)
class PermutationParse:
    """Classification of one permutation-ranking response."""

    raw: str
    indices: tuple[int, ...]
    outcome: str  # complete | incomplete | repeated | garbage

    OUTCOMES = ("complete", "incomplete", "repeated", "garbage")


@dataclass(frozen=True)
class NeighborHit:
    paper_id: str
    score: float  # cosine similarity in [-1, 1]
    shard_id: int
