"""Candidate re-ranking: permutation prompting, embedding similarity, and
debate-with-attribution.

Permutation outputs are classified into the observed error modes (complete /
incomplete / repeated / garbage) and always repaired into a full permutation,
so downstream stages never see a partial ordering. Debate ranking checks that
every quoted excerpt is a verbatim substring of the candidate abstract and
re-prompts on fabrication; what happens to still-unverified candidates is a
policy knob (demote to tail and drop their excerpts, or keep them flagged).
"""
from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Union

import numpy as np

from .embeddings import Embedder, rank_candidates_by_embedding
from .gateway import CompletionRequest, LlmGateway
from .prompts import render
from .ranked import DebateConfig, PermutationParse, RankedList, RankEvidence
from .records import CandidateSet, PaperRecord, QueryAbstract
from .textproc import normalize_whitespace

_INT_RE = re.compile(r"\d+")
_PROBABILITY_RE = re.compile(r"PROBABILITY\s*:\s*([01](?:\.\d+)?|\.\d+)", re.IGNORECASE)
_QUOTES = "\"'“”‘’`"


# --- permutation strategy ---

def classify_permutation(raw: str, n: int) -> PermutationParse:
    """Classify a permutation response into exactly one outcome.

    Precedence when defects co-occur: repeated > garbage > incomplete. A
    defect-free full permutation of 1..n is complete. Total over arbitrary
    text: anything without numbers is an incomplete (empty) list.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    indices = tuple(int(tok) for tok in _INT_RE.findall(raw))
    if len(indices) == n and set(indices) == set(range(1, n + 1)):
        outcome = "complete"
    elif len(indices) != len(set(indices)):
        outcome = "repeated"
    elif any(i < 1 or i > n for i in indices):
        outcome = "garbage"
    else:
        outcome = "incomplete"
    return PermutationParse(raw=raw, indices=indices, outcome=outcome)


def repair_permutation(indices: tuple[int, ...], n: int) -> list[int]:
    """Deterministic repair: drop repeats after the first occurrence, drop
    out-of-range values, append missing indices in pool order."""
    seen: set[int] = set()
    repaired: list[int] = []
    for i in indices:
        if 1 <= i <= n and i not in seen:
            seen.add(i)
            repaired.append(i)
    repaired.extend(i for i in range(1, n + 1) if i not in seen)
    return repaired


def _render_candidates(records: list[PaperRecord]) -> str:
    return "\n\n".join(f"[{i}] {r.abstract}" for i, r in enumerate(records, start=1))


_OUTCOME_SEVERITY = {"repeated": 3, "garbage": 2, "incomplete": 1, "complete": 0}


def _rank_window(gateway: LlmGateway, records: list[PaperRecord],
                 query: QueryAbstract) -> tuple[list[int], PermutationParse]:
    prompt = render("rerank_permutation", n=len(records),
                    abstract=query.text, candidates=_render_candidates(records))
    result = gateway.complete(CompletionRequest(
        system_text="", user_text=prompt, max_output_tokens=2048,
        temperature=0.0, model_id=gateway.default_model))
    parse = classify_permutation(result.text, len(records))
    return repair_permutation(parse.indices, len(records)), parse


def rerank_permutation(gateway: LlmGateway, pool: CandidateSet, query: QueryAbstract,
                       *, window: int = 20, stride: int = 10) -> tuple[RankedList, PermutationParse]:
    """Listwise permutation reranking of the whole pool.

    Pools larger than the window are ranked with back-to-front sliding
    windows (tournament-style promotion toward the head). The returned parse
    is the single window's parse, or the worst-outcome window when sliding.
    """
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    records = list(pool.candidates)
    n = len(records)
    if n <= window:
        order, parse = _rank_window(gateway, records, query)
        ordered = [records[i - 1] for i in order]
    else:
        parses: list[PermutationParse] = []
        current = list(records)
        start = max(0, n - window)
        while True:
            chunk = current[start:start + window]
            order, parse = _rank_window(gateway, chunk, query)
            parses.append(parse)
            current[start:start + window] = [chunk[i - 1] for i in order]
            if start == 0:
                break
            start = max(0, start - stride)
        ordered = current
        parse = max(parses, key=lambda p: _OUTCOME_SEVERITY[p.outcome])

    evidence = {
        record.paper_id: RankEvidence(score=(n - rank + 1) / n)
        for rank, record in enumerate(ordered, start=1)
    }
    ranked = RankedList(
        query_id=query.query_id,
        ordering=[r.paper_id for r in ordered],
        evidence=evidence,
        strategy="permutation",
    )
    return ranked, parse


# --- attribution ---

def _normalize_excerpt(text: str) -> str:
    return normalize_whitespace(text).strip(_QUOTES).strip()


def verify_attribution(excerpts: list[str], source_abstract: str) -> bool:
    """True iff every excerpt, whitespace-normalized and unquoted, is a
    contiguous case-sensitive substring of the normalized source."""
    source = normalize_whitespace(source_abstract)
    return all(_normalize_excerpt(e) in source for e in excerpts)


# --- debate strategy ---

def parse_debate_response(raw: str) -> Optional[dict]:
    """Pull the FOR/AGAINST/EXCERPTS/PROBABILITY block out of a response.

    Tolerates prose before the block and code fences around it. Returns None
    when no probability can be extracted.
    """
    prob_match = _PROBABILITY_RE.search(raw)
    if not prob_match:
        return None
    probability = float(prob_match.group(1))
    if not 0.0 <= probability <= 1.0:
        return None
    sections = {"FOR": [], "AGAINST": [], "EXCERPTS": []}
    current: Optional[str] = None
    for line in raw.splitlines():
        stripped = line.strip().strip("`")
        header = stripped.rstrip(":").upper()
        if stripped.endswith(":") and header in sections:
            current = header
            continue
        if _PROBABILITY_RE.match(stripped):
            current = None
            continue
        if current and stripped.startswith("-"):
            item = stripped.lstrip("-").strip()
            if item:
                sections[current].append(item)
    return {
        "arguments_for": sections["FOR"],
        "arguments_against": sections["AGAINST"],
        "excerpts": [_normalize_excerpt(e) for e in sections["EXCERPTS"]],
        "probability": probability,
    }


def debate_rank_one(gateway: LlmGateway, candidate: PaperRecord, query: QueryAbstract,
                    cfg: DebateConfig) -> RankEvidence:
    """Argue one candidate and verify its quoted evidence.

    Re-prompts up to cfg.max_attribution_retries times on fabricated excerpts
    or unparseable verdicts. Never raises on bad model output: unparseable
    verdicts come back flagged with score 0, and finally-unverified excerpts
    are dropped under demote_to_tail (kept, flagged, under keep_with_flag).
    """
    if not candidate.abstract:
        raise ValueError("candidate abstract must be non-empty")
    parsed: Optional[dict] = None
    attempts = 0
    verified = False
    for attempt in range(cfg.max_attribution_retries + 1):
        template = "debate_rank" if attempt == 0 else "debate_rank_retry"
        prompt = render(template, abstract=query.text, candidate=candidate.abstract)
        result = gateway.complete(CompletionRequest(
            system_text="", user_text=prompt, max_output_tokens=1024,
            temperature=0.0, model_id=gateway.default_model))
        attempts = attempt + 1
        attempt_parse = parse_debate_response(result.text)
        if attempt_parse is None:
            continue  # keep any earlier parseable verdict
        parsed = attempt_parse
        if verify_attribution(parsed["excerpts"], candidate.abstract):
            verified = True
            break
    if parsed is None:
        return RankEvidence(score=0.0, verified=False, attempts=attempts,
                            flags=("unparseable_verdict",))
    excerpts = parsed["excerpts"]
    flags: tuple[str, ...] = ()
    if not verified:
        if cfg.unverified_policy == "demote_to_tail":
            # Soundness by construction: fabricated quotes never leave the module.
            excerpts = []
            flags = ("unverified", "excerpts_dropped")
        else:
            flags = ("unverified",)
    return RankEvidence(
        score=parsed["probability"],
        arguments_for=parsed["arguments_for"],
        arguments_against=parsed["arguments_against"],
        excerpts=excerpts,
        verified=verified,
        attempts=attempts,
        flags=flags,
    )


def rerank_debate(gateway: LlmGateway, pool: CandidateSet, query: QueryAbstract,
                  cfg: Optional[DebateConfig] = None) -> RankedList:
    """Debate-rank every candidate and sort by inclusion probability.

    Under demote_to_tail all verified candidates strictly precede unverified
    ones; ties break by ascending paper id. Per-candidate calls run on a
    thread pool bounded by cfg.parallelism.
    """
    if len(pool) == 0:
        raise ValueError("pool must be non-empty")
    cfg = cfg or DebateConfig()
    records = list(pool.candidates)
    if cfg.parallelism > 1:
        with ThreadPoolExecutor(max_workers=cfg.parallelism) as executor:
            results = list(executor.map(
                lambda r: debate_rank_one(gateway, r, query, cfg), records))
    else:
        results = [debate_rank_one(gateway, r, query, cfg) for r in records]
    evidence = {r.paper_id: ev for r, ev in zip(records, results)}

    def sort_key(pid: str):
        ev = evidence[pid]
        demoted = cfg.unverified_policy == "demote_to_tail" and not ev.verified
        return (1 if demoted else 0, -ev.score, pid)

    ordering = sorted(evidence, key=sort_key)
    return RankedList(query_id=query.query_id, ordering=ordering,
                      evidence=evidence, strategy="debate")


# --- strategy dispatch ---

def rerank(strategy: str, gateway: Optional[LlmGateway], pool: CandidateSet,
           query: QueryAbstract, *, debate_cfg: Optional[DebateConfig] = None,
           embedder: Optional[Embedder] = None,
           query_vector: Optional[Union[list, np.ndarray]] = None) -> RankedList:
    """Run the selected reranking strategy over a pool."""
    if strategy == "permutation":
        if gateway is None:
            raise ValueError("permutation reranking requires a gateway")
        ranked, _ = rerank_permutation(gateway, pool, query)
        return ranked
    if strategy == "debate":
        if gateway is None:
            raise ValueError("debate reranking requires a gateway")
        return rerank_debate(gateway, pool, query, debate_cfg)
    if strategy == "embedding":
        if query_vector is not None:
            return rank_candidates_by_embedding(query_vector, pool)
        return rank_candidates_by_embedding(query, pool, embedder)
    raise ValueError(f"unknown rerank strategy {strategy!r}")
