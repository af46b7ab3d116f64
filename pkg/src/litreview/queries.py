"""Turn a query abstract into search keyword queries via the LLM.

The response parser is deliberately tolerant: models answer with numbered
lists, bullets, or comma-joined lines depending on mood, and all of those
must come back as the same clean keyword strings.
"""
from __future__ import annotations

import re

from .errors import UnparseableResponse
from .gateway import CompletionRequest, LlmGateway
from .prompts import render
from .records import KeywordQuery, QueryAbstract

# Leading enumeration markers: "1.", "2)", "(3)", "-", "*", "•"
_LEAD_MARKER = re.compile(r"^\s*(?:\(?\d+[.):\]]?|[-*•])\s+")
_INLINE_MARKER = re.compile(r"\d+[.)]\s*")
_QUOTES = "\"'“”‘’`"


def _clean_item(item: str) -> str:
    item = _LEAD_MARKER.sub("", item.strip())
    while True:
        stripped = item.strip().strip(_QUOTES).rstrip(".,;:!?").strip()
        if stripped == item:
            return item
        item = stripped


def parse_keyword_response(raw: str, n: int) -> list[str]:
    """Parse LLM output into keyword strings, at most ``n`` of them.

    Accepts numbered lists, bulleted lists and comma-separated lines; strips
    enumeration markers, quotes and trailing punctuation; deduplicates
    case-insensitively keeping the first occurrence. May return fewer than
    ``n`` items; the caller enforces the count.
    """
    if not raw.strip():
        return []
    items: list[str] = []
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.endswith(":"):
            continue  # preamble ("Here are the queries:")
        # Inline enumerations like "1) deep RL, 2) exploration" split on the
        # markers; otherwise commas separate items.
        if len(_INLINE_MARKER.findall(line)) >= 2:
            parts = [p for p in _INLINE_MARKER.split(line) if p.strip()]
            for part in parts:
                items.extend(p for p in part.split(",") if p.strip())
        else:
            stripped = _LEAD_MARKER.sub("", line)
            if "," in stripped:
                items.extend(p for p in stripped.split(",") if p.strip())
            else:
                items.append(line)
    out: list[str] = []
    seen: set[str] = set()
    for item in items:
        cleaned = _clean_item(item)
        if not cleaned:
            continue
        folded = cleaned.casefold()
        if folded in seen:
            continue
        seen.add(folded)
        out.append(cleaned)
        if len(out) == n:
            break
    return out


def render_numbered(queries: list[str]) -> str:
    """Canonical rendering of keyword queries, inverse of the parser."""
    return "\n".join(f"{i}. {q}" for i, q in enumerate(queries, start=1))


def generate_queries(gateway: LlmGateway, abstract: QueryAbstract, n: int,
                     *, max_output_tokens: int = 256) -> list[KeywordQuery]:
    """Ask the LLM for exactly ``n`` keyword queries, re-prompting once.

    Raises UnparseableResponse if the re-prompt still yields fewer than ``n``
    distinct queries.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    for template in ("keyword_queries", "keyword_queries_retry"):
        prompt = render(template, abstract=abstract.text, n=n)
        result = gateway.complete(CompletionRequest(
            system_text="",
            user_text=prompt,
            max_output_tokens=max_output_tokens,
            temperature=0.0,
            model_id=gateway.default_model,
        ))
        terms = parse_keyword_response(result.text, n)
        if len(terms) == n:
            return [KeywordQuery(terms=t, rank=i) for i, t in enumerate(terms, start=1)]
    raise UnparseableResponse(
        f"expected {n} distinct keyword queries, got {len(terms)} after re-prompt"
    )
