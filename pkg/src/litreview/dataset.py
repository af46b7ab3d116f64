"""Rolling evaluation-set construction from a monthly slice of raw papers.

Raw input is newline-delimited JSON, one object per paper:

    {"id": ..., "external_ids": {"arxiv": "2308.00001"}, "title": ...,
     "abstract": ..., "publication_date": "2023-08-01", "body": ...,
     "sections": [{"title": "2. Related Work", "start": 120, "end": 940}],
     "citations": [{"paper_id": ..., "title": ..., "abstract": ...,
                    "publication_date": ...}]}

Papers are month-filtered by arXiv-id prefix, their related-work section is
located by synonym match on normalized section titles, the section text
becomes the ground truth, and everything that cannot produce a complete
example is dropped with a reason code. Drop accounting is exact: inputs =
outputs + drops.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional, Union

from .records import PaperRecord, QueryAbstract
from .retrieval import parse_paper_date
from .textproc import word_count

SECTION_SYNONYMS = frozenset({"related work", "related works", "literature review", "background"})

_MONTH_TAG_RE = re.compile(r"^\d{4}$")
# Leading section numbering: "2.", "3.1", "2", "IV.", "(a)". Roman numerals
# and letters only strip with a separator, so titles like "Literature Review"
# survive.
_NUMBERING_RE = re.compile(
    r"^(?:\d+(?:\.\d+)*[.)]?|[ivxlc]+[.)]|[([]\w{1,3}[)\]])[\s.]*", re.IGNORECASE)


@dataclass(frozen=True)
class SectionSpan:
    title: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError("section span must satisfy 0 <= start < end")


@dataclass
class EvalExample:
    query: QueryAbstract
    gt_related_work: str
    gt_citations: list[PaperRecord]
    context: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "query": {
                "text": self.query.text,
                "publication_date": self.query.publication_date.isoformat()
                if self.query.publication_date else None,
                "source_id": self.query.source_id,
            },
            "gt_related_work": self.gt_related_work,
            "gt_citations": [c.to_json() for c in self.gt_citations],
            "context": self.context,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "EvalExample":
        from datetime import date

        q = raw["query"]
        return cls(
            query=QueryAbstract(
                text=q["text"],
                publication_date=date.fromisoformat(q["publication_date"])
                if q.get("publication_date") else None,
                source_id=q.get("source_id"),
            ),
            gt_related_work=raw["gt_related_work"],
            gt_citations=[PaperRecord.from_json(c) for c in raw["gt_citations"]],
            context=raw.get("context"),
        )


def _in_month(record: dict, month_tag: str) -> bool:
    arxiv_id = (record.get("external_ids") or {}).get("arxiv", "")
    return arxiv_id.startswith(month_tag)


def filter_month(records: Iterable[dict], month_tag: str) -> Iterator[dict]:
    """Keep records whose arXiv id starts with the YYMM tag (prefix-anchored)."""
    if not _MONTH_TAG_RE.match(month_tag):
        raise ValueError(f"month_tag must be YYMM, got {month_tag!r}")
    for record in records:
        if _in_month(record, month_tag):
            yield record


def normalize_section_title(title: str) -> str:
    title = title.strip().lower()
    while True:
        stripped = _NUMBERING_RE.sub("", title, count=1).strip()
        if stripped == title:
            break
        title = stripped
    return title


def find_related_work_span(doc: str, sections: list[SectionSpan]) -> Optional[SectionSpan]:
    """First section whose normalized title matches a related-work synonym."""
    for span in sections:
        if span.end > len(doc):
            continue
        if normalize_section_title(span.title) in SECTION_SYNONYMS:
            return span
    return None


@dataclass
class BuildResult:
    examples: list[EvalExample]
    drops: dict[str, int] = field(default_factory=dict)
    drop_log: list[tuple[str, str]] = field(default_factory=list)  # (record id, reason)

    def count_drop(self, record_id: str, reason: str) -> None:
        self.drops[reason] = self.drops.get(reason, 0) + 1
        self.drop_log.append((record_id, reason))

    @property
    def total_drops(self) -> int:
        return sum(self.drops.values())


def _resolve_citations(raw_citations: list[dict], query_date, result: BuildResult,
                       record_id: str) -> Optional[list[PaperRecord]]:
    resolved: list[PaperRecord] = []
    for raw in raw_citations:
        paper_id = raw.get("paper_id") or raw.get("id")
        abstract = raw.get("abstract")
        pub = parse_paper_date(raw.get("publication_date") or raw.get("year"))
        if not paper_id or not abstract or pub is None:
            result.count_drop(record_id, "unresolved_citation")
            return None
        if query_date is not None and pub >= query_date:
            result.count_drop(record_id, "future_citation")
            return None
        resolved.append(PaperRecord(
            paper_id=str(paper_id),
            title=raw.get("title", ""),
            abstract=abstract,
            publication_date=pub,
            external_ids=dict(raw.get("external_ids", {})),
        ))
    resolved.sort(key=lambda p: p.paper_id)
    return resolved


def build_eval_set(source: Union[str, Path, Iterable[dict]], month_tag: str,
                   pool_target: int = 100,
                   pool_size_fn: Optional[Callable[[QueryAbstract], int]] = None) -> BuildResult:
    """Construct EvalExamples from raw records, one drop reason per casualty.

    pool_size_fn, when given, reports the candidate-pool size achievable for a
    query (fixture- or live-backed retrieval); examples whose pool cannot
    reach pool_target are dropped as infeasible.
    """
    if isinstance(source, (str, Path)):
        records = _read_ndjson(Path(source))
    else:
        records = list(source)
    if not _MONTH_TAG_RE.match(month_tag):
        raise ValueError(f"month_tag must be YYMM, got {month_tag!r}")
    total_in = 0
    seen_arxiv: set[str] = set()
    result = BuildResult(examples=[])
    for record in records:
        total_in += 1
        record_id = str(record.get("id", f"row{total_in}"))
        if not _in_month(record, month_tag):
            result.count_drop(record_id, "outside_month")
            continue
        arxiv_id = record["external_ids"]["arxiv"]
        if arxiv_id in seen_arxiv:
            result.count_drop(record_id, "duplicate_id")
            continue
        seen_arxiv.add(arxiv_id)

        body = record.get("body") or ""
        abstract = record.get("abstract") or ""
        pub = parse_paper_date(record.get("publication_date"))
        if not body or not abstract or pub is None:
            result.count_drop(record_id, "missing_fields")
            continue
        sections = []
        malformed = False
        for s in record.get("sections", []):
            try:
                sections.append(SectionSpan(s["title"], s["start"], s["end"]))
            except (KeyError, ValueError):
                malformed = True
                break
        if malformed:
            result.count_drop(record_id, "malformed_sections")
            continue
        span = find_related_work_span(body, sections)
        if span is None:
            result.count_drop(record_id, "no_related_work_section")
            continue
        gt_related_work = body[span.start:span.end]
        if not gt_related_work.strip():
            result.count_drop(record_id, "empty_related_work")
            continue
        context = (body[:span.start] + body[span.end:]).strip()
        if not context:
            result.count_drop(record_id, "empty_context")
            continue
        citations = record.get("citations", [])
        if not citations:
            result.count_drop(record_id, "no_citations")
            continue
        resolved = _resolve_citations(citations, pub, result, record_id)
        if resolved is None:
            continue
        query = QueryAbstract(text=abstract, publication_date=pub, source_id=arxiv_id)
        if pool_size_fn is not None and pool_size_fn(query) < pool_target:
            result.count_drop(record_id, "pool_underflow")
            continue
        result.examples.append(EvalExample(
            query=query,
            gt_related_work=gt_related_work,
            gt_citations=resolved,
            context=context,
        ))
    result.examples.sort(key=lambda e: e.query.source_id or "")
    assert total_in == len(result.examples) + result.total_drops
    return result


def _read_ndjson(path: Path) -> list[dict]:
    records = []
    with path.open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records


def write_examples(examples: list[EvalExample], path: Union[str, Path]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(json.dumps(example.to_json(), sort_keys=True, ensure_ascii=False) + "\n")


def read_examples(path: Union[str, Path]) -> list[EvalExample]:
    out = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(EvalExample.from_json(json.loads(line)))
    return out


def dataset_stats(examples: list[EvalExample]) -> dict:
    """Word-length and citation-count summary, stable across runs."""
    if not examples:
        raise ValueError("no examples")
    n = len(examples)
    related_words = [word_count(e.gt_related_work) for e in examples]
    abstract_words = [word_count(e.query.text) for e in examples]
    cite_counts = [len(e.gt_citations) for e in examples]
    return {
        "examples": n,
        "mean_related_work_words": round(sum(related_words) / n, 4),
        "mean_abstract_words": round(sum(abstract_words) / n, 4),
        "mean_citations": round(sum(cite_counts) / n, 4),
        "total_citations": sum(cite_counts),
    }


def write_stats(stats: dict, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n", encoding="utf-8")
