"""Search-engine clients and the multi-query merge producing the candidate pool.

Three backend kinds share one adapter contract: an academic-graph HTTP API,
a generic web-search HTTP API restricted to paper pages, and a fully offline
local fixture. Adapters normalize results into PaperRecord at the client
boundary; records missing an id, an abstract or a parseable date are dropped
and counted, never fatal.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

import httpx

from .errors import BackendUnavailable, EmptyInput
from .records import (CandidateSet, KeywordQuery, PaperRecord, PoolReport,
                      Provenance, QueryAbstract)

BACKEND_KINDS = ("academic_graph", "web_search", "local_fixture")


@dataclass(frozen=True)
class SearchBackend:
    """Configuration for one search engine."""

    kind: str
    endpoint: str  # URL for HTTP backends, file path for local_fixture
    page_limit: int = 100
    credential_env: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")

    @classmethod
    def from_dict(cls, raw: dict) -> "SearchBackend":
        return cls(
            kind=raw["kind"],
            endpoint=raw["endpoint"],
            page_limit=raw.get("page_limit", 100),
            credential_env=raw.get("credential_env"),
        )


def parse_paper_date(value) -> Optional[date]:
    """Tolerant date parse: YYYY-MM-DD, YYYY-MM, YYYY, or an int year."""
    if value is None:
        return None
    if isinstance(value, int):
        return date(value, 1, 1) if 1000 <= value <= 9999 else None
    text = str(value).strip()
    for fmt_len, builder in ((10, date.fromisoformat), (7, lambda s: date(int(s[:4]), int(s[5:7]), 1)),
                             (4, lambda s: date(int(s), 1, 1))):
        if len(text) >= fmt_len:
            try:
                return builder(text[:fmt_len])
            except ValueError:
                continue
    return None


_KNOWN_FIELDS = {"paper_id", "paperId", "id", "title", "abstract", "publication_date",
                 "publicationDate", "year", "external_ids", "externalIds", "embedding", "tags"}


def normalize_record(raw: dict, drops: PoolReport) -> Optional[PaperRecord]:
    """Map one backend result onto PaperRecord, or drop it with a counted reason."""
    paper_id = raw.get("paper_id") or raw.get("paperId") or raw.get("id")
    if not paper_id:
        drops.count_drop("missing_id")
        return None
    abstract = raw.get("abstract")
    if not abstract:
        drops.count_drop("missing_abstract")
        return None
    pub = parse_paper_date(raw.get("publication_date") or raw.get("publicationDate") or raw.get("year"))
    if pub is None:
        drops.count_drop("bad_date")
        return None
    external = dict(raw.get("external_ids") or raw.get("externalIds") or {})
    sidecar = {k: v for k, v in raw.items() if k not in _KNOWN_FIELDS}
    return PaperRecord(
        paper_id=str(paper_id),
        title=raw.get("title", ""),
        abstract=abstract,
        publication_date=pub,
        external_ids={str(k): str(v) for k, v in external.items()},
        embedding=list(raw["embedding"]) if raw.get("embedding") is not None else None,
        raw=sidecar or None,
    )


class FixtureClient:
    """Offline backend: a JSON file holding an ordered list of raw records.

    A record matches a query when any whitespace token of the query terms
    appears (case-insensitively) in its title, abstract or tags. Results keep
    fixture order.
    """

    def __init__(self, backend: SearchBackend) -> None:
        self.backend = backend
        raw = json.loads(Path(backend.endpoint).read_text(encoding="utf-8"))
        self._raw_records = raw["records"] if isinstance(raw, dict) else raw
        self.search_calls = 0

    def search(self, q: KeywordQuery, cutoff: Optional[date], limit: int,
               drops: PoolReport) -> list[PaperRecord]:
        self.search_calls += 1
        tokens = [t.casefold() for t in q.terms.split()]
        out: list[PaperRecord] = []
        for raw in self._raw_records:
            record = normalize_record(raw, drops)
            if record is None:
                continue
            haystack = " ".join([record.title, record.abstract,
                                 " ".join(raw.get("tags", []))]).casefold()
            if tokens and not any(tok in haystack for tok in tokens):
                continue
            if cutoff is not None and record.publication_date >= cutoff:
                continue
            out.append(record)
            if len(out) == limit:
                break
        return out


class _HttpClientBase:
    def __init__(self, backend: SearchBackend, transport: Optional[httpx.BaseTransport] = None) -> None:
        self.backend = backend
        self._client = httpx.Client(transport=transport, timeout=30.0)
        self.search_calls = 0

    def _headers(self) -> dict:
        headers = {}
        if self.backend.credential_env:
            credential = os.environ.get(self.backend.credential_env)
            if credential:
                headers["x-api-key"] = credential
        return headers

    def _get(self, params: dict) -> dict:
        try:
            response = self._client.get(self.backend.endpoint, params=params, headers=self._headers())
        except httpx.TransportError as exc:
            raise BackendUnavailable(f"{self.backend.kind}: {exc}") from exc
        if response.status_code != 200:
            raise BackendUnavailable(f"{self.backend.kind}: HTTP {response.status_code}")
        return response.json()


class AcademicGraphClient(_HttpClientBase):
    """Client for a semantic-scholar-style paper search API."""

    def search(self, q: KeywordQuery, cutoff: Optional[date], limit: int,
               drops: PoolReport) -> list[PaperRecord]:
        self.search_calls += 1
        params = {
            "query": q.terms,
            "limit": min(limit, self.backend.page_limit),
            "fields": "title,abstract,publicationDate,externalIds",
        }
        if cutoff is not None:
            # API-side hint; the date-safety filter below is authoritative.
            params["publicationDateOrYear"] = f":{cutoff.isoformat()}"
        payload = self._get(params)
        out = []
        for raw in payload.get("data", []):
            record = normalize_record(raw, drops)
            if record is None:
                continue
            if cutoff is not None and record.publication_date >= cutoff:
                continue
            out.append(record)
            if len(out) == limit:
                break
        return out


class WebSearchClient(_HttpClientBase):
    """Client for a SERP-style web search restricted to paper pages."""

    def search(self, q: KeywordQuery, cutoff: Optional[date], limit: int,
               drops: PoolReport) -> list[PaperRecord]:
        self.search_calls += 1
        params = {"q": f"site:arxiv.org {q.terms}", "num": min(limit, self.backend.page_limit)}
        payload = self._get(params)
        out = []
        for raw in payload.get("results", []):
            record = normalize_record(raw, drops)
            if record is None:
                continue
            if cutoff is not None and record.publication_date >= cutoff:
                continue
            out.append(record)
            if len(out) == limit:
                break
        return out


def make_client(backend: SearchBackend, transport: Optional[httpx.BaseTransport] = None):
    if backend.kind == "local_fixture":
        return FixtureClient(backend)
    if backend.kind == "academic_graph":
        return AcademicGraphClient(backend, transport)
    return WebSearchClient(backend, transport)


def search(backend: SearchBackend, q: KeywordQuery, cutoff: Optional[date], limit: int,
           *, drops: Optional[PoolReport] = None,
           transport: Optional[httpx.BaseTransport] = None) -> list[PaperRecord]:
    """One-shot search against a backend; results in backend rank order."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    return make_client(backend, transport).search(q, cutoff, limit, drops or PoolReport())


def merge_round_robin(result_lists: Sequence[Sequence[PaperRecord]], target: int,
                      query: Optional[QueryAbstract] = None) -> CandidateSet:
    """Merge per-query result lists taking an equal share from each.

    Each of the m lists contributes floor(target/m) candidates, with the
    remainder going to the earliest lists; duplicates are skipped (first list
    to surface a paper owns it) and an exhausted list's shortfall is backfilled
    evenly from the lists that still have results. Output is grouped by source
    list, each group in source rank order; size is min(target, distinct union).
    """
    if target < 1:
        raise ValueError("target must be >= 1")
    if not result_lists or all(len(lst) == 0 for lst in result_lists):
        raise EmptyInput("all result lists are empty")

    m = len(result_lists)
    quotas = [target // m + (1 if i < target % m else 0) for i in range(m)]
    cursors = [0] * m
    picks: list[list[PaperRecord]] = [[] for _ in range(m)]
    provenance: dict[str, Provenance] = {}
    taken = 0

    def take_from(i: int, want: int) -> int:
        nonlocal taken
        got = 0
        lst = result_lists[i]
        while got < want and cursors[i] < len(lst):
            record = lst[cursors[i]]
            cursors[i] += 1
            if record.paper_id in provenance:
                continue
            provenance[record.paper_id] = Provenance(query_rank=i + 1, result_rank=cursors[i])
            picks[i].append(record)
            got += 1
            taken += 1
        return got

    for i in range(m):
        take_from(i, quotas[i])

    # Backfill: redistribute the shortfall evenly over lists with results left.
    while taken < target:
        alive = [i for i in range(m) if cursors[i] < len(result_lists[i])]
        if not alive:
            break
        need = target - taken
        base, extra = divmod(need, len(alive))
        progressed = 0
        for pos, i in enumerate(alive):
            want = base + (1 if pos < extra else 0)
            if want:
                progressed += take_from(i, want)
        if progressed == 0:
            break

    candidates = [record for group in picks for record in group]
    return CandidateSet(candidates=candidates, provenance=provenance, query=query, target=target)


class ResponseCache:
    """Content-addressed JSON cache of normalized backend responses."""

    def __init__(self, directory: Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: dict) -> Path:
        digest = hashlib.sha256(json.dumps(key, sort_keys=True).encode("utf-8")).hexdigest()
        return self.directory / digest[:2] / f"{digest}.json"

    def get(self, key: dict) -> Optional[list[PaperRecord]]:
        path = self._path(key)
        if not path.exists():
            return None
        payload = json.loads(path.read_text(encoding="utf-8"))
        return [PaperRecord.from_json(r) for r in payload["records"]]

    def put(self, key: dict, records: list[PaperRecord]) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"key": key, "records": [r.to_json() for r in records]}
        # Atomic write: temp file in the same directory, then rename.
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, sort_keys=True)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


def assemble_pool(abstract: QueryAbstract, backends: Sequence[SearchBackend],
                  queries: Sequence[KeywordQuery], target: int,
                  *, cutoff_enabled: bool = True,
                  per_query_limit: Optional[int] = None,
                  cache_dir: Optional[Path] = None,
                  transport: Optional[httpx.BaseTransport] = None,
                  clients: Optional[dict] = None) -> CandidateSet:
    """Fan out search over (query, backend), merge per the equal-share rule.

    Source lists are ordered query-major then backend. Raw responses are
    cached by (backend, query, cutoff, limit); a warm cache performs zero
    backend requests. Underflow (union < target) is recorded on the report,
    not raised.
    """
    if not queries:
        raise ValueError("queries must be non-empty")
    if cutoff_enabled and abstract.publication_date is None:
        raise ValueError("date-cutoff retrieval requires the abstract's publication_date")
    cutoff = abstract.publication_date if cutoff_enabled else None
    depth = per_query_limit or target
    cache = ResponseCache(cache_dir) if cache_dir else None
    report = PoolReport()
    if clients is None:
        clients = {}

    lists: list[list[PaperRecord]] = []
    for q in sorted(queries, key=lambda kq: kq.rank):
        for backend in backends:
            key = {"kind": backend.kind, "endpoint": backend.endpoint, "terms": q.terms,
                   "cutoff": cutoff.isoformat() if cutoff else None, "limit": depth}
            records = cache.get(key) if cache else None
            if records is None:
                client_key = (backend.kind, backend.endpoint)
                if client_key not in clients:
                    clients[client_key] = make_client(backend, transport)
                records = clients[client_key].search(q, cutoff, depth, report)
                report.backend_requests += 1
                if cache:
                    cache.put(key, records)
            else:
                report.cache_hits += 1
            lists.append(records)

    pool = merge_round_robin(lists, target, query=abstract)
    if len(pool) < target:
        report.underflow = len(pool)
    pool.report = report
    return pool
