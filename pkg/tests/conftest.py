from __future__ import annotations

import json
from datetime import date
from pathlib import Path

import pytest

from litreview.records import PaperRecord, QueryAbstract


def make_paper(pid: str, *, title: str | None = None, abstract: str | None = None,
               pub: str = "2023-01-01", embedding=None, tags=None) -> dict:
    """Raw backend-shaped record for fixture files."""
    raw = {
        "paper_id": pid,
        "title": title if title is not None else f"Title of {pid}",
        "abstract": abstract if abstract is not None else f"Abstract of {pid} about searchable topics.",
        "publication_date": pub,
    }
    if embedding is not None:
        raw["embedding"] = embedding
    if tags is not None:
        raw["tags"] = tags
    return raw


def paper_record(pid: str, *, abstract: str | None = None, pub: str = "2023-01-01",
                 embedding=None) -> PaperRecord:
    return PaperRecord(
        paper_id=pid,
        title=f"Title of {pid}",
        abstract=abstract if abstract is not None else f"Abstract of {pid}.",
        publication_date=date.fromisoformat(pub),
        embedding=embedding,
    )


@pytest.fixture
def write_fixture_backend(tmp_path: Path):
    """Write raw records to a JSON file usable as a local_fixture endpoint."""

    def _write(records: list[dict], name: str = "papers.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(records), encoding="utf-8")
        return path

    return _write


@pytest.fixture
def abstract() -> QueryAbstract:
    return QueryAbstract(
        text="A study of retrieval and ranking for scientific literature assistance.",
        publication_date=date(2023, 9, 1),
        source_id="query-1",
    )
