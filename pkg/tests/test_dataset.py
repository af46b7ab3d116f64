from __future__ import annotations

import json

import pytest

from litreview.dataset import (SectionSpan, build_eval_set, dataset_stats,
                               filter_month, find_related_work_span,
                               normalize_section_title, read_examples,
                               write_examples, write_stats)


def raw_paper(arxiv_id: str, *, rw_title: str = "Related Work",
              rw_text: str = "Prior work did things. We differ.",
              intro: str = "Intro text here. ",
              outro: str = " Conclusion text here.",
              citations: list | None = None,
              rid: str | None = None) -> dict:
    body = intro + rw_text + outro
    sections = []
    if intro:
        sections.append({"title": "1. Introduction", "start": 0, "end": len(intro)})
    sections.append({"title": rw_title, "start": len(intro), "end": len(intro) + len(rw_text)})
    if citations is None:
        citations = [{"paper_id": f"cited-{arxiv_id}", "title": "Cited",
                      "abstract": "Cited abstract.", "publication_date": "2023-01-01"}]
    return {
        "id": rid or f"paper-{arxiv_id}",
        "external_ids": {"arxiv": arxiv_id},
        "title": f"Paper {arxiv_id}",
        "abstract": f"Abstract of {arxiv_id} with twelve words of content in it total.",
        "publication_date": "2023-08-15",
        "body": body,
        "sections": sections,
        "citations": citations,
    }


class TestFilterMonth:
    def test_prefix_match(self):
        records = [{"external_ids": {"arxiv": "2308.00001"}},
                   {"external_ids": {"arxiv": "2307.9999"}}]
        assert list(filter_month(records, "2308")) == [records[0]]

    def test_empty_stream(self):
        assert list(filter_month([], "2308")) == []

    def test_prefix_is_anchored(self):
        records = [{"external_ids": {"arxiv": "12308.1"}}]
        assert list(filter_month(records, "2308")) == []

    def test_bad_tag_rejected(self):
        with pytest.raises(ValueError):
            list(filter_month([], "August"))


class TestSectionMatch:
    def test_numbered_title_matched(self):
        doc = "x" * 100
        span = SectionSpan("2. Related Work", 10, 50)
        assert find_related_work_span(doc, [span]) == span

    def test_synonyms(self):
        for title in ("Related Work", "related works", "LITERATURE REVIEW", "Background"):
            assert normalize_section_title(title) in {
                "related work", "related works", "literature review", "background"}

    def test_near_miss_not_matched(self):
        doc = "x" * 100
        span = SectionSpan("Backgrounds and Motivation", 0, 50)
        assert find_related_work_span(doc, [span]) is None

    def test_no_sections(self):
        assert find_related_work_span("doc", []) is None

    def test_first_match_wins(self):
        doc = "x" * 100
        spans = [SectionSpan("Background", 0, 10), SectionSpan("Related Work", 20, 40)]
        assert find_related_work_span(doc, spans) == spans[0]

    def test_roman_numbering_stripped(self):
        assert normalize_section_title("II. Related Work") == "related work"


def golden_fixture() -> list[dict]:
    """10 raw papers: 6 good, 4 reason-coded casualties."""
    papers = [raw_paper(f"2308.0000{i}") for i in range(1, 7)]
    papers.append(raw_paper("2307.99999"))  # wrong month
    papers.append(raw_paper("2308.00007", rw_title="Methodology"))  # no related-work section
    papers.append(raw_paper("2308.00008", intro="", outro=""))  # context would be empty
    papers.append(raw_paper("2308.00009", citations=[
        {"paper_id": "c9", "title": "No abstract", "publication_date": "2023-01-01"}]))
    return papers


class TestBuildEvalSet:
    def test_golden_fixture_six_examples_four_drops(self):
        result = build_eval_set(golden_fixture(), "2308")
        assert len(result.examples) == 6
        assert result.total_drops == 4
        assert result.drops == {
            "outside_month": 1,
            "no_related_work_section": 1,
            "empty_context": 1,
            "unresolved_citation": 1,
        }

    def test_drop_accounting_exact(self):
        result = build_eval_set(golden_fixture(), "2308")
        assert 10 == len(result.examples) + result.total_drops

    def test_extraction_soundness(self):
        result = build_eval_set([raw_paper("2308.00001")], "2308")
        example = result.examples[0]
        assert example.gt_related_work == "Prior work did things. We differ."
        assert "Prior work" not in example.context
        assert "Intro text here." in example.context
        assert "Conclusion text here." in example.context

    def test_duplicate_arxiv_id_second_dropped(self):
        result = build_eval_set([raw_paper("2308.00001", rid="a"),
                                 raw_paper("2308.00001", rid="b")], "2308")
        assert len(result.examples) == 1
        assert result.drops == {"duplicate_id": 1}

    def test_future_citation_dropped(self):
        paper = raw_paper("2308.00001", citations=[
            {"paper_id": "c1", "abstract": "A.", "publication_date": "2024-01-01"}])
        result = build_eval_set([paper], "2308")
        assert result.drops == {"future_citation": 1}

    def test_no_citations_dropped(self):
        result = build_eval_set([raw_paper("2308.00001", citations=[])], "2308")
        assert result.drops == {"no_citations": 1}

    def test_pool_feasibility_filter(self):
        papers = [raw_paper("2308.00001"), raw_paper("2308.00002")]
        sizes = {"2308.00001": 100, "2308.00002": 40}
        result = build_eval_set(papers, "2308", pool_target=100,
                                pool_size_fn=lambda q: sizes[q.source_id])
        assert len(result.examples) == 1
        assert result.drops == {"pool_underflow": 1}

    def test_output_sorted_by_id(self):
        papers = [raw_paper("2308.00003"), raw_paper("2308.00001"), raw_paper("2308.00002")]
        result = build_eval_set(papers, "2308")
        ids = [e.query.source_id for e in result.examples]
        assert ids == sorted(ids)

    def test_gt_citations_never_after_query_date(self):
        result = build_eval_set(golden_fixture(), "2308")
        for example in result.examples:
            for cited in example.gt_citations:
                assert cited.publication_date < example.query.publication_date

    def test_ndjson_roundtrip(self, tmp_path):
        result = build_eval_set(golden_fixture(), "2308")
        path = tmp_path / "examples.jsonl"
        write_examples(result.examples, path)
        loaded = read_examples(path)
        assert len(loaded) == len(result.examples)
        assert loaded[0].query.source_id == result.examples[0].query.source_id
        assert loaded[0].gt_related_work == result.examples[0].gt_related_work

    def test_reads_ndjson_file(self, tmp_path):
        path = tmp_path / "raw.jsonl"
        with path.open("w") as fh:
            for record in golden_fixture():
                fh.write(json.dumps(record) + "\n")
        result = build_eval_set(path, "2308")
        assert len(result.examples) == 6


class TestStats:
    def test_single_example_means(self):
        paper = raw_paper("2308.00001", rw_text="one two three four five six seven eight nine ten",
                          citations=[
                              {"paper_id": "c1", "abstract": "A.", "publication_date": "2023-01-01"},
                              {"paper_id": "c2", "abstract": "B.", "publication_date": "2023-01-01"}])
        result = build_eval_set([paper], "2308")
        stats = dataset_stats(result.examples)
        assert stats["mean_related_work_words"] == 10
        assert stats["mean_citations"] == 2

    def test_citation_count_mean(self):
        def with_citations(arxiv_id, n):
            return raw_paper(arxiv_id, citations=[
                {"paper_id": f"c{arxiv_id}-{i}", "abstract": "A.",
                 "publication_date": "2023-01-01"} for i in range(n)])

        result = build_eval_set([with_citations("2308.00001", 1),
                                 with_citations("2308.00002", 3)], "2308")
        assert dataset_stats(result.examples)["mean_citations"] == 2

    def test_stats_file_byte_identical_across_runs(self, tmp_path):
        outputs = []
        for run in range(2):
            result = build_eval_set(golden_fixture(), "2308")
            path = tmp_path / f"stats{run}.json"
            write_stats(dataset_stats(result.examples), path)
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1]

    def test_empty_examples_rejected(self):
        with pytest.raises(ValueError):
            dataset_stats([])
