from __future__ import annotations

import json
from pathlib import Path

import pytest

from litreview.cli import main
from litreview.embeddings import hashing_embedder

EMBED_DIM = 16


def write_env(tmp_path: Path, *, generation_strategy: str = "zero_shot",
              gt_text: str | None = None) -> dict:
    """Config + fixtures for offline CLI runs."""
    embed = hashing_embedder(EMBED_DIM, seed=0)
    records = []
    for i in range(40):
        abstract = f"Abstract of paper number {i:03d} about searchable ranking topics."
        records.append({
            "paper_id": f"fx{i:03d}", "title": f"Paper {i:03d}", "abstract": abstract,
            "publication_date": "2023-01-01", "embedding": embed(abstract).tolist(),
        })
    papers = tmp_path / "papers.json"
    papers.write_text(json.dumps(records), encoding="utf-8")
    script = tmp_path / "script.json"
    script.write_text(json.dumps({
        "strict": False,
        "entries": [
            {"match": "short keyword queries", "response": "1. searchable\n2. ranking\n3. topics"},
            {"match": "related-work section", "response":
                "Early systems used @cite_1. Later ones used @cite_2."},
        ],
    }), encoding="utf-8")
    cfg = {
        "backends": [{"kind": "local_fixture", "endpoint": str(papers)}],
        "query_count": 3,
        "pool_target": 20,
        "rerank": {"strategy": "embedding"},
        "generation": {"strategy": generation_strategy},
        "top_k": 2,
        "k_grid": [1, 5, 10],
        "seed": 0,
        "gateway": {"kind": "mock", "script": str(script)},
        "embedding": {"dimension": EMBED_DIM},
        "runs_dir": str(tmp_path / "runs"),
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg), encoding="utf-8")
    abstract_file = tmp_path / "abstract.txt"
    abstract_file.write_text("We study searchable ranking topics for assistance.", encoding="utf-8")
    return {"config": str(cfg_path), "abstract": str(abstract_file), "tmp": tmp_path}


def raw_dataset(tmp_path: Path) -> Path:
    rows = []
    for i in range(1, 4):
        rw = "Foundational work is @cite_1. We build on it."
        intro = "Intro part one. "
        body = intro + rw + " Conclusion part."
        rows.append({
            "id": f"p{i}", "external_ids": {"arxiv": f"2308.0000{i}"},
            "title": f"T{i}",
            "abstract": f"Query abstract {i} about searchable ranking topics.",
            "publication_date": "2023-08-10",
            "body": body,
            "sections": [{"title": "1. Introduction", "start": 0, "end": len(intro)},
                         {"title": "2. Related Work", "start": len(intro),
                          "end": len(intro) + len(rw)}],
            "citations": [{"paper_id": f"gtcite-{i}", "title": "C", "abstract": "Cited abstract.",
                           "publication_date": "2023-01-01"}],
        })
    path = tmp_path / "raw.jsonl"
    path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
    return path


class TestRetrieveGenerateCli:
    def test_retrieve_prints_ranked(self, tmp_path, capsys):
        env = write_env(tmp_path)
        code = main(["retrieve", "--config", env["config"], "--abstract-file", env["abstract"],
                     "--date", "2023-09-01"])
        assert code == 0
        out = capsys.readouterr().out
        assert "run_id: run-" in out
        assert "pool: 20 candidates" in out

    def test_generate_after_retrieve(self, tmp_path, capsys):
        env = write_env(tmp_path)
        main(["retrieve", "--config", env["config"], "--abstract-file", env["abstract"],
              "--date", "2023-09-01"])
        out = capsys.readouterr().out
        run_id = out.split("run_id: ")[1].split()[0]
        runs_dir = Path(json.loads(Path(env["config"]).read_text())["runs_dir"])
        pool = json.loads((runs_dir / run_id / "pool.json").read_text())
        ids = ",".join(p["paper_id"] for p in pool["candidates"][:2])
        code = main(["generate", "--config", env["config"], "--abstract-file", env["abstract"],
                     "--date", "2023-09-01", "--run-id", run_id, "--paper-ids", ids])
        assert code == 0
        assert "@cite_1" in capsys.readouterr().out


class TestDatasetCli:
    def test_build_and_stats(self, tmp_path, capsys):
        raw = raw_dataset(tmp_path)
        out_path = tmp_path / "examples.jsonl"
        code = main(["dataset", "build", "--month", "2308", "--input", str(raw),
                     "--out", str(out_path)])
        assert code == 0
        assert "examples: 3" in capsys.readouterr().out
        stats_path = tmp_path / "stats.json"
        code = main(["dataset", "stats", "--in", str(out_path), "--out", str(stats_path)])
        assert code == 0
        stats = json.loads(stats_path.read_text())
        assert stats["examples"] == 3
        assert stats["mean_citations"] == 1

    def test_build_with_sampling(self, tmp_path, capsys):
        raw = raw_dataset(tmp_path)
        out_path = tmp_path / "sampled.jsonl"
        main(["dataset", "build", "--month", "2308", "--input", str(raw),
              "--out", str(out_path), "--sample", "2", "--seed", "7"])
        lines = [l for l in out_path.read_text().splitlines() if l.strip()]
        assert len(lines) == 2


class TestIndexCli:
    def test_build_query_verify(self, tmp_path, capsys):
        dump1 = tmp_path / "d1.jsonl"
        dump1.write_text('{"paper_id": "a", "vector": [1.0, 0.0]}\n'
                         '{"paper_id": "b", "vector": [0.9, 0.1]}\n', encoding="utf-8")
        dump2 = tmp_path / "d2.jsonl"
        dump2.write_text('{"paper_id": "c", "vector": [0.0, 1.0]}\n', encoding="utf-8")
        shards = tmp_path / "shards"
        assert main(["index", "build", "--dumps", str(dump1), str(dump2),
                     "--out", str(shards)]) == 0
        capsys.readouterr()
        assert main(["index", "query", "--dir", str(shards),
                     "--vector", "[1.0, 0.0]", "--k", "2"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("a\t")
        assert main(["index", "verify", "--dir", str(shards)]) == 0

    def test_verify_detects_corruption(self, tmp_path, capsys):
        dump = tmp_path / "d.jsonl"
        dump.write_text('{"paper_id": "a", "vector": [1.0, 0.0]}\n', encoding="utf-8")
        shards = tmp_path / "shards"
        main(["index", "build", "--dumps", str(dump), "--out", str(shards)])
        idx = shards / "0000.idx"
        blob = bytearray(idx.read_bytes())
        blob[-1] ^= 0xFF
        idx.write_bytes(bytes(blob))
        assert main(["index", "verify", "--dir", str(shards)]) == 1


class TestEvalCli:
    def test_eval_run_retrieval_only(self, tmp_path, capsys):
        env = write_env(tmp_path)
        raw = raw_dataset(tmp_path)
        examples = tmp_path / "examples.jsonl"
        main(["dataset", "build", "--month", "2308", "--input", str(raw), "--out", str(examples)])
        capsys.readouterr()
        out_dir = tmp_path / "report"
        code = main(["eval", "run", "--config", env["config"], "--dataset", str(examples),
                     "--out", str(out_dir), "--plots"])
        assert code == 0
        report = json.loads((out_dir / "report.json").read_text())
        assert len(report["per_query"]) == 3
        assert (out_dir / "report.csv").is_file()
        assert (out_dir / "plots" / "precision.tsv").is_file()

    def test_eval_run_with_generation_plan_given(self, tmp_path, capsys):
        env = write_env(tmp_path, generation_strategy="plan_given")
        raw = raw_dataset(tmp_path)
        examples = tmp_path / "examples.jsonl"
        main(["dataset", "build", "--month", "2308", "--input", str(raw), "--out", str(examples)])
        capsys.readouterr()
        out_dir = tmp_path / "report"
        code = main(["eval", "run", "--config", env["config"], "--dataset", str(examples),
                     "--out", str(out_dir), "--with-generation"])
        assert code == 0
        report = json.loads((out_dir / "report.json").read_text())
        sample = next(iter(report["per_query"].values()))
        assert "coverage" in sample
        assert "rouge1_f1" in sample
        assert "adherence_diff" in sample
