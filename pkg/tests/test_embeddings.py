from __future__ import annotations

import json
import math

import numpy as np
import pytest

from conftest import paper_record
from litreview.embeddings import (ShardIndex, build_shard, build_shards,
                                  hashing_embedder, load_shard,
                                  rank_candidates_by_embedding, save_shard,
                                  topk_global, topk_shard, verify_shards)
from litreview.errors import CorruptDump, DimensionMismatch, NoQueryVector
from litreview.records import CandidateSet, QueryAbstract


def brute_force_topk(records: dict[str, list[float]], query: list[float], k: int):
    """Independent oracle: cosine by plain math, sort by (-score, id)."""
    qnorm = math.sqrt(sum(x * x for x in query))
    scored = []
    for pid, vec in records.items():
        dot = sum(a * b for a, b in zip(vec, query))
        norm = math.sqrt(sum(x * x for x in vec))
        scored.append((dot / (norm * qnorm), pid))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    return scored[:k]


def write_dump(tmp_path, records: dict[str, list[float]], name="dump.jsonl"):
    path = tmp_path / name
    lines = [json.dumps({"paper_id": pid, "vector": vec}) for pid, vec in records.items()]
    path.write_text("\n".join(lines), encoding="utf-8")
    return path


class TestBuildShard:
    def test_build_counts_and_stable_checksum(self, tmp_path):
        records = {"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [0.5, 0.5]}
        shard1 = build_shard(write_dump(tmp_path, records, "d1.jsonl"), 0)
        shard2 = build_shard(write_dump(tmp_path, records, "d2.jsonl"), 0)
        assert shard1.count == 3
        assert shard1.checksum == shard2.checksum

    def test_zero_vector_rejected_with_warning(self, tmp_path):
        records = {"a": [1.0, 0.0], "z": [0.0, 0.0], "b": [0.0, 1.0]}
        shard = build_shard(write_dump(tmp_path, records), 0)
        assert shard.count == 2
        assert any("zero vector" in w for w in shard.warnings)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        path.write_text('{"paper_id": "a", "vector": [1, 0]}\n'
                        '{"paper_id": "a", "vector": [0, 1]}\n', encoding="utf-8")
        shard = build_shard(path, 0)
        assert shard.count == 1
        assert any("duplicate" in w for w in shard.warnings)

    def test_record_order_independence(self, tmp_path):
        records = {"a": [1.0, 0.2], "b": [0.3, 1.0], "c": [0.5, 0.5]}
        reversed_records = dict(reversed(records.items()))
        s1 = build_shard(write_dump(tmp_path, records, "fw.jsonl"), 0)
        s2 = build_shard(write_dump(tmp_path, reversed_records, "bw.jsonl"), 0)
        query = [0.9, 0.1]
        assert topk_shard(s1, query, 3) == topk_shard(s2, query, 3)
        assert s1.checksum == s2.checksum

    def test_dimension_mismatch(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"paper_id": "a", "vector": [1, 0]}\n'
                        '{"paper_id": "b", "vector": [1, 0, 0]}\n', encoding="utf-8")
        with pytest.raises(DimensionMismatch):
            build_shard(path, 0)

    def test_corrupt_dump(self, tmp_path):
        path = tmp_path / "corrupt.jsonl"
        path.write_text("not json at all{", encoding="utf-8")
        with pytest.raises(CorruptDump):
            build_shard(path, 0)

    def test_gz_and_array_formats(self, tmp_path):
        import gzip

        payload = json.dumps([{"id": "a", "embedding": [1.0, 0.0]}])
        path = tmp_path / "dump.json.gz"
        with gzip.open(path, "wt", encoding="utf-8") as fh:
            fh.write(payload)
        shard = build_shard(path, 3)
        assert shard.count == 1 and shard.shard_id == 3


class TestPersistence:
    def test_save_load_roundtrip_and_verify(self, tmp_path):
        records = {"a": [1.0, 0.0, 0.0], "b": [0.0, 1.0, 0.0]}
        shard = build_shard(write_dump(tmp_path, records), 7)
        out = tmp_path / "shards"
        save_shard(shard, out)
        loaded = load_shard(out / "0007.idx")
        assert loaded.ids == shard.ids
        assert loaded.checksum == shard.checksum
        np.testing.assert_array_equal(loaded.matrix, shard.matrix)
        assert verify_shards(out) == {"0007": True}

    def test_verify_detects_corruption(self, tmp_path):
        records = {"a": [1.0, 0.0], "b": [0.0, 1.0]}
        shard = build_shard(write_dump(tmp_path, records), 0)
        out = tmp_path / "shards"
        path = save_shard(shard, out)
        blob = bytearray(path.read_bytes())
        blob[-1] ^= 0xFF  # flip a byte in the id table
        path.write_bytes(bytes(blob))
        assert verify_shards(out) == {"0000": False}


class TestTopkShard:
    def test_exact_match_unit_vector(self, tmp_path):
        records = {"x": [1.0, 0.0], "y": [0.0, 1.0]}
        shard = build_shard(write_dump(tmp_path, records), 0)
        hits = topk_shard(shard, [1.0, 0.0], 1)
        assert hits[0].paper_id == "x"
        assert hits[0].score == pytest.approx(1.0)

    def test_k_larger_than_count_returns_all(self, tmp_path):
        records = {"a": [1.0, 0.0], "b": [0.0, 1.0]}
        shard = build_shard(write_dump(tmp_path, records), 0)
        assert len(topk_shard(shard, [1.0, 1.0], 10)) == 2

    def test_hand_cosine_values(self, tmp_path):
        # query (1,0): cos with (1,0)=1.0, with (0.6,0.8)=0.6, with (0,1)=0.0
        records = {"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [0.6, 0.8]}
        shard = build_shard(write_dump(tmp_path, records), 0)
        hits = topk_shard(shard, [1.0, 0.0], 2)
        assert [h.paper_id for h in hits] == ["a", "c"]
        assert hits[0].score == pytest.approx(1.0)
        assert hits[1].score == pytest.approx(0.6)

    def test_tie_broken_by_ascending_paper_id(self, tmp_path):
        records = {"bbb": [1.0, 0.0], "aaa": [1.0, 0.0]}
        shard = build_shard(write_dump(tmp_path, records), 0)
        hits = topk_shard(shard, [1.0, 0.0], 2)
        assert [h.paper_id for h in hits] == ["aaa", "bbb"]

    def test_query_dimension_checked(self, tmp_path):
        shard = build_shard(write_dump(tmp_path, {"a": [1.0, 0.0]}), 0)
        with pytest.raises(DimensionMismatch):
            topk_shard(shard, [1.0, 0.0, 0.0], 1)

    def test_score_bounds(self, tmp_path):
        rng = np.random.default_rng(0)
        records = {f"p{i}": rng.normal(size=4).tolist() for i in range(50)}
        shard = build_shard(write_dump(tmp_path, records), 0)
        hits = topk_shard(shard, rng.normal(size=4).tolist(), 50)
        assert all(-1.0 - 1e-9 <= h.score <= 1.0 + 1e-9 for h in hits)


def split_into_shards(records: dict[str, list[float]], n_shards: int) -> list[ShardIndex]:
    ids = sorted(records)
    shards = []
    for s in range(n_shards):
        chunk = {pid: records[pid] for i, pid in enumerate(ids) if i % n_shards == s}
        if not chunk:
            continue
        matrix = np.array([chunk[pid] for pid in sorted(chunk)], dtype=np.float64)
        shards.append(ShardIndex(s, sorted(chunk), matrix))
    return shards


class TestTopkGlobal:
    def test_disjoint_shards_merge_sort(self, tmp_path):
        s1 = build_shard(write_dump(tmp_path, {"a": [1.0, 0.0], "b": [0.8, 0.6]}, "s1.jsonl"), 0)
        s2 = build_shard(write_dump(tmp_path, {"c": [0.0, 1.0], "d": [0.6, 0.8]}, "s2.jsonl"), 1)
        hits = topk_global([s1, s2], [1.0, 0.0], 3, per_shard=3)
        assert [h.paper_id for h in hits] == ["a", "b", "d"]

    def test_equals_brute_force_small(self):
        rng = np.random.default_rng(7)
        records = {f"p{i:03d}": rng.normal(size=5).tolist() for i in range(60)}
        shards = split_into_shards(records, 3)
        query = rng.normal(size=5).tolist()
        hits = topk_global(shards, query, 5, per_shard=5)
        oracle = brute_force_topk(records, query, 5)
        assert [h.paper_id for h in hits] == [pid for _, pid in oracle]

    def test_per_shard_one_documented_approximation(self):
        # Both best hits live in shard 0; per_shard=1 must miss the second-best.
        s0 = ShardIndex(0, ["best", "second"], np.array([[1.0, 0.0], [0.99, 0.141]]))
        s1 = ShardIndex(1, ["far"], np.array([[0.0, 1.0]]))
        hits = topk_global([s0, s1], [1.0, 0.0], 2, per_shard=1)
        assert [h.paper_id for h in hits] == ["best", "far"]

    def test_shard_count_invariance(self):
        rng = np.random.default_rng(11)
        records = {f"p{i:03d}": rng.normal(size=6).tolist() for i in range(70)}
        query = rng.normal(size=6).tolist()
        baseline = None
        for n_shards in (1, 2, 7):
            shards = split_into_shards(records, n_shards)
            hits = [(h.paper_id, round(h.score, 12)) for h in
                    topk_global(shards, query, 10, per_shard=10)]
            if baseline is None:
                baseline = hits
            else:
                assert hits == baseline

    def test_exactness_property_randomized(self):
        rng = np.random.default_rng(42)
        for trial in range(200):
            n = int(rng.integers(1, 40))
            d = int(rng.integers(2, 8))
            records = {f"p{i:02d}": rng.normal(size=d).tolist() for i in range(n)}
            n_shards = int(rng.integers(1, 4))
            k = int(rng.integers(1, n + 1))
            query = rng.normal(size=d).tolist()
            shards = split_into_shards(records, n_shards)
            hits = topk_global(shards, query, k, per_shard=k)
            oracle = brute_force_topk(records, query, k)
            assert [h.paper_id for h in hits] == [pid for _, pid in oracle], f"trial {trial}"


class TestHashingEmbedder:
    def test_deterministic(self):
        embed = hashing_embedder(32, seed=1)
        a = embed("graph neural networks")
        b = embed("graph neural networks")
        np.testing.assert_array_equal(a, b)

    def test_unit_norm_and_nonzero(self):
        embed = hashing_embedder(16)
        for text in ("", "one", "completely different words"):
            vec = embed(text)
            assert np.linalg.norm(vec) == pytest.approx(1.0)


class TestRankCandidates:
    def make_pool(self, embeddings: dict[str, list[float] | None]) -> CandidateSet:
        candidates = [paper_record(pid, embedding=vec) for pid, vec in embeddings.items()]
        return CandidateSet(candidates=candidates, provenance={},
                            query=QueryAbstract(text="q", source_id="q1"))

    def test_single_candidate(self):
        pool = self.make_pool({"only": [1.0, 0.0]})
        ranked = rank_candidates_by_embedding([1.0, 0.0], pool)
        assert ranked.ordering == ["only"]
        assert ranked.strategy == "embedding"

    def test_planted_relevant_occupy_top_ranks(self):
        rng = np.random.default_rng(3)
        query = np.array([1.0] + [0.0] * 7)
        embeddings: dict[str, list[float]] = {}
        for i in range(10):  # relevant: near the query direction
            vec = query + rng.normal(scale=0.05, size=8)
            embeddings[f"rel{i:02d}"] = vec.tolist()
        for i in range(90):  # irrelevant: near the opposite direction
            vec = -query + rng.normal(scale=0.05, size=8)
            embeddings[f"irr{i:02d}"] = vec.tolist()
        ranked = rank_candidates_by_embedding(query.tolist(), self.make_pool(embeddings))
        assert all(pid.startswith("rel") for pid in ranked.ordering[:10])

    def test_identical_vectors_tie_by_paper_id(self):
        pool = self.make_pool({"bb": [1.0, 0.0], "aa": [1.0, 0.0]})
        ranked = rank_candidates_by_embedding([1.0, 0.0], pool)
        assert ranked.ordering == ["aa", "bb"]

    def test_missing_embeddings_to_tail_flagged(self):
        pool = self.make_pool({"has": [1.0, 0.0], "none": None})
        ranked = rank_candidates_by_embedding([1.0, 0.0], pool)
        assert ranked.ordering == ["has", "none"]
        assert ranked.evidence["none"].flags == ("no_embedding",)

    def test_abstract_query_requires_embedder(self):
        pool = self.make_pool({"a": [1.0, 0.0]})
        with pytest.raises(NoQueryVector):
            rank_candidates_by_embedding(QueryAbstract(text="q"), pool)

    def test_abstract_query_with_embedder(self):
        embed = hashing_embedder(2)
        pool = self.make_pool({"a": [1.0, 0.0], "b": [0.0, 1.0]})
        ranked = rank_candidates_by_embedding(QueryAbstract(text="q", source_id="qq"), pool, embed)
        assert len(ranked.ordering) == 2
        assert ranked.query_id == "qq"

    def test_evidence_scores_in_unit_interval(self):
        pool = self.make_pool({"a": [1.0, 0.0], "b": [-1.0, 0.0]})
        ranked = rank_candidates_by_embedding([1.0, 0.0], pool)
        assert ranked.evidence["a"].score == pytest.approx(1.0)
        assert ranked.evidence["b"].score == pytest.approx(0.0)


class TestBuildShardsConcurrent:
    def test_parallel_build_matches_sources(self, tmp_path):
        sources = []
        for i in range(5):
            sources.append(write_dump(tmp_path, {f"s{i}a": [1.0, float(i)]}, f"d{i}.jsonl"))
        shards = build_shards(sources, out_dir=tmp_path / "out", max_workers=3)
        assert [s.shard_id for s in shards] == [0, 1, 2, 3, 4]
        assert verify_shards(tmp_path / "out") == {f"{i:04d}": True for i in range(5)}
