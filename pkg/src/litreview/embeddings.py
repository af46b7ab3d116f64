"""Sharded exact nearest-neighbor search over precomputed paper embeddings.

Each shard is built from one embedding dump file, persisted in a compact
binary format with a checksummed manifest, and searched exactly (dot product
cosine). Global top-k merges per-shard top lists and re-sorts by raw cosine;
ties always break by ascending paper id so results are reproducible.

Query abstracts have no precomputed embedding in offline mode; an injectable
embedding provider maps text to a vector, and tests use the deterministic
hash-based provider below.
"""
from __future__ import annotations

import gzip
import hashlib
import json
import logging
import re
import struct
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import CorruptDump, DimensionMismatch, NoQueryVector
from .ranked import NeighborHit, RankedList, RankEvidence
from .records import CandidateSet, QueryAbstract

logger = logging.getLogger(__name__)

_MAGIC = b"LRSHRD01"

Vector = Union[Sequence[float], np.ndarray]
Embedder = Callable[[str], np.ndarray]


class ShardIndex:
    """Immutable in-memory shard: ids, vector matrix, cached norms."""

    def __init__(self, shard_id: int, ids: list[str], matrix: np.ndarray,
                 warnings: Optional[list[str]] = None) -> None:
        self.shard_id = shard_id
        self.ids = ids
        self.matrix = matrix
        self.norms = np.linalg.norm(matrix, axis=1) if len(ids) else np.zeros(0)
        self.warnings = warnings or []
        self.checksum = _checksum(ids, matrix)

    @property
    def count(self) -> int:
        return len(self.ids)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[1] if self.matrix.size else 0

    def manifest(self) -> dict:
        return {"count": self.count, "d": self.dimension, "checksum": self.checksum}


def _checksum(ids: list[str], matrix: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(matrix, dtype="<f8").tobytes())
    h.update("\n".join(ids).encode("utf-8"))
    return h.hexdigest()


def _iter_dump_records(path: Path):
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        with opener(path, "rt", encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise CorruptDump(f"{path}: {exc}") from exc
    text = text.strip()
    if not text:
        return
    try:
        if text.startswith("["):
            yield from json.loads(text)
        else:
            for line in text.splitlines():
                if line.strip():
                    yield json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorruptDump(f"{path}: {exc}") from exc


def build_shard(source: Union[str, Path], shard_id: int,
                out_dir: Optional[Union[str, Path]] = None) -> ShardIndex:
    """Parse one embedding dump into a shard, optionally persisting it.

    Records are sorted by paper id so the shard checksum is independent of
    dump order. Zero vectors and duplicate ids are rejected with a warning;
    inconsistent dimensions are fatal.
    """
    path = Path(source)
    seen: dict[str, np.ndarray] = {}
    warnings: list[str] = []
    dim: Optional[int] = None
    for raw in _iter_dump_records(path):
        if not isinstance(raw, dict):
            raise CorruptDump(f"{path}: record is not an object: {raw!r}")
        paper_id = str(raw.get("paper_id") or raw.get("id") or raw.get("corpus_id") or "")
        vector = raw.get("vector") if raw.get("vector") is not None else raw.get("embedding")
        if not paper_id or vector is None:
            raise CorruptDump(f"{path}: record missing paper_id or vector")
        vec = np.asarray(vector, dtype=np.float64)
        if vec.ndim != 1:
            raise CorruptDump(f"{path}: vector for {paper_id} is not 1-D")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise DimensionMismatch(
                f"{path}: vector for {paper_id} has dimension {vec.shape[0]}, expected {dim}"
            )
        if not np.any(vec):
            warnings.append(f"rejected zero vector for {paper_id}")
            continue
        if paper_id in seen:
            warnings.append(f"rejected duplicate paper_id {paper_id}")
            continue
        seen[paper_id] = vec
    for message in warnings:
        logger.warning("%s: %s", path.name, message)
    ids = sorted(seen)
    matrix = np.stack([seen[i] for i in ids]) if ids else np.zeros((0, dim or 0))
    shard = ShardIndex(shard_id, ids, matrix, warnings)
    if out_dir is not None:
        save_shard(shard, Path(out_dir))
    return shard


def build_shards(sources: Sequence[Union[str, Path]], out_dir: Optional[Union[str, Path]] = None,
                 max_workers: int = 4) -> list[ShardIndex]:
    """Build one shard per dump file, concurrently (one worker per shard)."""
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        shards = list(pool.map(lambda sv: build_shard(sv[1], sv[0]), enumerate(sources)))
    if out_dir is not None:
        for shard in shards:
            save_shard(shard, Path(out_dir))
    return shards


def _shard_path(directory: Path, shard_id: int) -> Path:
    return directory / f"{shard_id:04d}.idx"


def save_shard(shard: ShardIndex, directory: Union[str, Path]) -> Path:
    """Persist as NNNN.idx (binary) and update manifest.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = _shard_path(directory, shard.shard_id)
    vec_block = np.ascontiguousarray(shard.matrix, dtype="<f8").tobytes()
    id_block = "\n".join(shard.ids).encode("utf-8")
    header = _MAGIC + struct.pack("<IIQ", shard.shard_id, shard.dimension, shard.count)
    with path.open("wb") as fh:
        fh.write(header)
        fh.write(bytes.fromhex(shard.checksum))
        fh.write(struct.pack("<Q", len(id_block)))
        fh.write(vec_block)
        fh.write(id_block)
    manifest_path = directory / "manifest.json"
    manifest = {"shards": {}, "dimension": shard.dimension}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    manifest["dimension"] = shard.dimension
    manifest.setdefault("shards", {})[f"{shard.shard_id:04d}"] = shard.manifest()
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


def load_shard(path: Union[str, Path]) -> ShardIndex:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:8] != _MAGIC:
        raise CorruptDump(f"{path}: bad magic")
    try:
        shard_id, d, count = struct.unpack("<IIQ", blob[8:24])
        checksum = blob[24:56].hex()
        (id_len,) = struct.unpack("<Q", blob[56:64])
        vec_bytes = count * d * 8
        matrix = np.frombuffer(blob[64:64 + vec_bytes], dtype="<f8").reshape(count, d).astype(np.float64)
        id_block = blob[64 + vec_bytes:64 + vec_bytes + id_len].decode("utf-8")
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise CorruptDump(f"{path}: {exc}") from exc
    ids = id_block.split("\n") if id_block else []
    if len(ids) != count:
        raise CorruptDump(f"{path}: id table holds {len(ids)} entries, header says {count}")
    shard = ShardIndex(int(shard_id), ids, matrix)
    if shard.checksum != checksum:
        raise CorruptDump(f"{path}: checksum mismatch")
    return shard


def verify_shards(directory: Union[str, Path]) -> dict[str, bool]:
    """Checksum sweep: recompute each shard's checksum against the manifest."""
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    results: dict[str, bool] = {}
    for name, meta in sorted(manifest.get("shards", {}).items()):
        try:
            shard = load_shard(directory / f"{name}.idx")
            results[name] = shard.checksum == meta["checksum"] and shard.count == meta["count"]
        except (CorruptDump, OSError):
            results[name] = False
    return results


def _as_query_vector(query_vector: Vector, dimension: int) -> np.ndarray:
    qv = np.asarray(query_vector, dtype=np.float64)
    if qv.ndim != 1 or qv.shape[0] != dimension:
        raise DimensionMismatch(
            f"query vector has shape {qv.shape}, store dimension is {dimension}"
        )
    if not np.any(qv):
        raise ValueError("query vector is all zeros")
    return qv


def topk_shard(shard: ShardIndex, query_vector: Vector, k: int) -> list[NeighborHit]:
    """Exact top-k of one shard: descending cosine, ties by ascending paper id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if shard.count == 0:
        return []
    qv = _as_query_vector(query_vector, shard.dimension)
    scores = shard.matrix @ qv / (shard.norms * float(np.linalg.norm(qv)))
    order = sorted(range(shard.count), key=lambda i: (-scores[i], shard.ids[i]))
    return [NeighborHit(shard.ids[i], float(scores[i]), shard.shard_id) for i in order[:k]]


def topk_global(shards: Sequence[ShardIndex], query_vector: Vector, k: int,
                per_shard: int) -> list[NeighborHit]:
    """Merge per-shard top lists into a global list re-sorted by raw cosine.

    Exact when per_shard >= k; smaller per_shard is a documented approximation
    that can miss hits concentrated in one shard.
    """
    if per_shard < 1:
        raise ValueError("per_shard must be >= 1")
    hits: dict[str, NeighborHit] = {}
    for shard in shards:
        for hit in topk_shard(shard, query_vector, per_shard):
            kept = hits.get(hit.paper_id)
            if kept is None or (hit.score, -hit.shard_id) > (kept.score, -kept.shard_id):
                hits[hit.paper_id] = hit
    merged = sorted(hits.values(), key=lambda h: (-h.score, h.paper_id))
    return merged[:k]


def hashing_embedder(dimension: int = 64, seed: int = 0) -> Embedder:
    """Deterministic text-to-vector provider (feature hashing, unit norm)."""
    token_re = re.compile(r"[a-z0-9]+")

    def embed(text: str) -> np.ndarray:
        vec = np.zeros(dimension, dtype=np.float64)
        for token in token_re.findall(text.lower()):
            digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
            idx = int.from_bytes(digest[:4], "little") % dimension
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[idx] += sign
        if not np.any(vec):
            vec[0] = 1.0
        return vec / np.linalg.norm(vec)

    return embed


def rank_candidates_by_embedding(query: Union[QueryAbstract, Vector], pool: CandidateSet,
                                 embedder: Optional[Embedder] = None) -> RankedList:
    """Sort a candidate pool by cosine similarity to the query vector.

    Candidates without an embedding go to the tail, flagged. Evidence scores
    rescale cosine to [0,1] via (cos+1)/2, which preserves the ordering.
    """
    if isinstance(query, QueryAbstract):
        if embedder is None:
            raise NoQueryVector("no embedding provider configured for the query abstract")
        qv = np.asarray(embedder(query.text), dtype=np.float64)
        query_id = query.query_id
    else:
        qv = np.asarray(query, dtype=np.float64)
        query_id = pool.query.query_id if pool.query is not None else "q-unknown"
    if qv.ndim != 1 or not np.any(qv):
        raise NoQueryVector("query vector is missing or all zeros")
    qnorm = float(np.linalg.norm(qv))

    scored: list[tuple[float, str]] = []
    missing: list[str] = []
    for record in pool.candidates:
        if record.embedding is None:
            missing.append(record.paper_id)
            continue
        vec = np.asarray(record.embedding, dtype=np.float64)
        if vec.shape != qv.shape:
            raise DimensionMismatch(
                f"candidate {record.paper_id} embedding has shape {vec.shape}, query {qv.shape}"
            )
        denominator = float(np.linalg.norm(vec)) * qnorm
        if denominator == 0.0:
            missing.append(record.paper_id)
            continue
        scored.append((float(vec @ qv / denominator), record.paper_id))
    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    missing.sort()

    ordering = [pid for _, pid in scored] + missing
    evidence = {
        pid: RankEvidence(score=(cos + 1.0) / 2.0)
        for cos, pid in scored
    }
    for pid in missing:
        evidence[pid] = RankEvidence(score=0.0, flags=("no_embedding",))
    return RankedList(query_id=query_id, ordering=ordering, evidence=evidence, strategy="embedding")
