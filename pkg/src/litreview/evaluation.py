"""Evaluation metrics for both pipeline stages.

Retrieval: Precision@k and Normalized Recall@k, where normalized recall
divides by the number of relevant papers that were retrieved at all (not by
the full ground truth), isolating ranking quality from retrieval coverage.
Classic recall is kept as a companion.

Generation: citation coverage (exact key-set match via the delexicalized
citation expression), plan adherence (generated minus planned line counts;
negative means fewer lines than planned), and an in-house ROUGE-1/2/L.

ROUGE tokenization is pinned by specification: lowercase, split on
non-alphanumerics, no stemming. Different implementations are known to
disagree, so the rules live here and nowhere else.
"""
from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .errors import AlignmentError, UndefinedMetric
from .generation import GeneratedReview
from .plans import CITATION_PATTERN, CitationKey, SentencePlan

DEFAULT_K_GRID = (1, 5, 10, 20, 40, 60, 80, 100)


@dataclass(frozen=True)
class RetrievalJudgment:
    retrieved: tuple[str, ...]  # ranked paper ids, best first, duplicate-free
    ground_truth: frozenset[str]

    def __post_init__(self) -> None:
        if len(set(self.retrieved)) != len(self.retrieved):
            raise ValueError("retrieved list contains duplicates")

    @classmethod
    def of(cls, retrieved, ground_truth) -> "RetrievalJudgment":
        return cls(tuple(retrieved), frozenset(ground_truth))

    def hits_at(self, k: int) -> int:
        return sum(1 for pid in self.retrieved[:k] if pid in self.ground_truth)

    @property
    def relevant_retrieved(self) -> int:
        return sum(1 for pid in self.retrieved if pid in self.ground_truth)


def precision_at_k(j: RetrievalJudgment, k: int) -> float:
    """|top-k ∩ GT| / k. The divisor stays k even when fewer were retrieved."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return j.hits_at(k) / k


def normalized_recall_at_k(j: RetrievalJudgment, k: int) -> float:
    """|top-k ∩ GT| / |retrieved ∩ GT|; undefined when nothing relevant was
    retrieved at any rank."""
    if k < 1:
        raise ValueError("k must be >= 1")
    denominator = j.relevant_retrieved
    if denominator == 0:
        raise UndefinedMetric("no ground-truth paper was retrieved at any rank")
    return j.hits_at(k) / denominator


def classic_recall(j: RetrievalJudgment, k: Optional[int] = None) -> float:
    """|top-k ∩ GT| / |GT| (full list when k is omitted)."""
    if not j.ground_truth:
        raise UndefinedMetric("empty ground truth")
    hits = j.hits_at(k) if k is not None else j.relevant_retrieved
    return hits / len(j.ground_truth)


# --- generation metrics ---

def coverage(review: GeneratedReview, gt_keys: set[CitationKey]) -> tuple[bool, set[CitationKey]]:
    """Exact-set citation coverage.

    found = distinct keys matched in the review text by the delexicalized
    citation expression; covered iff found equals the ground-truth key set.
    Spurious keys therefore break coverage and remain visible in found.
    """
    found = {CitationKey(int(m)) for m in CITATION_PATTERN.findall(review.text)}
    return found == set(gt_keys), found


class AdherenceRecord(NamedTuple):
    planned_lines: int
    generated_lines: int
    diff: int  # generated - planned; negative = fewer lines than planned

    @property
    def exact(self) -> bool:
        return self.diff == 0


def plan_adherence(review: GeneratedReview, plan: SentencePlan) -> AdherenceRecord:
    generated = len(review.sentences)
    return AdherenceRecord(
        planned_lines=plan.num_sentences,
        generated_lines=generated,
        diff=generated - plan.num_sentences,
    )


# --- ROUGE ---

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def rouge_tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class RougeScore(NamedTuple):
    precision: float
    recall: float
    f1: float
    empty: bool = False


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            current.append(previous[j - 1] + 1 if x == y else max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge(reference: str, hypothesis: str, variant: str | int = 1) -> RougeScore:
    """ROUGE-1, ROUGE-2 (clipped n-gram overlap) or ROUGE-L (LCS).

    Either side tokenizing to nothing yields all zeros with the empty flag.
    """
    variant = str(variant).upper()
    if variant not in ("1", "2", "L"):
        raise ValueError(f"unknown ROUGE variant {variant!r}")
    ref_tokens = rouge_tokenize(reference)
    hyp_tokens = rouge_tokenize(hypothesis)
    if not ref_tokens or not hyp_tokens:
        return RougeScore(0.0, 0.0, 0.0, empty=True)
    if variant == "L":
        lcs = _lcs_length(ref_tokens, hyp_tokens)
        precision = lcs / len(hyp_tokens)
        recall = lcs / len(ref_tokens)
        return RougeScore(precision, recall, _f1(precision, recall))
    n = int(variant)
    ref_counts = _ngrams(ref_tokens, n)
    hyp_counts = _ngrams(hyp_tokens, n)
    if not ref_counts or not hyp_counts:
        return RougeScore(0.0, 0.0, 0.0, empty=True)
    overlap = sum((ref_counts & hyp_counts).values())  # clipped counts
    precision = overlap / sum(hyp_counts.values())
    recall = overlap / sum(ref_counts.values())
    return RougeScore(precision, recall, _f1(precision, recall))


# --- report building ---

@dataclass
class ReviewJudgment:
    """Inputs for generation metrics on one query."""

    review: GeneratedReview
    gt_text: str
    gt_keys: frozenset[CitationKey]


@dataclass
class MetricReport:
    per_query: dict[str, dict[str, float]]
    aggregates: dict[str, dict[str, float]]  # metric -> {mean, stddev, count}
    k_grid: tuple[int, ...]
    excluded: dict[str, int] = field(default_factory=dict)  # metric -> undefined count

    def to_json(self) -> dict:
        return {
            "version": 1,
            "k_grid": list(self.k_grid),
            "per_query": self.per_query,
            "aggregates": self.aggregates,
            "excluded": self.excluded,
        }

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["query_id", "metric", "value"])
        for query_id in sorted(self.per_query):
            metrics = self.per_query[query_id]
            for metric in sorted(metrics):
                writer.writerow([query_id, metric, repr(metrics[metric])])
        return buffer.getvalue()

    def plot_data(self, metric_prefix: str) -> list[tuple[int, float]]:
        """(k, mean) points for curve plotting, e.g. prefix 'precision@'."""
        points = []
        for k in self.k_grid:
            name = f"{metric_prefix}{k}"
            if name in self.aggregates:
                points.append((k, self.aggregates[name]["mean"]))
        return points


def _mean_std(values: list[float]) -> dict[str, float]:
    n = len(values)
    mean = sum(values) / n
    variance = sum((v - mean) ** 2 for v in values) / n
    return {"mean": mean, "stddev": variance ** 0.5, "count": n}


def build_report(judgments: dict[str, RetrievalJudgment],
                 reviews: Optional[dict[str, ReviewJudgment]] = None,
                 plans: Optional[dict[str, SentencePlan]] = None,
                 k_grid: tuple[int, ...] = DEFAULT_K_GRID) -> MetricReport:
    """Per-query and aggregate metrics over aligned inputs.

    reviews and plans may be omitted; when given, their query ids must exist
    in judgments (plans additionally in reviews). Undefined normalized recall
    is excluded from aggregates and counted, never zero-filled.
    """
    if not judgments:
        raise AlignmentError("no judgments provided")
    reviews = reviews or {}
    plans = plans or {}
    stray = set(reviews) - set(judgments)
    if stray:
        raise AlignmentError(f"review ids not in judgments: {sorted(stray)}")
    stray = set(plans) - set(reviews)
    if stray:
        raise AlignmentError(f"plan ids not in reviews: {sorted(stray)}")

    per_query: dict[str, dict[str, float]] = {}
    excluded: dict[str, int] = {}
    for query_id in sorted(judgments):
        j = judgments[query_id]
        metrics: dict[str, float] = {}
        for k in k_grid:
            metrics[f"precision@{k}"] = precision_at_k(j, k)
            try:
                metrics[f"normalized_recall@{k}"] = normalized_recall_at_k(j, k)
            except UndefinedMetric:
                name = f"normalized_recall@{k}"
                excluded[name] = excluded.get(name, 0) + 1
        if query_id in reviews:
            rj = reviews[query_id]
            covered, _found = coverage(rj.review, set(rj.gt_keys))
            metrics["coverage"] = 1.0 if covered else 0.0
            for variant in ("1", "2", "L"):
                metrics[f"rouge{variant}_f1"] = rouge(rj.gt_text, rj.review.text, variant).f1
            if query_id in plans:
                record = plan_adherence(rj.review, plans[query_id])
                metrics["adherence_diff"] = float(record.diff)
                metrics["adherence_exact"] = 1.0 if record.exact else 0.0
        per_query[query_id] = metrics

    names = sorted({name for metrics in per_query.values() for name in metrics})
    aggregates = {
        name: _mean_std([m[name] for m in per_query.values() if name in m])
        for name in names
    }
    return MetricReport(per_query=per_query, aggregates=aggregates,
                        k_grid=tuple(k_grid), excluded=excluded)


def write_report(report: MetricReport, json_path, csv_path=None,
                 plot_dir=None) -> None:
    from pathlib import Path

    Path(json_path).write_text(json.dumps(report.to_json(), indent=2, sort_keys=True),
                               encoding="utf-8")
    if csv_path is not None:
        Path(csv_path).write_text(report.to_csv(), encoding="utf-8")
    if plot_dir is not None:
        plot_dir = Path(plot_dir)
        plot_dir.mkdir(parents=True, exist_ok=True)
        for prefix, stem in (("precision@", "precision"), ("normalized_recall@", "normalized_recall")):
            points = report.plot_data(prefix)
            lines = "\n".join(f"{k}\t{mean!r}" for k, mean in points)
            (plot_dir / f"{stem}.tsv").write_text(lines + "\n", encoding="utf-8")
