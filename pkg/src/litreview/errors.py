"""Exception types shared across the pipeline.

Stage-level orchestration wraps these in ``StageError`` so callers and the
HTTP layer can report which pipeline stage failed.
"""
from __future__ import annotations


class LitReviewError(Exception):
    """Base class for all package errors."""


# --- gateway ---

class ProviderUnavailable(LitReviewError):
    """Remote completion provider failed after retries were exhausted."""


class MockMiss(LitReviewError):
    """A scripted mock had no entry matching the request."""


class BudgetExceeded(LitReviewError):
    """The per-run token budget was crossed."""

    def __init__(self, consumed: int, limit: int) -> None:
        super().__init__(f"token budget exceeded: consumed {consumed} of {limit}")
        self.consumed = consumed
        self.limit = limit


# --- query generation ---

class UnparseableResponse(LitReviewError):
    """LLM output could not be parsed into the required number of queries."""


# --- retrieval ---

class BackendUnavailable(LitReviewError):
    """A search backend could not be reached or answered with an error."""


class EmptyInput(LitReviewError):
    """All merge input lists were empty."""


class PoolUnderflow(LitReviewError):
    """Candidate union was smaller than the pool target (reported, not fatal)."""

    def __init__(self, achieved: int, target: int) -> None:
        super().__init__(f"pool underflow: {achieved} of {target} candidates")
        self.achieved = achieved
        self.target = target


# --- embedding store ---

class DimensionMismatch(LitReviewError):
    """Vector dimension differs from the store's fixed dimension."""


class CorruptDump(LitReviewError):
    """Embedding dump or shard file could not be parsed."""


class NoQueryVector(LitReviewError):
    """No embedding available for the query abstract."""


# --- reranking ---

class UnparseableVerdict(LitReviewError):
    """Debate response yielded no inclusion probability after retries."""


# --- plans / generation ---

class MalformedPlan(LitReviewError):
    """Plan string violates the plan grammar or its key/line constraints."""


class PlanMissing(LitReviewError):
    """plan_given generation requested without a plan."""


class UnknownKeyInText(LitReviewError):
    """Text contains a citation key absent from the relexicalization mapping."""


# --- evaluation ---

class UndefinedMetric(LitReviewError):
    """Metric has a zero denominator for this judgment (e.g. no relevant retrieved)."""


class AlignmentError(LitReviewError):
    """Report inputs are not aligned by query id."""


# --- dataset ---

class IngestError(LitReviewError):
    """A raw record could not be ingested (collected per record, non-fatal)."""


# --- orchestration ---

class StageError(LitReviewError):
    """Wraps a module error with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception) -> None:
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
