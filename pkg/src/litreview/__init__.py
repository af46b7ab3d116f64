"""Literature-review assistance engine: keyword+embedding retrieval, LLM
re-ranking with attribution, plan-controlled related-work generation, and the
metrics to evaluate every stage offline."""

__version__ = "0.1.0"
