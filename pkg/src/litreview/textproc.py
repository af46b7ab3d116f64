"""Small text utilities: sentence splitting, word counts, whitespace normalization.

The sentence splitter is rule-based (terminal punctuation plus an abbreviation
list) and injectable wherever it is used, so callers can swap in a model-based
splitter without touching the rest of the pipeline.
"""
from __future__ import annotations

import math
import re

# Abbreviations that a terminal period must not split on.
_ABBREVIATIONS = frozenset({
    "e.g", "i.e", "etc", "cf", "vs", "al", "fig", "figs", "eq", "eqs",
    "sec", "no", "dr", "mr", "mrs", "ms", "prof", "st", "approx", "resp",
})

_SENTENCE_END = re.compile(r"([.!?])(\s+|$)")
_WS_RUN = re.compile(r"\s+")


def normalize_whitespace(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim."""
    return _WS_RUN.sub(" ", text).strip()


def word_count(text: str) -> int:
    return len(text.split())


def estimate_tokens(text: str) -> int:
    """Whitespace word count scaled by 4/3, rounded up. Advisory only."""
    words = word_count(text)
    return math.ceil(words * 4 / 3)


def _ends_with_abbreviation(chunk: str) -> bool:
    tail = chunk.rstrip(".").rsplit(maxsplit=1)
    if not tail:
        return False
    last = tail[-1].lower().rstrip(".")
    # "e.g." style tokens keep internal dots after the rstrip above.
    return last in _ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Split text into sentences on terminal punctuation.

    A period after a known abbreviation does not split. Newlines are treated
    as plain whitespace. Returns stripped, non-empty sentences; the input is
    recoverable modulo whitespace normalization.
    """
    text = normalize_whitespace(text)
    if not text:
        return []
    sentences: list[str] = []
    start = 0
    for match in _SENTENCE_END.finditer(text):
        end = match.end(1)
        chunk = text[start:end]
        if match.group(1) == "." and _ends_with_abbreviation(chunk):
            continue
        chunk = chunk.strip()
        if chunk:
            sentences.append(chunk)
        start = match.end()
    rest = text[start:].strip()
    if rest:
        sentences.append(rest)
    return sentences
