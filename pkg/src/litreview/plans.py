"""The sentence-plan grammar: delexicalized citation keys, plan rendering and
parsing, and plan derivation from ground-truth text.

A plan fixes the sentence count, a word budget, and which citation keys must
appear on which lines, e.g.:

    Please generate 5 sentences in 60 words. Cite @cite_1 at line 1, 3 and 5.

render_plan and parse_plan are exact inverses on valid plans; the citation
token expression here is the single source of truth for every key extraction
in the pipeline (generation, coverage, relexicalization).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import MalformedPlan
from .textproc import split_sentences, word_count

# "@cite_" + digits, word-boundary terminated.
CITATION_PATTERN = re.compile(r"@cite_(\d+)\b")


@dataclass(frozen=True, order=True)
class CitationKey:
    index: int

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("citation key index must be positive")

    def __str__(self) -> str:
        return f"@cite_{self.index}"

    @classmethod
    def parse(cls, token: str) -> "CitationKey":
        match = CITATION_PATTERN.fullmatch(token.strip())
        if not match:
            raise ValueError(f"not a citation key: {token!r}")
        return cls(int(match.group(1)))


def extract_keys(text: str) -> list[CitationKey]:
    """All citation keys in the text, in occurrence order, repeats kept."""
    return [CitationKey(int(m)) for m in CITATION_PATTERN.findall(text)]


def dense_keys(count: int) -> list[CitationKey]:
    return [CitationKey(i) for i in range(1, count + 1)]


@dataclass
class SentencePlan:
    num_sentences: int
    num_words: int
    assignments: dict[int, frozenset[CitationKey]] = field(default_factory=dict)
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.num_sentences < 1:
            raise ValueError("num_sentences must be positive")
        if self.num_words < 1:
            raise ValueError("num_words must be positive")

    def keys(self) -> set[CitationKey]:
        out: set[CitationKey] = set()
        for assigned in self.assignments.values():
            out |= assigned
        return out

    def lines_for(self, key: CitationKey) -> list[int]:
        return sorted(line for line, keys in self.assignments.items() if key in keys)

    def validate(self, keys: set[CitationKey]) -> None:
        """Check line ranges, key membership and full key usage."""
        for line, assigned in self.assignments.items():
            if not 1 <= line <= self.num_sentences:
                raise MalformedPlan(f"line {line} out of range 1..{self.num_sentences}")
            unknown = assigned - keys
            if unknown:
                raise MalformedPlan(f"unknown citation keys: {sorted(map(str, unknown))}")
        never_cited = keys - self.keys()
        if never_cited:
            raise MalformedPlan(f"keys never cited: {sorted(map(str, never_cited))}")

    def to_json(self) -> dict:
        return {
            "num_sentences": self.num_sentences,
            "num_words": self.num_words,
            "assignments": {str(line): sorted(k.index for k in keys)
                            for line, keys in sorted(self.assignments.items())},
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, raw: dict) -> "SentencePlan":
        return cls(
            num_sentences=raw["num_sentences"],
            num_words=raw["num_words"],
            assignments={int(line): frozenset(CitationKey(i) for i in keys)
                         for line, keys in raw.get("assignments", {}).items()},
            flags=tuple(raw.get("flags", ())),
        )


def _render_lines(lines: list[int]) -> str:
    if len(lines) == 1:
        return str(lines[0])
    return ", ".join(str(n) for n in lines[:-1]) + " and " + str(lines[-1])


def render_plan(plan: SentencePlan) -> str:
    """Render the canonical plan string: counts clause, then one Cite clause
    per citation key (keys ascending, lines ascending)."""
    parts = [f"Please generate {plan.num_sentences} sentences in {plan.num_words} words."]
    for key in sorted(plan.keys()):
        lines = plan.lines_for(key)
        parts.append(f"Cite {key} at line {_render_lines(lines)}.")
    return " ".join(parts)


_COUNTS_RE = re.compile(
    r"Please generate\s+(\d+)\s+sentences?\s+in\s+(\d+)\s+words?\s*\.", re.IGNORECASE)
_CITE_RE = re.compile(
    r"Cite\s+(@cite_\d+)\s+at\s+lines?\s+(\d+(?:\s*(?:,|and)\s*\d+)*)\s*\.?", re.IGNORECASE)


def parse_plan(s: str, keys: set[CitationKey]) -> SentencePlan:
    """Inverse of render_plan; tolerates comma- and and-joined line lists.

    Raises MalformedPlan when the counts clause is missing, a line is out of
    range, a clause names an unknown key, or a provided key is never cited.
    """
    if not s.strip():
        raise MalformedPlan("empty plan string")
    counts = _COUNTS_RE.search(s)
    if not counts:
        raise MalformedPlan("missing 'Please generate S sentences in W words.' clause")
    num_sentences, num_words = int(counts.group(1)), int(counts.group(2))
    if num_sentences < 1 or num_words < 1:
        raise MalformedPlan("sentence and word counts must be positive")
    assignments: dict[int, set[CitationKey]] = {}
    for clause in _CITE_RE.finditer(s):
        key = CitationKey.parse(clause.group(1))
        for line_text in re.findall(r"\d+", clause.group(2)):
            assignments.setdefault(int(line_text), set()).add(key)
    plan = SentencePlan(
        num_sentences=num_sentences,
        num_words=num_words,
        assignments={line: frozenset(ks) for line, ks in assignments.items()},
    )
    plan.validate(keys)
    return plan


def round_to_ten(n: int) -> int:
    """Round half-up to the nearest 10, never below 10."""
    return max(10, (n + 5) // 10 * 10)


def derive_plan_from_ground_truth(gt_related_work: str, keys: set[CitationKey]) -> SentencePlan:
    """Build the teacher-forced plan that the ground-truth text follows.

    Sentence count and (rounded) word budget come from the text; each line's
    assignment is the set of keys cited in that sentence. When no key appears
    at all the plan is still returned, with empty assignments and a
    'no_citations' flag.
    """
    sentences = split_sentences(gt_related_work)
    if not sentences:
        raise ValueError("ground-truth text has no sentences")
    assignments: dict[int, frozenset[CitationKey]] = {}
    for line, sentence in enumerate(sentences, start=1):
        found = {k for k in extract_keys(sentence) if k in keys}
        if found:
            assignments[line] = frozenset(found)
    flags = () if assignments else ("no_citations",)
    return SentencePlan(
        num_sentences=len(sentences),
        num_words=round_to_ten(word_count(gt_related_work)),
        assignments=assignments,
        flags=flags,
    )
