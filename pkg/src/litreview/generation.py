"""Related-work generation under five prompting strategies.

Strategies differ only in prompt construction and call structure:

  zero_shot            one completion, no structural guidance
  plan_given           one completion, rendered sentence plan appended
  plan_learned         one completion; the model writes its own plan first,
                       which is parsed back out as plan_echo
  per_cite             one completion per citation key, then one summarize call
  sentence_by_sentence one completion per key, each conditioned on the draft

Citation keys stay delexicalized (@cite_k) end to end; extraction uses the
same expression as coverage scoring, and keys outside the request's set are
surfaced as hallucination flags, never dropped.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional

from .errors import PlanMissing, UnknownKeyInText
from .gateway import CompletionRequest, LlmGateway
from .plans import (CITATION_PATTERN, CitationKey, SentencePlan, extract_keys,
                    parse_plan)
from .plans import render_plan as render_plan_text
from .prompts import render
from .textproc import split_sentences

STRATEGIES = ("zero_shot", "plan_given", "plan_learned", "per_cite", "sentence_by_sentence")

Splitter = Callable[[str], list[str]]


@dataclass
class GenerationRequest:
    query_abstract: str
    references: dict[CitationKey, str]
    strategy: str = "zero_shot"
    plan: Optional[SentencePlan] = None

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if not self.references:
            raise ValueError("references must be non-empty")
        indices = sorted(k.index for k in self.references)
        if indices != list(range(1, len(indices) + 1)):
            raise ValueError(f"citation keys must be dense 1..K, got {indices}")
        if self.strategy == "plan_given":
            if self.plan is None:
                raise PlanMissing("plan_given strategy requires a plan")
            self.plan.validate(set(self.references))
        elif self.plan is not None:
            raise ValueError(f"strategy {self.strategy!r} does not take a plan")

    @property
    def keys(self) -> list[CitationKey]:
        return sorted(self.references)


@dataclass
class GeneratedReview:
    text: str
    sentences: list[str]
    cited_keys_in_text: tuple[CitationKey, ...]  # occurrence order, repeats kept
    plan_echo: Optional[SentencePlan] = None
    hallucinated_keys: tuple[CitationKey, ...] = ()
    flags: tuple[str, ...] = ()
    completions: int = 1

    @property
    def distinct_keys(self) -> set[CitationKey]:
        return set(self.cited_keys_in_text)

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "sentences": self.sentences,
            "cited_keys": [k.index for k in self.cited_keys_in_text],
            "plan_echo": self.plan_echo.to_json() if self.plan_echo else None,
            "hallucinated_keys": [k.index for k in self.hallucinated_keys],
            "flags": list(self.flags),
            "completions": self.completions,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "GeneratedReview":
        return cls(
            text=raw["text"],
            sentences=list(raw["sentences"]),
            cited_keys_in_text=tuple(CitationKey(i) for i in raw.get("cited_keys", [])),
            plan_echo=SentencePlan.from_json(raw["plan_echo"]) if raw.get("plan_echo") else None,
            hallucinated_keys=tuple(CitationKey(i) for i in raw.get("hallucinated_keys", [])),
            flags=tuple(raw.get("flags", ())),
            completions=raw.get("completions", 1),
        )


def format_references(references: dict[CitationKey, str]) -> str:
    return "\n\n".join(f"{key}: {references[key]}" for key in sorted(references))


def _complete(gateway: LlmGateway, prompt: str, *, temperature: float,
              max_output_tokens: int) -> str:
    return gateway.complete(CompletionRequest(
        system_text="", user_text=prompt, max_output_tokens=max_output_tokens,
        temperature=temperature, model_id=gateway.default_model)).text


def _finalize(req: GenerationRequest, text: str, completions: int,
              splitter: Splitter, plan_echo: Optional[SentencePlan] = None,
              flags: tuple[str, ...] = ()) -> GeneratedReview:
    cited = tuple(extract_keys(text))
    request_keys = set(req.references)
    hallucinated = tuple(sorted({k for k in cited if k not in request_keys}))
    if hallucinated:
        flags = flags + ("hallucinated_keys",)
    return GeneratedReview(
        text=text,
        sentences=splitter(text),
        cited_keys_in_text=cited,
        plan_echo=plan_echo,
        hallucinated_keys=hallucinated,
        flags=flags,
        completions=completions,
    )


def _split_learned_plan(text: str, keys: set[CitationKey]) -> tuple[Optional[SentencePlan], str, tuple[str, ...]]:
    """Pull a leading plan line out of a plan_learned response."""
    lines = text.splitlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        if line.lstrip().startswith("Please generate"):
            try:
                plan = parse_plan(line, keys)
            except Exception:
                break
            rest = "\n".join(lines[i + 1:]).strip()
            return plan, rest, ()
        break
    return None, text, ("no_plan_echo",)


def generate(gateway: LlmGateway, req: GenerationRequest, *,
             temperature: float = 0.0, max_output_tokens: int = 1024,
             splitter: Splitter = split_sentences) -> GeneratedReview:
    """Run one generation request under its strategy."""
    refs_text = format_references(req.references)
    kwargs = {"temperature": temperature, "max_output_tokens": max_output_tokens}

    if req.strategy == "zero_shot":
        text = _complete(gateway, render(
            "generate_zero_shot", abstract=req.query_abstract, references=refs_text), **kwargs)
        return _finalize(req, text, 1, splitter)

    if req.strategy == "plan_given":
        assert req.plan is not None
        text = _complete(gateway, render(
            "generate_plan_given", abstract=req.query_abstract, references=refs_text,
            plan=render_plan_text(req.plan)), **kwargs)
        return _finalize(req, text, 1, splitter)

    if req.strategy == "plan_learned":
        raw = _complete(gateway, render(
            "generate_plan_learned", abstract=req.query_abstract, references=refs_text), **kwargs)
        plan_echo, text, flags = _split_learned_plan(raw, set(req.references))
        return _finalize(req, text, 1, splitter, plan_echo=plan_echo, flags=flags)

    if req.strategy == "per_cite":
        snippets = []
        for key in req.keys:
            snippets.append(_complete(gateway, render(
                "generate_per_cite_stage1", abstract=req.query_abstract,
                key=str(key), reference=req.references[key]), **kwargs))
        draft = "\n".join(snippets)
        text = _complete(gateway, render(
            "generate_per_cite_stage2", abstract=req.query_abstract, draft=draft), **kwargs)
        return _finalize(req, text, len(req.keys) + 1, splitter)

    # sentence_by_sentence: one sentence per key in key order, conditioning
    # on the draft written so far.
    draft_sentences: list[str] = []
    for key in req.keys:
        draft = " ".join(draft_sentences) if draft_sentences else "(empty)"
        line = _complete(gateway, render(
            "generate_sentence", abstract=req.query_abstract, key=str(key),
            reference=req.references[key], draft=draft), **kwargs)
        draft_sentences.append(line.strip())
    text = " ".join(draft_sentences)
    return _finalize(req, text, len(req.keys), splitter)


def relexicalize(text: str, mapping: dict[CitationKey, str],
                 command_template: str = "\\cite{KEY}") -> str:
    """Replace every @cite_k with the mapped citation command.

    The template's literal KEY is substituted with the bibliography key.
    Raises UnknownKeyInText for keys present in the text but not the mapping.
    """
    present = set(extract_keys(text))
    missing = present - set(mapping)
    if missing:
        raise UnknownKeyInText(f"no mapping for {sorted(map(str, missing))}")

    def substitute(match: "re.Match[str]") -> str:
        key = CitationKey(int(match.group(1)))
        return command_template.replace("KEY", mapping[key])

    return CITATION_PATTERN.sub(substitute, text)
