from __future__ import annotations

from pathlib import Path

import pytest

from litreview.errors import PlanMissing, UnknownKeyInText
from litreview.gateway import LlmGateway, MockScript
from litreview.generation import (GeneratedReview, GenerationRequest,
                                  format_references, generate, relexicalize)
from litreview.plans import CitationKey, SentencePlan
from litreview.prompts import render
from litreview.textproc import split_sentences

K1, K2, K3 = CitationKey(1), CitationKey(2), CitationKey(3)

REFERENCES = {
    K1: "First reference abstract about methods.",
    K2: "Second reference abstract about data.",
    K3: "Third reference abstract about metrics.",
}

ABSTRACT = "Our paper proposes an assistant for finding and summarizing prior work."


def plan_135() -> SentencePlan:
    return SentencePlan(num_sentences=3, num_words=40,
                        assignments={1: frozenset({K1}), 2: frozenset({K2}),
                                     3: frozenset({K3})})


class TestRequestValidation:
    def test_references_required(self):
        with pytest.raises(ValueError):
            GenerationRequest(query_abstract="a", references={}, strategy="zero_shot")

    def test_keys_must_be_dense(self):
        with pytest.raises(ValueError):
            GenerationRequest(query_abstract="a", references={K1: "x", K3: "y"})

    def test_plan_given_requires_plan(self):
        with pytest.raises(PlanMissing):
            GenerationRequest(query_abstract="a", references=dict(REFERENCES),
                              strategy="plan_given")

    def test_plan_forbidden_elsewhere(self):
        with pytest.raises(ValueError):
            GenerationRequest(query_abstract="a", references=dict(REFERENCES),
                              strategy="zero_shot", plan=plan_135())

    def test_plan_validated_against_keys(self):
        partial = SentencePlan(num_sentences=2, num_words=30,
                               assignments={1: frozenset({K1})})
        from litreview.errors import MalformedPlan
        with pytest.raises(MalformedPlan):
            GenerationRequest(query_abstract="a", references=dict(REFERENCES),
                              strategy="plan_given", plan=partial)


class TestZeroShot:
    def test_cited_keys_extracted(self):
        gateway = LlmGateway(script=MockScript(default="This work uses @cite_1 heavily."))
        request = GenerationRequest(query_abstract=ABSTRACT, references={K1: "ref one"})
        review = generate(gateway, request)
        assert review.cited_keys_in_text == (K1,)
        assert review.completions == 1
        assert gateway.request_count == 1

    def test_hallucinated_key_flagged_not_dropped(self):
        gateway = LlmGateway(script=MockScript(default="Uses @cite_1 and also @cite_9."))
        request = GenerationRequest(query_abstract=ABSTRACT, references={K1: "ref one"})
        review = generate(gateway, request)
        assert CitationKey(9) in review.cited_keys_in_text
        assert review.hallucinated_keys == (CitationKey(9),)
        assert "hallucinated_keys" in review.flags

    def test_sentences_split(self):
        gateway = LlmGateway(script=MockScript(default="One @cite_1. Two more words."))
        request = GenerationRequest(query_abstract=ABSTRACT, references={K1: "r"})
        review = generate(gateway, request)
        assert review.sentences == ["One @cite_1.", "Two more words."]


class TestPlanGiven:
    def test_compliant_mock_adheres(self):
        compliant = ("Line one cites @cite_1. Line two cites @cite_2. "
                     "Line three cites @cite_3.")
        gateway = LlmGateway(script=MockScript(default=compliant))
        request = GenerationRequest(query_abstract=ABSTRACT, references=dict(REFERENCES),
                                    strategy="plan_given", plan=plan_135())
        review = generate(gateway, request)
        assert len(review.sentences) == 3
        assert review.distinct_keys == {K1, K2, K3}

    def test_plan_rendered_into_prompt(self):
        gateway = LlmGateway(script=MockScript(default="text"))
        request = GenerationRequest(query_abstract=ABSTRACT, references=dict(REFERENCES),
                                    strategy="plan_given", plan=plan_135())
        generate(gateway, request)
        prompt = gateway.transcript[0]["request"]["user"]
        assert "Please generate 3 sentences in 40 words." in prompt


class TestPlanLearned:
    def test_echo_parsed_and_stripped(self):
        output = ("Please generate 2 sentences in 20 words. Cite @cite_1 at line 1. "
                  "Cite @cite_2 at line 2.\n"
                  "First line with @cite_1. Second line with @cite_2.")
        gateway = LlmGateway(script=MockScript(default=output))
        request = GenerationRequest(query_abstract=ABSTRACT,
                                    references={K1: "a", K2: "b"}, strategy="plan_learned")
        review = generate(gateway, request)
        assert review.plan_echo is not None
        assert review.plan_echo.num_sentences == 2
        assert "Please generate" not in review.text
        assert review.completions == 1

    def test_missing_plan_flagged_not_fatal(self):
        gateway = LlmGateway(script=MockScript(default="Just text citing @cite_1."))
        request = GenerationRequest(query_abstract=ABSTRACT, references={K1: "a"},
                                    strategy="plan_learned")
        review = generate(gateway, request)
        assert review.plan_echo is None
        assert "no_plan_echo" in review.flags


class TestPerCite:
    def test_k_plus_one_completions(self):
        gateway = LlmGateway(script=MockScript(default="Snippet about @cite_1."))
        request = GenerationRequest(query_abstract=ABSTRACT, references=dict(REFERENCES),
                                    strategy="per_cite")
        review = generate(gateway, request)
        assert gateway.request_count == 4  # 3 + 1 summarize
        assert review.completions == 4

    def test_stage_two_sees_stage_one_draft(self):
        script = MockScript.from_pairs(
            [(1, "S1 @cite_1."), (2, "S2 @cite_2."), (3, "S3 @cite_3."),
             (4, "Final summary citing @cite_1, @cite_2 and @cite_3.")])
        gateway = LlmGateway(script=script)
        request = GenerationRequest(query_abstract=ABSTRACT, references=dict(REFERENCES),
                                    strategy="per_cite")
        review = generate(gateway, request)
        final_prompt = gateway.transcript[3]["request"]["user"]
        assert "S1 @cite_1." in final_prompt and "S3 @cite_3." in final_prompt
        assert review.text.startswith("Final summary")


class TestSentenceBySentence:
    def test_one_completion_per_key_in_order(self):
        script = MockScript.from_pairs(
            [(1, "First about @cite_1."), (2, "Second about @cite_2."),
             (3, "Third about @cite_3.")])
        gateway = LlmGateway(script=script)
        request = GenerationRequest(query_abstract=ABSTRACT, references=dict(REFERENCES),
                                    strategy="sentence_by_sentence")
        review = generate(gateway, request)
        assert gateway.request_count == 3
        assert review.completions == 3
        assert review.text == "First about @cite_1. Second about @cite_2. Third about @cite_3."

    def test_draft_passed_forward(self):
        script = MockScript.from_pairs([(1, "Alpha @cite_1."), (2, "Beta @cite_2.")])
        gateway = LlmGateway(script=script)
        request = GenerationRequest(query_abstract=ABSTRACT,
                                    references={K1: "a", K2: "b"},
                                    strategy="sentence_by_sentence")
        generate(gateway, request)
        second_prompt = gateway.transcript[1]["request"]["user"]
        assert "Alpha @cite_1." in second_prompt


class TestRelexicalize:
    def test_basic_replacement(self):
        assert relexicalize("see @cite_1.", {K1: "smith2020"}) == "see \\cite{smith2020}."

    def test_no_keys_unchanged(self):
        assert relexicalize("no keys here.", {}) == "no keys here."

    def test_unknown_key_raises(self):
        with pytest.raises(UnknownKeyInText):
            relexicalize("@cite_9", {K1: "x"})

    def test_custom_command_template(self):
        out = relexicalize("@cite_1", {K1: "ref1"}, command_template="[@KEY]")
        assert out == "[@ref1]"

    def test_wide_index_not_clobbered(self):
        mapping = {K1: "one", CitationKey(12): "twelve"}
        out = relexicalize("@cite_12 then @cite_1", mapping)
        assert out == "\\cite{twelve} then \\cite{one}"


GOLDEN_DIR = Path(__file__).parent / "golden"


class TestPromptSnapshots:
    CASES = {
        "keyword_queries": {"abstract": "A sample abstract.", "n": 3},
        "rerank_permutation": {"abstract": "A sample abstract.", "n": 2,
                               "candidates": "[1] First.\n\n[2] Second."},
        "debate_rank": {"abstract": "A sample abstract.", "candidate": "Candidate text."},
        "generate_zero_shot": {"abstract": "A sample abstract.",
                               "references": "@cite_1: Ref one."},
        "generate_plan_given": {"abstract": "A sample abstract.",
                                "references": "@cite_1: Ref one.",
                                "plan": "Please generate 1 sentences in 10 words. "
                                        "Cite @cite_1 at line 1."},
        "generate_plan_learned": {"abstract": "A sample abstract.",
                                  "references": "@cite_1: Ref one."},
        "generate_per_cite_stage1": {"abstract": "A sample abstract.", "key": "@cite_1",
                                     "reference": "Ref one."},
        "generate_per_cite_stage2": {"abstract": "A sample abstract.", "draft": "Draft."},
        "generate_sentence": {"abstract": "A sample abstract.", "key": "@cite_1",
                              "reference": "Ref one.", "draft": "So far."},
    }

    @pytest.mark.parametrize("name", sorted(CASES))
    def test_rendered_prompt_matches_golden(self, name):
        rendered = render(name, **self.CASES[name])
        golden = (GOLDEN_DIR / f"{name}.txt").read_text(encoding="utf-8")
        assert rendered == golden

    def test_reference_block_order(self):
        block = format_references({K2: "two", K1: "one"})
        assert block == "@cite_1: one\n\n@cite_2: two"
