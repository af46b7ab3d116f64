// View-model builders: pure functions from state to render-ready structures.
// The DOM layer consumes these verbatim, which keeps every visual rule
// (badges, highlights, numbering) testable without a browser.

import type { CandidateView, GeneratePayload } from "./api.js";
import { Segment, highlightSegments } from "./highlight.js";
import { extractCitedKeys, linesFor } from "./plan.js";
import type { SessionState } from "./state.js";
import { selectedKeys } from "./state.js";

export interface Badge {
  kind: "ok" | "warn" | "info";
  label: string;
}

export interface CandidateRow {
  rank: number;
  paperId: string;
  title: string;
  score: number;
  selected: boolean;
  citationKey: number | null; // @cite_k once selected
  argumentsFor: string[];
  argumentsAgainst: string[];
  abstractSegments: Segment[]; // verified excerpts marked in context
  badges: Badge[];
}

export function candidateRows(state: SessionState): CandidateRow[] {
  return state.candidates.map((candidate, index) => {
    const selectedAt = state.selected.indexOf(candidate.paper_id);
    const verified = candidate.evidence.verified;
    const badges: Badge[] = [];
    if (!verified) badges.push({ kind: "warn", label: "unverified evidence" });
    for (const flag of candidate.evidence.flags) {
      if (flag !== "unverified") badges.push({ kind: "info", label: flag.replace(/_/g, " ") });
    }
    return {
      rank: index + 1,
      paperId: candidate.paper_id,
      title: candidate.title,
      score: candidate.evidence.score,
      selected: selectedAt !== -1,
      citationKey: selectedAt === -1 ? null : selectedAt + 1,
      argumentsFor: candidate.evidence.arguments_for,
      argumentsAgainst: candidate.evidence.arguments_against,
      abstractSegments: verified
        ? highlightSegments(candidate.abstract, candidate.evidence.excerpts)
        : [{ text: candidate.abstract, marked: false }],
      badges,
    };
  });
}

export interface PlanEditorView {
  numSentences: number;
  numWords: number;
  planText: string;
  errors: string[];
  /** one row per line: which keys are assigned, which are available */
  lines: { line: number; assigned: number[]; available: number[] }[];
  generateEnabled: boolean;
}

export function planEditorView(state: SessionState, generateEnabled: boolean): PlanEditorView {
  const keys = selectedKeys(state);
  const draft = state.planDraft;
  const lines = [];
  const count = draft?.numSentences ?? 0;
  for (let line = 1; line <= count; line++) {
    const assigned = draft ? [...(draft.assignments.get(line) ?? [])].sort((a, b) => a - b) : [];
    lines.push({ line, assigned, available: keys.filter((k) => !assigned.includes(k)) });
  }
  return {
    numSentences: draft?.numSentences ?? 0,
    numWords: draft?.numWords ?? 0,
    planText: state.planText,
    errors: state.planErrors,
    lines,
    generateEnabled,
  };
}

export interface SentenceView {
  line: number;
  text: string;
  plannedKeys: number[];
  citedKeys: number[];
  hallucinatedKeys: number[]; // keys cited here but outside the selected set
  badges: Badge[];
}

export interface ReviewView {
  text: string;
  sentences: SentenceView[];
  adherenceBadge: Badge | null;
  coverageBadge: Badge | null;
  revisionCount: number;
}

export function reviewView(state: SessionState): ReviewView | null {
  if (!state.review) return null;
  const keys = new Set(selectedKeys(state));
  const draft = state.planDraft;
  const sentences: SentenceView[] = state.review.sentences.map((text, index) => {
    const line = index + 1;
    const cited = [...new Set(extractCitedKeys(text))].sort((a, b) => a - b);
    const hallucinated = cited.filter((key) => !keys.has(key));
    const planned = draft ? [...(draft.assignments.get(line) ?? [])].sort((a, b) => a - b) : [];
    const badges: Badge[] = [];
    if (hallucinated.length) {
      badges.push({ kind: "warn", label: `hallucinated: ${hallucinated.map((k) => `@cite_${k}`).join(", ")}` });
    }
    return { line, text, plannedKeys: planned, citedKeys: cited,
             hallucinatedKeys: hallucinated, badges };
  });

  let adherenceBadge: Badge | null = null;
  const adherence = state.metrics?.adherence;
  if (adherence) {
    adherenceBadge = adherence.exact
      ? { kind: "ok", label: "plan: exact" }
      : { kind: "warn", label: `plan: ${adherence.diff > 0 ? "+" : ""}${adherence.diff} lines` };
  }
  let coverageBadge: Badge | null = null;
  if (state.metrics) {
    coverageBadge = state.metrics.coverage
      ? { kind: "ok", label: "coverage: complete" }
      : { kind: "warn", label: "coverage: incomplete" };
  }
  return {
    text: state.review.text,
    sentences,
    adherenceBadge,
    coverageBadge,
    revisionCount: state.history.length,
  };
}

/** Keys the plan assigns that every selected paper actually has, for chips. */
export function plannedKeyChips(state: SessionState): { key: number; lines: number[] }[] {
  if (!state.planDraft) return [];
  return selectedKeys(state).map((key) => ({
    key,
    lines: linesFor(state.planDraft!, key),
  }));
}
