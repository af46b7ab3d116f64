// Session state and its transitions. Everything here is pure: the DOM layer
// renders whatever state says, and server interaction happens only through
// the ApiClient. History is append-only; refresh rebuilds state from
// GET /runs/{id}.

import type { CandidateView, GeneratePayload, RetrievePayload } from "./api.js";
import { PlanDraft, PlanError, emptyPlan, parsePlan, renderPlan, validateDraft } from "./plan.js";

export interface Revision {
  index: number;
  planString: string | null;
  review: GeneratePayload["review"];
  metrics: GeneratePayload["metrics"];
}

export interface SessionState {
  abstract: string;
  publicationDate: string | null;
  options: { sort: string };
  runId: string | null;
  candidates: CandidateView[];
  selected: string[]; // paper ids in rank order; @cite_k follows this order
  strategy: string;
  planText: string;
  planDraft: PlanDraft | null;
  planErrors: string[];
  review: GeneratePayload["review"] | null;
  metrics: GeneratePayload["metrics"] | null;
  history: readonly Revision[];
}

export function initialState(): SessionState {
  return {
    abstract: "",
    publicationDate: null,
    options: { sort: "relevance" },
    runId: null,
    candidates: [],
    selected: [],
    strategy: "plan_given",
    planText: "",
    planDraft: null,
    planErrors: [],
    review: null,
    metrics: null,
    history: [],
  };
}

export function selectedKeys(state: SessionState): number[] {
  return state.selected.map((_pid, index) => index + 1);
}

export function setAbstract(state: SessionState, abstract: string,
                            publicationDate: string | null = null): SessionState {
  return { ...state, abstract, publicationDate };
}

export function retrieveSucceeded(state: SessionState, payload: RetrievePayload): SessionState {
  return {
    ...state,
    runId: payload.run_id,
    candidates: payload.candidates,
    selected: [],
    review: null,
    metrics: null,
  };
}

export function toggleSelect(state: SessionState, paperId: string): SessionState {
  const selected = state.selected.includes(paperId)
    ? state.selected.filter((pid) => pid !== paperId)
    : [...state.selected, paperId];
  return revalidate({ ...state, selected });
}

export function setStrategy(state: SessionState, strategy: string): SessionState {
  return revalidate({ ...state, strategy });
}

/** Text-side edit: parse into the structured draft, or surface the error. */
export function planTextEdited(state: SessionState, text: string): SessionState {
  const next = { ...state, planText: text };
  try {
    next.planDraft = parsePlan(text, selectedKeys(state));
    next.planErrors = [];
  } catch (error) {
    if (!(error instanceof PlanError)) throw error;
    next.planDraft = null;
    next.planErrors = [error.message];
  }
  return next;
}

/** Structured-side edit: re-render the canonical string and validate. */
export function planDraftEdited(state: SessionState, draft: PlanDraft): SessionState {
  return {
    ...state,
    planDraft: draft,
    planText: renderPlan(draft),
    planErrors: validateDraft(draft, selectedKeys(state)),
  };
}

export function suggestPlan(state: SessionState): SessionState {
  const keys = selectedKeys(state);
  if (!keys.length) return state;
  const draft: PlanDraft = {
    ...emptyPlan(keys.length, keys.length * 20),
    assignments: new Map(keys.map((key, index) => [index + 1, new Set([key])])),
  };
  return planDraftEdited(state, draft);
}

function revalidate(state: SessionState): SessionState {
  if (state.planDraft === null) {
    if (state.planText) return planTextEdited(state, state.planText);
    return state;
  }
  return { ...state, planErrors: validateDraft(state.planDraft, selectedKeys(state)) };
}

/** The generate action is enabled only for a valid plan (or zero_shot). */
export function canGenerate(state: SessionState): boolean {
  if (!state.selected.length || !state.runId) return false;
  if (state.strategy === "zero_shot") return true;
  if (state.strategy === "plan_given") {
    return state.planDraft !== null && state.planErrors.length === 0;
  }
  return true;
}

export function generateSucceeded(state: SessionState, payload: GeneratePayload): SessionState {
  const revision: Revision = {
    index: state.history.length + 1,
    planString: payload.plan_string,
    review: payload.review,
    metrics: payload.metrics,
  };
  return {
    ...state,
    review: payload.review,
    metrics: payload.metrics,
    history: [...state.history, revision],
  };
}

/** Rebuild a session from the run artifact returned by GET /runs/{id}. */
export function restoreFromRun(artifact: Record<string, any>): SessionState {
  const state = initialState();
  const config = artifact["config"] ?? {};
  const pool = artifact["pool"] ?? {};
  const ranked = artifact["ranked"] ?? {};
  const byId: Record<string, any> = {};
  for (const candidate of pool["candidates"] ?? []) byId[candidate.paper_id] = candidate;
  const candidates: CandidateView[] = (ranked["ordering"] ?? [])
    .filter((pid: string) => byId[pid])
    .map((pid: string) => ({
      paper_id: pid,
      title: byId[pid].title ?? "",
      abstract: byId[pid].abstract ?? "",
      publication_date: byId[pid].publication_date ?? "",
      external_ids: byId[pid].external_ids ?? {},
      citation_count: byId[pid].raw?.citation_count ?? null,
      evidence: ranked["evidence"]?.[pid] ?? {
        score: 0, arguments_for: [], arguments_against: [],
        excerpts: [], verified: true, attempts: 1, flags: [],
      },
    }));
  let restored: SessionState = {
    ...state,
    abstract: config["abstract"] ?? "",
    runId: artifact["run_id"] ?? null,
    candidates,
  };
  const review = artifact["review"];
  if (review) {
    restored = {
      ...restored,
      selected: review["paper_ids"] ?? [],
      strategy: review["strategy"] ?? restored.strategy,
      review: {
        text: review["text"] ?? "",
        sentences: review["sentences"] ?? [],
        cited_keys: review["cited_keys"] ?? [],
        plan_echo: review["plan_echo"] ?? null,
        hallucinated_keys: review["hallucinated_keys"] ?? [],
        flags: review["flags"] ?? [],
        completions: review["completions"] ?? 1,
      },
      metrics: (artifact["metrics"] as SessionState["metrics"]) ?? null,
    };
  }
  return restored;
}
