// Controller: owns the SessionState, talks to the API, re-renders on change.

import { ApiClient, ApiError } from "./api.js";
import { renderCandidates, renderPlanEditor, renderReview, Handlers } from "./dom.js";
import { wordDiff } from "./diff.js";
import { setSentenceCount, setWordBudget, toggleKeyOnLine, emptyPlan } from "./plan.js";
import * as state from "./state.js";
import { candidateRows, planEditorView, reviewView } from "./view.js";

const api = new ApiClient("");
let session = state.initialState();

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function showError(message: string): void {
  byId("status").textContent = message;
  byId("status").className = "status error";
}

function showStatus(message: string): void {
  byId("status").textContent = message;
  byId("status").className = "status";
}

function rerender(): void {
  renderCandidates(byId("candidates"), candidateRows(session), handlers);
  renderPlanEditor(byId("plan-editor"), planEditorView(session, state.canGenerate(session)), handlers);
  (byId("generate") as HTMLButtonElement).disabled = !state.canGenerate(session);
  const review = reviewView(session);
  let diffOps = null;
  if (session.history.length >= 2) {
    const previous = session.history[session.history.length - 2]!;
    diffOps = wordDiff(previous.review.text, session.review!.text);
  }
  renderReview(byId("review"), review, diffOps);
}

let generateInFlight = false;

const handlers: Handlers = {
  onRetrieve(abstract: string, date: string): void {
    session = state.setAbstract(session, abstract, date || null);
    showStatus("retrieving...");
    api.retrieve(abstract, date || undefined, { sort: session.options.sort })
      .then((payload) => {
        session = state.retrieveSucceeded(session, payload);
        showStatus(`${payload.candidates.length} candidates (run ${payload.run_id})`);
        window.location.hash = payload.run_id;
        rerender();
      })
      .catch((error) => showError(describe(error)));
  },
  onToggleSelect(paperId: string): void {
    session = state.toggleSelect(session, paperId);
    if (session.planDraft === null && session.selected.length) {
      session = state.suggestPlan(session);
    }
    rerender();
  },
  onPlanTextEdited(text: string): void {
    session = state.planTextEdited(session, text);
    rerender();
  },
  onSentenceCount(value: number): void {
    session = state.planDraftEdited(session, setSentenceCount(session.planDraft ?? emptyPlan(), value));
    rerender();
  },
  onWordBudget(value: number): void {
    session = state.planDraftEdited(session, setWordBudget(session.planDraft ?? emptyPlan(), value));
    rerender();
  },
  onToggleKey(line: number, key: number): void {
    session = state.planDraftEdited(session, toggleKeyOnLine(session.planDraft ?? emptyPlan(), line, key));
    rerender();
  },
  onSuggestPlan(): void {
    session = state.suggestPlan(session);
    rerender();
  },
  onStrategy(strategy: string): void {
    session = state.setStrategy(session, strategy);
    rerender();
  },
  onGenerate(): void {
    if (!state.canGenerate(session) || generateInFlight || !session.runId) return;
    generateInFlight = true;  // one in-flight generate per session
    showStatus("generating...");
    const body = {
      abstract: session.abstract,
      paper_ids: session.selected,
      strategy: session.strategy,
      run_id: session.runId,
      idempotency_key: `${session.runId}:${session.history.length + 1}`,
      ...(session.strategy === "plan_given" ? { plan: session.planText } : {}),
    };
    api.generate(body)
      .then((payload) => {
        session = state.generateSucceeded(session, payload);
        showStatus("generated");
        rerender();
      })
      .catch((error) => showError(describe(error)))
      .finally(() => {
        generateInFlight = false;
      });
  },
};

function describe(error: unknown): string {
  if (error instanceof ApiError) return `[${error.stage}] ${error.message}`;
  return String(error);
}

function boot(): void {
  const form = byId("retrieve-form") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const abstract = (byId("abstract") as HTMLTextAreaElement).value.trim();
    const date = (byId("pubdate") as HTMLInputElement).value;
    if (abstract) handlers.onRetrieve(abstract, date);
  });
  byId("generate").addEventListener("click", () => handlers.onGenerate());
  (byId("strategy") as HTMLSelectElement).addEventListener("change", (event) => {
    handlers.onStrategy((event.target as HTMLSelectElement).value);
  });
  const runId = window.location.hash.slice(1);
  if (runId) {
    api.getRun(runId)
      .then((artifact) => {
        session = state.restoreFromRun(artifact);
        showStatus(`restored run ${runId}`);
        rerender();
      })
      .catch(() => showStatus("ready"));
  }
  rerender();
}

document.addEventListener("DOMContentLoaded", boot);
