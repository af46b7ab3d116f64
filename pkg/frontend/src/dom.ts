// Thin DOM layer: renders view-models and forwards events to the controller.
// No business logic lives here.

import type { Badge, CandidateRow, PlanEditorView, ReviewView } from "./view.js";
import type { DiffOp } from "./diff.js";

export interface Handlers {
  onRetrieve(abstract: string, date: string): void;
  onToggleSelect(paperId: string): void;
  onPlanTextEdited(text: string): void;
  onSentenceCount(value: number): void;
  onWordBudget(value: number): void;
  onToggleKey(line: number, key: number): void;
  onSuggestPlan(): void;
  onStrategy(strategy: string): void;
  onGenerate(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function badgeNode(badge: Badge): HTMLElement {
  return el("span", `badge badge-${badge.kind}`, badge.label);
}

export function renderCandidates(container: HTMLElement, rows: CandidateRow[],
                                 handlers: Handlers): void {
  container.replaceChildren();
  for (const row of rows) {
    const card = el("div", row.selected ? "candidate selected" : "candidate");
    const head = el("div", "candidate-head");
    const checkbox = el("input") as HTMLInputElement;
    checkbox.type = "checkbox";
    checkbox.checked = row.selected;
    checkbox.addEventListener("change", () => handlers.onToggleSelect(row.paperId));
    head.append(checkbox);
    head.append(el("span", "rank", `#${row.rank}`));
    head.append(el("span", "title", row.title));
    head.append(el("span", "score", row.score.toFixed(3)));
    if (row.citationKey !== null) head.append(el("span", "key-chip", `@cite_${row.citationKey}`));
    for (const badge of row.badges) head.append(badgeNode(badge));
    card.append(head);
    const abstractNode = el("p", "abstract");
    for (const segment of row.abstractSegments) {
      if (segment.marked) abstractNode.append(el("mark", "excerpt", segment.text));
      else abstractNode.append(document.createTextNode(segment.text));
    }
    card.append(abstractNode);
    if (row.argumentsFor.length || row.argumentsAgainst.length) {
      const args = el("div", "arguments");
      for (const a of row.argumentsFor) args.append(el("div", "arg-for", `+ ${a}`));
      for (const a of row.argumentsAgainst) args.append(el("div", "arg-against", `- ${a}`));
      card.append(args);
    }
    container.append(card);
  }
}

export function renderPlanEditor(container: HTMLElement, view: PlanEditorView,
                                 handlers: Handlers): void {
  container.replaceChildren();
  const counts = el("div", "plan-counts");
  const sentenceInput = el("input") as HTMLInputElement;
  sentenceInput.type = "number";
  sentenceInput.min = "1";
  sentenceInput.value = String(view.numSentences);
  sentenceInput.addEventListener("change", () => handlers.onSentenceCount(Number(sentenceInput.value)));
  const wordInput = el("input") as HTMLInputElement;
  wordInput.type = "number";
  wordInput.min = "1";
  wordInput.step = "10";
  wordInput.value = String(view.numWords);
  wordInput.addEventListener("change", () => handlers.onWordBudget(Number(wordInput.value)));
  counts.append(el("label", "", "sentences"), sentenceInput,
                el("label", "", "words"), wordInput);
  const suggest = el("button", "", "suggest plan");
  suggest.addEventListener("click", () => handlers.onSuggestPlan());
  counts.append(suggest);
  container.append(counts);

  const lines = el("div", "plan-lines");
  for (const lineView of view.lines) {
    const row = el("div", "plan-line");
    row.append(el("span", "line-no", `line ${lineView.line}`));
    for (const key of lineView.assigned) {
      const chip = el("button", "key-chip assigned", `@cite_${key} ×`);
      chip.addEventListener("click", () => handlers.onToggleKey(lineView.line, key));
      row.append(chip);
    }
    for (const key of lineView.available) {
      const chip = el("button", "key-chip", `+ @cite_${key}`);
      chip.addEventListener("click", () => handlers.onToggleKey(lineView.line, key));
      row.append(chip);
    }
    lines.append(row);
  }
  container.append(lines);

  const textarea = el("textarea", "plan-text") as HTMLTextAreaElement;
  textarea.value = view.planText;
  textarea.rows = 3;
  textarea.addEventListener("input", () => handlers.onPlanTextEdited(textarea.value));
  container.append(textarea);

  for (const message of view.errors) container.append(el("div", "plan-error", message));
}

export function renderReview(container: HTMLElement, view: ReviewView | null,
                             diffOps: DiffOp[] | null): void {
  container.replaceChildren();
  if (!view) return;
  const badges = el("div", "review-badges");
  if (view.adherenceBadge) badges.append(badgeNode(view.adherenceBadge));
  if (view.coverageBadge) badges.append(badgeNode(view.coverageBadge));
  badges.append(el("span", "revisions", `revision ${view.revisionCount}`));
  container.append(badges);
  const list = el("ol", "sentences");
  for (const sentence of view.sentences) {
    const item = el("li", "sentence");
    item.append(el("span", "", sentence.text));
    if (sentence.plannedKeys.length) {
      item.append(el("span", "planned", ` [planned: ${sentence.plannedKeys.map((k) => `@cite_${k}`).join(", ")}]`));
    }
    for (const badge of sentence.badges) item.append(badgeNode(badge));
    list.append(item);
  }
  container.append(list);
  if (diffOps) {
    const diffNode = el("p", "diff");
    for (const op of diffOps) {
      const cls = op.kind === "same" ? "w" : op.kind === "added" ? "w added" : "w removed";
      diffNode.append(el("span", cls, op.word + " "));
    }
    container.append(el("h3", "", "changes vs previous revision"), diffNode);
  }
}
