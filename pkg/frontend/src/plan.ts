// Sentence-plan grammar, mirroring the backend's semantics exactly:
//
//   Please generate 5 sentences in 60 words. Cite @cite_1 at line 1, 3 and 5.
//
// parsePlan/renderPlan are inverses on valid plans, and renderPlan emits the
// canonical clause order (keys ascending, lines ascending) so the string the
// editor shows is byte-identical to what the backend receives.

export interface PlanDraft {
  numSentences: number;
  numWords: number;
  /** line number (1-based) -> set of citation-key indices */
  assignments: Map<number, Set<number>>;
}

export class PlanError extends Error {}

export const CITATION_RE = /@cite_(\d+)\b/g;

const COUNTS_RE = /Please generate\s+(\d+)\s+sentences?\s+in\s+(\d+)\s+words?\s*\./i;
const CITE_RE = /Cite\s+@cite_(\d+)\s+at\s+lines?\s+(\d+(?:\s*(?:,|and)\s*\d+)*)\s*\.?/gi;

export function emptyPlan(numSentences = 3, numWords = 60): PlanDraft {
  return { numSentences, numWords, assignments: new Map() };
}

export function planKeys(draft: PlanDraft): number[] {
  const keys = new Set<number>();
  for (const assigned of draft.assignments.values()) {
    for (const key of assigned) keys.add(key);
  }
  return [...keys].sort((a, b) => a - b);
}

export function linesFor(draft: PlanDraft, key: number): number[] {
  const lines: number[] = [];
  for (const [line, assigned] of draft.assignments) {
    if (assigned.has(key)) lines.push(line);
  }
  return lines.sort((a, b) => a - b);
}

function renderLineList(lines: number[]): string {
  if (lines.length === 1) return String(lines[0]);
  return lines.slice(0, -1).join(", ") + " and " + lines[lines.length - 1];
}

export function renderPlan(draft: PlanDraft): string {
  const parts = [`Please generate ${draft.numSentences} sentences in ${draft.numWords} words.`];
  for (const key of planKeys(draft)) {
    parts.push(`Cite @cite_${key} at line ${renderLineList(linesFor(draft, key))}.`);
  }
  return parts.join(" ");
}

/** Validation messages for the inline editor; empty list means valid. */
export function validateDraft(draft: PlanDraft, keys: number[]): string[] {
  const messages: string[] = [];
  if (!Number.isInteger(draft.numSentences) || draft.numSentences < 1) {
    messages.push("sentence count must be a positive integer");
  }
  if (!Number.isInteger(draft.numWords) || draft.numWords < 1) {
    messages.push("word budget must be a positive integer");
  }
  const known = new Set(keys);
  const cited = new Set<number>();
  for (const [line, assigned] of draft.assignments) {
    if (line < 1 || line > draft.numSentences) {
      messages.push(`line ${line} out of range 1..${draft.numSentences}`);
    }
    for (const key of assigned) {
      if (!known.has(key)) messages.push(`unknown citation key @cite_${key}`);
      cited.add(key);
    }
  }
  for (const key of keys) {
    if (!cited.has(key)) messages.push(`key @cite_${key} never cited`);
  }
  return messages;
}

export function parsePlan(text: string, keys: number[]): PlanDraft {
  if (!text.trim()) throw new PlanError("empty plan string");
  const counts = COUNTS_RE.exec(text);
  if (!counts) {
    throw new PlanError("missing 'Please generate S sentences in W words.' clause");
  }
  const draft: PlanDraft = {
    numSentences: Number(counts[1]),
    numWords: Number(counts[2]),
    assignments: new Map(),
  };
  if (draft.numSentences < 1 || draft.numWords < 1) {
    throw new PlanError("sentence and word counts must be positive");
  }
  CITE_RE.lastIndex = 0;
  let clause: RegExpExecArray | null;
  while ((clause = CITE_RE.exec(text)) !== null) {
    const key = Number(clause[1]);
    for (const match of clause[2]!.matchAll(/\d+/g)) {
      const line = Number(match[0]);
      if (!draft.assignments.has(line)) draft.assignments.set(line, new Set());
      draft.assignments.get(line)!.add(key);
    }
  }
  const messages = validateDraft(draft, keys);
  if (messages.length) throw new PlanError(messages.join("; "));
  return draft;
}

/** Structural equality of two drafts (Map/Set aware). */
export function plansEqual(a: PlanDraft, b: PlanDraft): boolean {
  if (a.numSentences !== b.numSentences || a.numWords !== b.numWords) return false;
  const lines = new Set([...a.assignments.keys(), ...b.assignments.keys()]);
  for (const line of lines) {
    const left = a.assignments.get(line) ?? new Set();
    const right = b.assignments.get(line) ?? new Set();
    if (left.size !== right.size) return false;
    for (const key of left) if (!right.has(key)) return false;
  }
  return true;
}

// --- editor operations (immutable: each returns a fresh draft) ---

function cloneDraft(draft: PlanDraft): PlanDraft {
  const assignments = new Map<number, Set<number>>();
  for (const [line, keys] of draft.assignments) assignments.set(line, new Set(keys));
  return { numSentences: draft.numSentences, numWords: draft.numWords, assignments };
}

export function setSentenceCount(draft: PlanDraft, numSentences: number): PlanDraft {
  const next = cloneDraft(draft);
  next.numSentences = numSentences;
  return next;
}

export function setWordBudget(draft: PlanDraft, numWords: number): PlanDraft {
  const next = cloneDraft(draft);
  next.numWords = numWords;
  return next;
}

export function toggleKeyOnLine(draft: PlanDraft, line: number, key: number): PlanDraft {
  const next = cloneDraft(draft);
  const assigned = next.assignments.get(line) ?? new Set<number>();
  if (assigned.has(key)) assigned.delete(key);
  else assigned.add(key);
  if (assigned.size) next.assignments.set(line, assigned);
  else next.assignments.delete(line);
  return next;
}

export function extractCitedKeys(text: string): number[] {
  const out: number[] = [];
  for (const match of text.matchAll(CITATION_RE)) out.push(Number(match[1]));
  return out;
}
